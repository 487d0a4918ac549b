import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from fractions import Fraction

import numpy as np
import pytest
import tomli_w

from shelf_engine.shelf_lib.services.matrices import MatrixBuilder
from shelf_engine.shelf_lib.services.serialization import OutputWriter
from shelf_engine.shelf_lib.services.settings import DEFAULT_SETTINGS, SettingsHandler
from tests.utils import logged, loguru_caplog  # noqa: F401


@pytest.fixture
def temp_toml_file(tmp_path):
    return tmp_path / "shelf_engine.toml"


def test_defaults_are_independent_copies():
    settings = SettingsHandler.defaults()
    settings["exact"]["max_n"] = 3
    assert DEFAULT_SETTINGS["exact"]["max_n"] == 64


def test_read_without_file_returns_defaults():
    assert SettingsHandler.read_settings(None) == DEFAULT_SETTINGS


@pytest.mark.parametrize("toml_content, expected", [
    ({}, DEFAULT_SETTINGS),
    ({"exact": {"max_n": 32}}, {**DEFAULT_SETTINGS, "exact": {"max_n": 32}}),
    ({"simulate": {"seed": 7, "workers": 4}},
     {**DEFAULT_SETTINGS, "simulate": {**DEFAULT_SETTINGS["simulate"], "seed": 7, "workers": 4}}),
    ({"cache": {"enabled": False}}, {**DEFAULT_SETTINGS, "cache": {"dir": "", "enabled": False}}),
])
def test_defaults_are_applied(temp_toml_file, toml_content, expected):
    """
    Tests that missing sections and keys receive defaults and provided values are kept.
    """
    temp_toml_file.write_text(tomli_w.dumps(toml_content), encoding="utf-8")
    assert SettingsHandler.read_settings(temp_toml_file) == expected


@pytest.mark.parametrize("section, key, value", [("exact", "max_n", 1), ("guess", "slack", -0.5),
                                                 ("simulate", "seed", -4), ("simulate", "workers", True),
                                                 ("cache", "enabled", "yes"), ("simulate", "samples", "many")])
def test_invalid_values_are_replaced(temp_toml_file, loguru_caplog, section, key, value):
    loguru_caplog.clear()
    temp_toml_file.write_text(tomli_w.dumps({section: {key: value}}), encoding="utf-8")

    settings = SettingsHandler.read_settings(temp_toml_file)

    assert settings[section][key] == DEFAULT_SETTINGS[section][key]
    expected_warning = f"Invalid value {value!r} for '{section}.{key}'"
    assert logged(loguru_caplog, expected_warning), f"Expected warning '{expected_warning}' was not logged."


def test_section_that_is_not_a_table(temp_toml_file, loguru_caplog):
    loguru_caplog.clear()
    temp_toml_file.write_text('guess = 3\n', encoding="utf-8")
    assert SettingsHandler.read_settings(temp_toml_file)["guess"] == DEFAULT_SETTINGS["guess"]
    assert logged(loguru_caplog, "Configuration section '[guess]' is not a table.")


def test_syntax_error_is_raised(temp_toml_file):
    temp_toml_file.write_text("[exact\nmax_n = ", encoding="utf-8")
    with pytest.raises(tomllib.TOMLDecodeError):
        SettingsHandler.read_settings(temp_toml_file)


def test_missing_file_is_raised(tmp_path):
    with pytest.raises(FileNotFoundError):
        SettingsHandler.read_settings(tmp_path / "absent.toml")


def test_write_then_read(temp_toml_file):
    settings = SettingsHandler.defaults()
    settings["guess"]["slack"] = 1.5
    SettingsHandler.write_settings(settings, temp_toml_file)
    assert SettingsHandler.read_settings(temp_toml_file) == settings


def test_jsonable_converts_engine_values():
    payload = {"q": Fraction(-3, 6), "whole": Fraction(4), "m": MatrixBuilder.position_matrix(2),
               "array": np.array([1, 2]), "keys": {2: np.int64(5)}, "flag": True}
    assert OutputWriter.jsonable(payload) == {"q": "-1/2", "whole": "4/1", "m": [["1/2", "1/2"], ["1/2", "1/2"]],
                                              "array": [1, 2], "keys": {"2": 5}, "flag": True}
    assert json.loads(OutputWriter.to_json(payload))["q"] == "-1/2"


def test_jsonable_rejects_unknown_types():
    with pytest.raises(TypeError):
        OutputWriter.jsonable(object())


def test_csv_quotes_text_and_formats_rationals():
    text = OutputWriter.to_csv(["i", "value", "ok"], [[1, Fraction(1, 2), True], [2, 0.25, False]])
    assert text.splitlines() == ['"i","value","ok"', '1,"1/2","true"', '2,0.25,"false"']


def test_write_atomic(tmp_path):
    target = tmp_path / "nested" / "out.json"
    OutputWriter.write_atomic("{}\n", target)
    assert target.read_text(encoding="utf-8") == "{}\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.json"]


def test_settings_handler_is_a_static_utility():
    assert "TOML configuration" in SettingsHandler.__doc__
    with pytest.raises(TypeError, match="utility class"):
        SettingsHandler()

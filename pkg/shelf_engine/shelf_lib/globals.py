from pathlib import Path

# Automatically detect the root based on this file's location
BASE_DIR = Path(__file__).resolve().parent.parent.parent  # goes from shelf_lib → shelf_engine → project root

RESOURCES_PATH = BASE_DIR / "resources"
OUTPUT_SCHEMA_PATH = RESOURCES_PATH / "output-schema.json"

# Bumping the version invalidates every cached spectrum.
ARTIFACT_VERSION = "1.0.0"

EXACT_MAX_N = 64
DEFAULT_SLACK = 2.0
UPPER_ENVELOPE_MIN_N = 16

CACHE_ENV_VAR = "SHELF_ENGINE_CACHE_DIR"
DEFAULT_CACHE_DIR = Path.home() / ".cache" / "shelf_engine"

VERBOSE = True

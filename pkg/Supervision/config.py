from os import getenv, path
from dotenv import load_dotenv

load_dotenv(path.join(path.dirname(path.dirname(__file__)), "config.env"))

class Prep:
    SEED = int(getenv("SEED", "0"))
    WORKERS = max(1, int(getenv("WORKERS", "1")))
    OUTPUT_DIR = getenv("OUTPUT_DIR", "prep_out").rstrip('/')

    LOG_FILE = getenv("LOG_FILE", "").strip()
    LOG_LEVEL = getenv("LOG_LEVEL", "INFO").upper()
    TIMEZONE = getenv("TIMEZONE", "UTC")

    DEFAULT_K = int(getenv("DEFAULT_K", "6"))
    DEFAULT_ETA = float(getenv("DEFAULT_ETA", "0.5"))

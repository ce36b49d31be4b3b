import os
from pathlib import Path

from environs import Env


env = Env()


BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = env.str("SECRET_KEY", default="extra-super-secret-development-key")

DEBUG = env.bool("DEBUG", default=False)


INSTALLED_APPS = [
    # Project
    "sigvol",
]

# Commands only; nothing is stored in a database.
DATABASES: dict[str, dict[str, str]] = {}

USE_TZ = True

SIGVOL_WORKERS = env.int("SIGVOL_WORKERS", default=os.cpu_count() or 1)
SIGVOL_X_CAP = env.float("SIGVOL_X_CAP", default=1e4)
SIGVOL_SUBSTEP_KAPPA = env.float("SIGVOL_SUBSTEP_KAPPA", default=0.1)
SIGVOL_CONFIDENCE = env.float("SIGVOL_CONFIDENCE", default=0.95)
SIGVOL_CHUNK_SIZE = env.int("SIGVOL_CHUNK_SIZE", default=4096)
SIGVOL_OUTPUT_DIR = env.path("SIGVOL_OUTPUT_DIR", default=BASE_DIR / "results")
SIGVOL_LOG_LEVEL = env.log_level("SIGVOL_LOG_LEVEL", default="INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "plain"},
    },
    "loggers": {
        "sigvol": {"handlers": ["console"], "level": SIGVOL_LOG_LEVEL},
    },
}

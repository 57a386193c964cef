from pathlib import Path
import os
import sys
from dotenv import load_dotenv

# Environment variables from .env (if present)
load_dotenv()


def env_bool(key: str, default: bool = False) -> bool:
    """
    Convert environment variable to boolean safely.
    Accepts: true/false, 1/0, yes/no, on/off (case-insensitive).
    """
    return os.getenv(key, str(default)).strip().lower() in ("true", "1", "yes", "on")


def env_csv(key: str, default: str = "") -> list[str]:
    """
    Read comma-separated env var into a list, trimming spaces and removing empties.
    """
    value = os.getenv(key, default) or ""
    return [x.strip() for x in value.split(",") if x.strip()]


# ==================================================
# Paths
# ==================================================
BASE_DIR = Path(__file__).resolve().parent.parent


# ==================================================
# Core settings
# ==================================================
SECRET_KEY = os.getenv("DJANGO_SECRET_KEY", "").strip()

DEBUG = env_bool("DJANGO_DEBUG", False)

# development / production
DJANGO_ENV = os.getenv("DJANGO_ENV", "development").strip().lower()

if DJANGO_ENV == "development" and not SECRET_KEY:
    SECRET_KEY = "django-insecure-development-only"
elif not SECRET_KEY:
    raise RuntimeError("DJANGO_SECRET_KEY must be set outside development.")

ALLOWED_HOSTS = list(dict.fromkeys([*env_csv("DJANGO_ALLOWED_HOSTS", ""), "127.0.0.1", "localhost", "testserver"]))

IS_TESTING = "test" in sys.argv


# ==================================================
# Applications
# ==================================================
INSTALLED_APPS = [
    # project apps
    "circuits.apps.CircuitsConfig",
    "decoding.apps.DecodingConfig",
    "benchmarks.apps.BenchmarksConfig",
    "euclid.apps.EuclidConfig",

    # Django defaults
    "django.contrib.admin",
    "django.contrib.auth",
    "django.contrib.contenttypes",
    "django.contrib.sessions",
    "django.contrib.messages",
    "django.contrib.staticfiles",
]


# ==================================================
# Middleware
# ==================================================
MIDDLEWARE = [
    "django.middleware.security.SecurityMiddleware",
    "django.contrib.sessions.middleware.SessionMiddleware",
    "django.middleware.common.CommonMiddleware",
    "django.middleware.csrf.CsrfViewMiddleware",
    "django.contrib.auth.middleware.AuthenticationMiddleware",
    "django.contrib.messages.middleware.MessageMiddleware",
    "django.middleware.clickjacking.XFrameOptionsMiddleware",
]

X_FRAME_OPTIONS = "DENY"


# ==================================================
# URLs and templates
# ==================================================
ROOT_URLCONF = "Colorbench.urls"

TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        "DIRS": [],
        "APP_DIRS": True,
        "OPTIONS": {
            "context_processors": [
                "django.template.context_processors.request",
                "django.contrib.auth.context_processors.auth",
                "django.contrib.messages.context_processors.messages",
            ],
        },
    },
]

WSGI_APPLICATION = "Colorbench.wsgi.application"


# ==================================================
# Database
# ==================================================
# Benchmark rows are small; sqlite is enough everywhere unless DB_NAME is set.
if DJANGO_ENV == "production" and os.getenv("DB_NAME"):
    DATABASES = {
        "default": {
            "ENGINE": os.getenv("DB_ENGINE", "django.db.backends.sqlite3"),
            "NAME": os.getenv("DB_NAME"),
        }
    }
else:
    DATABASES = {
        "default": {
            "ENGINE": "django.db.backends.sqlite3",
            "NAME": BASE_DIR / "db.sqlite3",
        }
    }


# ==================================================
# Language and time zone
# ==================================================
LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = True
USE_TZ = True


# ==================================================
# Static files
# ==================================================
STATIC_URL = "/static/"
STATIC_ROOT = BASE_DIR / "staticfiles"

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# ==================================================
# Toolkit settings
# ==================================================
# Shots are decoded in batches; a batch predicted to run longer than
# COLORBENCH_MAX_BATCH_SECONDS is shrunk.
COLORBENCH_BATCH_SIZE = int(os.getenv("COLORBENCH_BATCH_SIZE", "1024"))
COLORBENCH_MAX_BATCH_SECONDS = float(os.getenv("COLORBENCH_MAX_BATCH_SECONDS", "1.0"))
COLORBENCH_DEFAULT_SHOTS = int(os.getenv("COLORBENCH_DEFAULT_SHOTS", "10000"))
COLORBENCH_DEFAULT_SEED = int(os.getenv("COLORBENCH_DEFAULT_SEED", "0"))
COLORBENCH_SAMPLER_WORKERS = int(os.getenv("COLORBENCH_SAMPLER_WORKERS", "1"))
COLORBENCH_LIKELIHOOD_RATIO = float(os.getenv("COLORBENCH_LIKELIHOOD_RATIO", "1000"))
COLORBENCH_TARGET_ERROR_RATE = float(os.getenv("COLORBENCH_TARGET_ERROR_RATE", "1e-12"))
# Strict configure raises on decoder requirement violations; lenient mode
# splits undecomposable errors by force and lets failed tours fall back to a
# local solve. Presolving answers isolated single-error clusters by lookup.
COLORBENCH_STRICT_CONFIGURE = env_bool("COLORBENCH_STRICT_CONFIGURE", True)
COLORBENCH_PRESOLVE_SINGLES = env_bool("COLORBENCH_PRESOLVE_SINGLES", True)
COLORBENCH_RUN_SLOW = env_bool("COLORBENCH_RUN_SLOW", False)
COLORBENCH_LOG_LEVEL = os.getenv("COLORBENCH_LOG_LEVEL", "INFO").strip().upper() or "INFO"


# ==================================================
# Logging
# ==================================================
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": "WARNING",
    },
    "loggers": {
        app: {
            "handlers": ["console"],
            "level": "WARNING" if IS_TESTING else COLORBENCH_LOG_LEVEL,
            "propagate": False,
        }
        for app in ("circuits", "decoding", "benchmarks", "euclid")
    },
}

"""Reference HTTP service implementing the xlrank scorer/translator protocol."""

from .config import ServiceConfig
from .app import create_app

__version__ = "0.1.0"

__all__ = ["ServiceConfig", "create_app"]

"""FastAPI service wrapping the library; the CLI is a thin client of it."""

from tailhawkes.service.app import create_app

__all__ = ["create_app"]

"""HTTP service exposing the scored corpus and committee what-if sessions."""

from .app import create_app

__all__ = ["create_app"]

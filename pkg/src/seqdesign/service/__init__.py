"""HTTP service exposing the toolkit: stateless JSON endpoints over the core package."""

from .app import create_app

__all__ = ["create_app"]

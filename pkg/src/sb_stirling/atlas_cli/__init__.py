"""Command-line interface for sb-stirling."""

from .cli import main

__all__ = ["main"]

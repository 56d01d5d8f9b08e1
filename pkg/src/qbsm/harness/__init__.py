"""Command-line harness: configuration, planner, reports and the ``qbsm`` CLI."""

from .cli import main

__all__ = ["main"]

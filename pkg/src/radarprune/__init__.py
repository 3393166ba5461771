"""Structured CNN filter pruning on synthetic radar time-frequency maps."""

__version__ = "0.1.0"

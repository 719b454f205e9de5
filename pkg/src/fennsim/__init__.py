"""Functional and cycle-approximate simulator of the FeNN SNN vector processor."""

__version__ = "0.1.0"

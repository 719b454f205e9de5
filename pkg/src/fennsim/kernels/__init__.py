"""Assembler-built FeNN programs and their host-side fixed-point mirrors."""

from .config import AdditiveMode, AlifParams, ConfigError, NumericConfig

__all__ = ["AdditiveMode", "AlifParams", "ConfigError", "NumericConfig"]

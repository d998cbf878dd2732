"""Batch renderer for publication-style figures from run exports."""

__version__ = "0.1.0"

from .render import KINDS, SchemaError

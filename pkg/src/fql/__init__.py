"""Functorial data migration: signatures, instances, and the Delta/Sigma/Pi queries."""

from .errors import FqlError
from .rewrite import Path

__all__ = ["FqlError", "Path"]

"""Exception types shared across the toolkit."""

from __future__ import annotations


class SchemgraphError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(SchemgraphError):
    """Raster inputs are empty or their shapes disagree."""


class DegenerateGeometryError(SchemgraphError):
    """Geometry input cannot form a valid polygon (too few points, collinear)."""


class EmptyInteriorError(SchemgraphError):
    """A coarse polygon covers no stroke pixels of the binary map."""


class SchemaError(SchemgraphError):
    """A document failed to parse or validate.

    Carries the offending path and a location hint (element index, line)
    so batch runs can report actionable positions.
    """

    def __init__(self, message: str, *, path=None, location=None):
        self.path = path
        self.location = location
        prefix = ""
        if path is not None:
            prefix = f"{path}: "
            if location is not None:
                prefix = f"{path} ({location}): "
        super().__init__(prefix + message)


class UnknownClassError(SchemaError):
    """An annotation carries a label outside the loaded taxonomy."""


class MetricFloorError(SchemgraphError):
    """Evaluation metrics fell below a configured floor (CI gating)."""

"""Toolkit for turning handwritten circuit diagram scans into electrical graphs.

Stages: binarize raw images, refine coarse polygon annotations against the
stroke map, derive wire polygons, generate terminal keypoints, assign them
to prototype ports, then build a typed circuit graph and its netlist.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    DegenerateGeometryError,
    DimensionError,
    EmptyInteriorError,
    MetricFloorError,
    SchemaError,
    SchemgraphError,
    UnknownClassError,
)

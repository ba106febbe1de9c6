"""Pixel kernels with an optional compiled fast path.

The compiled backend is used when the extension built; set
SCHEMGRAPH_KERNELS=pure or =compiled to force one explicitly.
`backend()` reports which implementation is live.
"""

from __future__ import annotations

import os

from . import _pure

_forced = os.environ.get("SCHEMGRAPH_KERNELS", "").strip().lower()
if _forced == "pure":
    _impl = _pure
elif _forced == "compiled":
    from . import _core as _impl  # ImportError here means the build is missing
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _pure

erode = _impl.erode
dilate = _impl.dilate
majority = _impl.majority
connected_components = _impl.connected_components
fill_polygon = _impl.fill_polygon


def backend() -> str:
    return "pure" if _impl is _pure else "compiled"


__all__ = [
    "erode",
    "dilate",
    "majority",
    "connected_components",
    "fill_polygon",
    "backend",
]

"""Raster types and stroke/background primitives.

A `GrayImage` holds 8-bit luminance, a `BinaryMap` one stroke flag per
pixel, a `LabelMap` one component id per pixel. All operations are pure:
inputs are never mutated, so they can run concurrently across images.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import kernels
from .errors import DimensionError


def _frozen_array(obj, name: str, value: np.ndarray) -> None:
    value.flags.writeable = False
    object.__setattr__(obj, name, value)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit luminance raster, shape (height, width)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.uint8)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DimensionError(f"gray image must be 2-d and non-empty, got shape {v.shape}")
        _frozen_array(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class BinaryMap:
    """Stroke/background mask; bits are uint8 0/1, shape (height, width)."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise DimensionError(f"binary map must be 2-d and non-empty, got shape {b.shape}")
        if b.max(initial=0) > 1:
            raise ValueError("binary map bits must be 0 or 1")
        _frozen_array(self, "bits", b)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def count(self) -> int:
        """Number of stroke pixels."""
        return int(self.bits.sum())

    @staticmethod
    def blank(width: int, height: int) -> "BinaryMap":
        return BinaryMap(np.zeros((height, width), np.uint8))


@dataclass(frozen=True, eq=False)
class LabelMap:
    """Connected-component ids per pixel; 0 is background, ids run 1..count."""

    labels: np.ndarray
    count: int

    def __post_init__(self):
        lab = np.ascontiguousarray(self.labels, dtype=np.int32)
        if lab.ndim != 2:
            raise DimensionError("label map must be 2-d")
        _frozen_array(self, "labels", lab)

    def mask_of(self, label: int) -> BinaryMap:
        if not 1 <= label <= self.count:
            raise ValueError(f"label {label} outside 1..{self.count}")
        return BinaryMap((self.labels == label).astype(np.uint8))

    def areas(self) -> np.ndarray:
        """Pixel count per label, index 0 unused."""
        return np.bincount(self.labels.ravel(), minlength=self.count + 1)


def otsu_threshold(values: np.ndarray) -> int:
    """Threshold maximizing between-class variance of {v < T} vs {v >= T}.

    Exact integer arithmetic; ties resolve to the smallest T. Returns 0
    (empty stroke class) when no threshold separates two non-empty classes.
    """
    hist = np.bincount(np.asarray(values, np.uint8).ravel(), minlength=256)
    counts = [int(x) for x in hist]
    total = sum(counts)
    cum_n = 0
    cum_s = 0
    sum_all = sum(i * c for i, c in enumerate(counts))
    best_t = 0
    best_num = -1
    best_den = 1
    for t in range(1, 256):
        cum_n += counts[t - 1]
        cum_s += (t - 1) * counts[t - 1]
        w0, w1 = cum_n, total - cum_n
        if w0 == 0 or w1 == 0:
            continue
        # between-class variance = (S0*w1 - S1*w0)^2 / (w0*w1), constant N^2 dropped
        num = (cum_s * w1 - (sum_all - cum_s) * w0) ** 2
        den = w0 * w1
        if num * best_den > best_num * den:
            best_num, best_den, best_t = num, den, t
    return best_t


def binarize(img: GrayImage, method: str = "otsu", threshold: int | None = None,
             polarity: str = "dark") -> BinaryMap:
    """Threshold a gray image into strokes.

    With polarity "dark", strokes are pixels with value strictly below the
    threshold. With "light", the image is inverted (255 - v) first and the
    same strict rule applies to the inverted values.
    """
    values = img.values
    if polarity == "light":
        values = 255 - values
    elif polarity != "dark":
        raise ValueError(f"polarity must be 'dark' or 'light', got {polarity!r}")
    if method == "otsu":
        t = otsu_threshold(values)
    elif method == "fixed":
        if threshold is None:
            raise ValueError("fixed method requires a threshold")
        t = int(threshold)
    else:
        raise ValueError(f"unknown binarize method {method!r}")
    return BinaryMap((values < t).astype(np.uint8))


def median_denoise(m: BinaryMap, radius: int) -> BinaryMap:
    """Majority filter over the (2r+1)^2 neighborhood, border clamped."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    return BinaryMap(kernels.majority(m.bits, radius))


def erode(m: BinaryMap, radius: int) -> BinaryMap:
    """Keep pixels whose full square neighborhood is stroke; outside counts as background."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    return BinaryMap(kernels.erode(m.bits, radius))


def dilate(m: BinaryMap, radius: int) -> BinaryMap:
    """Set pixels with any stroke in their square neighborhood."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    return BinaryMap(kernels.dilate(m.bits, radius))


def connected_components(m: BinaryMap, connectivity: int = 8) -> LabelMap:
    """Label maximal stroke components, ids in row-major first-encounter order."""
    labels, k = kernels.connected_components(m.bits, connectivity)
    return LabelMap(labels, k)


def _check_dims(a: BinaryMap, b: BinaryMap) -> None:
    if a.bits.shape != b.bits.shape:
        raise DimensionError(f"map dimensions differ: {a.bits.shape} vs {b.bits.shape}")


def mask_and(a: BinaryMap, b: BinaryMap) -> BinaryMap:
    _check_dims(a, b)
    return BinaryMap(a.bits & b.bits)


def mask_or(a: BinaryMap, b: BinaryMap) -> BinaryMap:
    _check_dims(a, b)
    return BinaryMap(a.bits | b.bits)


def mask_subtract(a: BinaryMap, b: BinaryMap) -> BinaryMap:
    """Strokes of a that are not strokes of b."""
    _check_dims(a, b)
    return BinaryMap(a.bits & (1 - b.bits))


def luminance(rgb: np.ndarray) -> np.ndarray:
    """Integer ITU-601 luma: (299R + 587G + 114B + 500) // 1000, exact half-up."""
    px = np.asarray(rgb, np.int64)
    lum = (299 * px[..., 0] + 587 * px[..., 1] + 114 * px[..., 2] + 500) // 1000
    return lum.astype(np.uint8)


def load_image(path) -> GrayImage:
    """Load an 8-bit grayscale or RGB image file as luminance."""
    with Image.open(path) as im:
        if im.mode == "L":
            return GrayImage(np.asarray(im))
        return GrayImage(luminance(np.asarray(im.convert("RGB"))))


def save_binary_map(m: BinaryMap, path) -> None:
    """Persist as a single-channel image with values {0, 255}, 255 = stroke."""
    Image.fromarray(m.bits * np.uint8(255), mode="L").save(path)


def load_binary_map(path) -> BinaryMap:
    """Load a persisted map; any value >= 128 counts as stroke."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return BinaryMap((arr >= 128).astype(np.uint8))

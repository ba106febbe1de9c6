"""Readers and writers for the pipeline's document formats.

The adapter talks to the main toolkit only through its files (see that
package's docs/formats.md): per-image bounding-box XML, LabelMe-style
polygon JSON with optional per-shape ports, and per-image prediction
JSON. These are intentionally small, self-contained parsers.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path


class DocumentError(Exception):
    pass


@dataclass(frozen=True)
class ShapeRecord:
    label: str
    points: list[list[float]]
    ports: list[dict] = field(default_factory=list)


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    width: int
    height: int
    shapes: list[ShapeRecord]


def read_image_size(path) -> tuple[int, int]:
    root = ET.parse(path).getroot()
    size = root.find("size")
    if size is None:
        raise DocumentError(f"{path}: missing <size>")
    return int(size.findtext("width")), int(size.findtext("height"))


def read_polygon_document(path) -> ImageRecord:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DocumentError(f"{path}: {exc}") from exc
    shapes = []
    for shape in doc.get("shapes", []):
        points = shape.get("points", [])
        if len(points) < 3:
            continue  # degenerate shapes carry no trainable mask
        shapes.append(ShapeRecord(str(shape["label"]),
                                  [[float(x), float(y)] for x, y in points],
                                  list(shape.get("ports") or [])))
    image_id = Path(str(doc.get("imagePath", Path(path).stem))).stem
    return ImageRecord(image_id, int(doc["imageWidth"]), int(doc["imageHeight"]), shapes)


def write_prediction_document(path, *, image_id: str, width: int, height: int,
                              instances: list[dict]) -> None:
    """``instances``: category, score, segmentation (one flat ring),
    keypoints (flat x, y, visibility)."""
    doc = {"image_id": image_id, "width": width, "height": height,
           "instances": instances}
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

"""Annotation data model and document I/O.

Document formats (pinned in docs/formats.md and validated by fixtures):

* bounding boxes — per-image VOC-style XML with optional ``rotation`` and
  ``text`` sub-elements;
* polygons — LabelMe-compatible JSON, extended with per-shape
  ``refinement`` and ``ports`` fields (LabelMe ignores unknown keys);
* predictions — per-image JSON with instances carrying category, score,
  flattened segmentation polygon, and an (x, y, visibility) keypoint array;
* prototype library — versioned JSON mapping class names to named port
  positions in the unit frame.
"""

from __future__ import annotations

import json
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources as importlib_resources
from pathlib import Path

import numpy as np

from .errors import SchemaError, UnknownClassError
from .geometry import BoundingBox, Point, Polygon, border_distance, normalize_angle

log = logging.getLogger(__name__)

WIRE_CLASS = "wire"
TEXT_CLASS = "text"
JUNCTION_CLASS = "junction"
CROSSOVER_CLASS = "crossover"
STRUCTURAL_CLASSES = frozenset({JUNCTION_CLASS, CROSSOVER_CLASS})

# Ports written by the pipeline must hug their polygon's boundary.
PORT_BORDER_TOLERANCE = 2.0


class Refinement(str, Enum):
    COARSE = "coarse"
    REFINED = "refined"
    HULL_FALLBACK = "hull-fallback"
    WIRE_AUTO = "wire-auto"


@dataclass(frozen=True)
class ClassTaxonomy:
    """The loaded object-class list plus the synthesized wire class."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise SchemaError("duplicate class names in taxonomy")

    def __contains__(self, name: str) -> bool:
        return name == WIRE_CLASS or name in self._index()

    def _index(self) -> dict[str, int]:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {n: i for i, n in enumerate(self.names)}
            self.__dict__["_idx"] = idx
        return idx

    def require(self, name: str, *, path=None, location=None) -> str:
        if name not in self:
            raise UnknownClassError(f"unknown class {name!r}", path=path, location=location)
        return name

    def index(self, name: str) -> int:
        """Stable index for palettes; wire sorts after all taxonomy classes."""
        if name == WIRE_CLASS:
            return len(self.names)
        return self._index()[name]

    def __len__(self) -> int:
        return len(self.names)


def default_taxonomy() -> ClassTaxonomy:
    doc = json.loads(
        importlib_resources.files("schemgraph.resources").joinpath("classes.json").read_text())
    return ClassTaxonomy(tuple(doc["classes"]))


def load_taxonomy(path) -> ClassTaxonomy:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read class list: {exc}", path=path) from exc
    names = doc.get("classes") if isinstance(doc, dict) else doc
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise SchemaError("class list must be a JSON array of names", path=path)
    return ClassTaxonomy(tuple(names))


@dataclass(frozen=True)
class Port:
    name: str
    x: float
    y: float

    @property
    def point(self) -> Point:
        return (self.x, self.y)


@dataclass(frozen=True)
class BBoxAnnotation:
    label: str
    box: BoundingBox
    rotation: float | None = None  # counterclockwise degrees; None = not annotated
    text_content: str | None = None


@dataclass(frozen=True)
class PolygonAnnotation:
    label: str
    outline: Polygon
    refinement: Refinement = Refinement.COARSE
    ports: tuple[Port, ...] | None = None
    source_bbox: int | None = None
    score: float | None = None

    def validate_ports(self) -> None:
        """Every port must lie within 2 px of the outline border."""
        if not self.ports:
            return
        names = [p.name for p in self.ports]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate port names on {self.label!r}: {names}")
        for p in self.ports:
            d = border_distance(self.outline, p.point)
            if d > PORT_BORDER_TOLERANCE:
                raise SchemaError(
                    f"port {p.name!r} of {self.label!r} is {d:.2f} px from the outline "
                    f"(limit {PORT_BORDER_TOLERANCE})")

    def with_ports(self, ports) -> "PolygonAnnotation":
        out = replace(self, ports=tuple(ports))
        out.validate_ports()
        return out


@dataclass(frozen=True)
class ImageAnnotationSet:
    image_id: str
    width: int
    height: int
    bboxes: tuple[BBoxAnnotation, ...] = ()
    polygons: tuple[PolygonAnnotation, ...] = ()


@dataclass(frozen=True)
class PrototypeLibrary:
    """Idealized per-class port layouts in the unit frame."""

    entries: dict[str, tuple[Port, ...]] = field(default_factory=dict)

    def get(self, label: str) -> tuple[Port, ...] | None:
        return self.entries.get(label)

    def max_ports(self) -> int:
        return max((len(v) for v in self.entries.values()), default=0)


def _validate_prototype_entry(label: str, ports, *, path=None) -> tuple[Port, ...]:
    out = []
    seen = set()
    for i, p in enumerate(ports):
        try:
            port = Port(str(p["name"]), float(p["x"]), float(p["y"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad port entry for {label!r}: {exc}",
                              path=path, location=f"port {i}") from exc
        if not (0.0 <= port.x <= 1.0 and 0.0 <= port.y <= 1.0):
            raise SchemaError(
                f"port {port.name!r} of {label!r} outside the unit frame: ({port.x}, {port.y})",
                path=path, location=f"port {i}")
        if port.name in seen:
            raise SchemaError(f"duplicate port name {port.name!r} for {label!r}",
                              path=path, location=f"port {i}")
        seen.add(port.name)
        out.append(port)
    return tuple(out)


def load_prototype_library(path) -> PrototypeLibrary:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read prototype library: {exc}", path=path) from exc
    if "schema_version" not in doc:
        raise SchemaError("prototype library missing schema_version", path=path)
    classes = doc.get("classes")
    if not isinstance(classes, dict):
        raise SchemaError("prototype library needs a 'classes' object", path=path)
    entries = {label: _validate_prototype_entry(label, ports, path=path)
               for label, ports in classes.items()}
    return PrototypeLibrary(entries)


def default_prototype_library() -> PrototypeLibrary:
    doc = json.loads(
        importlib_resources.files("schemgraph.resources").joinpath("prototypes.json").read_text())
    return PrototypeLibrary({label: _validate_prototype_entry(label, ports)
                             for label, ports in doc["classes"].items()})


def save_prototype_library(lib: PrototypeLibrary, path) -> None:
    doc = {"schema_version": 1,
           "classes": {label: [{"name": p.name, "x": p.x, "y": p.y} for p in ports]
                       for label, ports in sorted(lib.entries.items())}}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# bounding-box documents (VOC-style XML)
# ---------------------------------------------------------------------------

def load_bbox_document(path, taxonomy: ClassTaxonomy) -> ImageAnnotationSet:
    try:
        root = ET.parse(path).getroot()
    except (OSError, ET.ParseError) as exc:
        raise SchemaError(f"cannot parse bbox document: {exc}", path=path) from exc

    def _req(elem, tag, where):
        child = elem.find(tag)
        if child is None or child.text is None:
            raise SchemaError(f"missing <{tag}>", path=path, location=where)
        return child.text.strip()

    image_id = _req(root, "filename", "document")
    image_id = Path(image_id).stem
    size = root.find("size")
    if size is None:
        raise SchemaError("missing <size>", path=path, location="document")
    width = int(_req(size, "width", "size"))
    height = int(_req(size, "height", "size"))
    if width < 1 or height < 1:
        raise SchemaError(f"bad image size {width}x{height}", path=path, location="size")

    bboxes = []
    for i, obj in enumerate(root.iter("object")):
        where = f"object {i}"
        label = taxonomy.require(_req(obj, "name", where), path=path, location=where)
        bb = obj.find("bndbox")
        if bb is None:
            raise SchemaError("missing <bndbox>", path=path, location=where)
        try:
            raw = BoundingBox(float(_req(bb, "xmin", where)), float(_req(bb, "ymin", where)),
                              float(_req(bb, "xmax", where)), float(_req(bb, "ymax", where)))
            box = raw.clamped(width, height)
        except Exception as exc:
            raise SchemaError(f"invalid box geometry: {exc}", path=path, location=where) from exc
        rot_el = obj.find("rotation")
        rotation = None
        if rot_el is not None and rot_el.text and rot_el.text.strip():
            rotation = normalize_angle(float(rot_el.text))
        elif label not in STRUCTURAL_CLASSES and label != TEXT_CLASS:
            log.debug("%s %s: %s has no rotation; port matching will be unverified",
                      path, where, label)
        text_el = obj.find("text")
        text_content = text_el.text if text_el is not None and text_el.text else None
        bboxes.append(BBoxAnnotation(label, box, rotation, text_content))
    return ImageAnnotationSet(image_id, width, height, bboxes=tuple(bboxes))


def save_bbox_document(anns: ImageAnnotationSet, path) -> None:
    root = ET.Element("annotation")
    ET.SubElement(root, "filename").text = f"{anns.image_id}.png"
    size = ET.SubElement(root, "size")
    ET.SubElement(size, "width").text = str(anns.width)
    ET.SubElement(size, "height").text = str(anns.height)
    ET.SubElement(size, "depth").text = "1"
    for b in anns.bboxes:
        obj = ET.SubElement(root, "object")
        ET.SubElement(obj, "name").text = b.label
        if b.rotation is not None:
            ET.SubElement(obj, "rotation").text = _fmt(b.rotation)
        if b.text_content is not None:
            ET.SubElement(obj, "text").text = b.text_content
        bb = ET.SubElement(obj, "bndbox")
        ET.SubElement(bb, "xmin").text = _fmt(b.box.xmin)
        ET.SubElement(bb, "ymin").text = _fmt(b.box.ymin)
        ET.SubElement(bb, "xmax").text = _fmt(b.box.xmax)
        ET.SubElement(bb, "ymax").text = _fmt(b.box.ymax)
    tree = ET.ElementTree(root)
    ET.indent(tree)
    tree.write(path, encoding="unicode")
    with open(path, "a") as fh:
        fh.write("\n")


def _fmt(value: float) -> str:
    """Render floats without a trailing .0 for integral values."""
    f = float(value)
    return str(int(f)) if f.is_integer() else repr(f)


# ---------------------------------------------------------------------------
# polygon documents (LabelMe-compatible JSON)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegenerateShape:
    """A shape that could not form a valid polygon; reported, never dropped silently."""

    index: int
    label: str
    reason: str


def _shape_to_annotation(shape: dict, idx: int, taxonomy: ClassTaxonomy, path):
    where = f"shape {idx}"
    label = taxonomy.require(str(shape.get("label", "")), path=path, location=where)
    points = shape.get("points", [])
    if len(points) < 3:
        return DegenerateShape(idx, label, f"{len(points)} points")
    arr = np.asarray(points, np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or not np.isfinite(arr).all():
        return DegenerateShape(idx, label, "malformed point array")
    refinement = Refinement(shape.get("refinement", Refinement.COARSE.value))
    ports = None
    if shape.get("ports"):
        ports = tuple(Port(str(p["name"]), float(p["x"]), float(p["y"]))
                      for p in shape["ports"])
    source_bbox = shape.get("source_bbox")
    ann = PolygonAnnotation(label, Polygon(arr), refinement, ports,
                            None if source_bbox is None else int(source_bbox),
                            shape.get("score"))
    ann.validate_ports()
    return ann


def load_polygon_document(path, taxonomy: ClassTaxonomy):
    """Returns (annotations, degenerate shape reports)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot parse polygon document: {exc}", path=path) from exc
    shapes = doc.get("shapes")
    if shapes is None:
        raise SchemaError("polygon document missing 'shapes'", path=path)
    annotations: list[PolygonAnnotation] = []
    degenerate: list[DegenerateShape] = []
    for i, shape in enumerate(shapes):
        try:
            out = _shape_to_annotation(shape, i, taxonomy, path)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad shape: {exc}", path=path, location=f"shape {i}") from exc
        if isinstance(out, DegenerateShape):
            degenerate.append(out)
        else:
            annotations.append(out)
    return annotations, degenerate


def save_polygon_document(polygons, path, *, image_id: str, width: int, height: int) -> None:
    shapes = []
    for ann in polygons:
        ann.validate_ports()
        shape = {
            "label": ann.label,
            "points": [[float(x), float(y)] for x, y in ann.outline.vertices],
            "group_id": None,
            "shape_type": "polygon",
            "flags": {},
            "refinement": ann.refinement.value,
        }
        if ann.ports is not None:
            shape["ports"] = [{"name": p.name, "x": p.x, "y": p.y} for p in ann.ports]
        if ann.source_bbox is not None:
            shape["source_bbox"] = ann.source_bbox
        if ann.score is not None:
            shape["score"] = ann.score
        shapes.append(shape)
    doc = {
        "version": "5.3.1",
        "flags": {},
        "shapes": shapes,
        "imagePath": f"{image_id}.png",
        "imageHeight": height,
        "imageWidth": width,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# prediction documents (per-image instance JSON)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PredictedInstance:
    annotation: PolygonAnnotation
    keypoints: tuple[Point, ...]  # visible keypoints only


def load_prediction_document(path, taxonomy: ClassTaxonomy):
    """Returns (image_id, width, height, instances)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot parse prediction document: {exc}", path=path) from exc
    for key in ("image_id", "width", "height", "instances"):
        if key not in doc:
            raise SchemaError(f"prediction document missing {key!r}", path=path)
    instances = []
    for i, inst in enumerate(doc["instances"]):
        where = f"instance {i}"
        label = taxonomy.require(str(inst.get("category", "")), path=path, location=where)
        seg = inst.get("segmentation")
        if not seg or not isinstance(seg, list):
            raise SchemaError("missing segmentation", path=path, location=where)
        flat = seg[0] if isinstance(seg[0], list) else seg
        if len(flat) < 6 or len(flat) % 2:
            raise SchemaError(f"segmentation needs >= 3 xy pairs, got {len(flat)} values",
                              path=path, location=where)
        outline = Polygon(np.asarray(flat, np.float64).reshape(-1, 2))
        score = inst.get("score")
        kps: list[Point] = []
        raw_kp = inst.get("keypoints", [])
        if len(raw_kp) % 3:
            raise SchemaError("keypoints must be (x, y, visibility) triples",
                              path=path, location=where)
        for j in range(0, len(raw_kp), 3):
            if raw_kp[j + 2] > 0:
                kps.append((float(raw_kp[j]), float(raw_kp[j + 1])))
        ann = PolygonAnnotation(label, outline, Refinement.COARSE,
                                score=None if score is None else float(score))
        instances.append(PredictedInstance(ann, tuple(kps)))
    return doc["image_id"], int(doc["width"]), int(doc["height"]), instances


def save_prediction_document(path, *, image_id: str, width: int, height: int, instances) -> None:
    out = []
    for inst in instances:
        ann = inst.annotation
        seg = [float(v) for xy in ann.outline.vertices for v in xy]
        kps = [v for (x, y) in inst.keypoints for v in (float(x), float(y), 2)]
        rec = {"category": ann.label, "segmentation": [seg], "keypoints": kps}
        if ann.score is not None:
            rec["score"] = float(ann.score)
        out.append(rec)
    doc = {"image_id": image_id, "width": width, "height": height, "instances": out}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

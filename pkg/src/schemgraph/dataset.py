"""Directory-convention dataset layout and corpus statistics.

Layout (overridable via the config file):

    root/
      images/       raw photographs or scans
      binmaps/      externally corrected stroke maps (take precedence)
      bboxes/       per-image bounding-box XML
      polygons/     per-image polygon JSON (ground truth)
      predictions/  per-image prediction JSON
      out/          everything the pipeline writes
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .annotations import ClassTaxonomy, load_bbox_document, load_polygon_document

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class DatasetLayout:
    root: Path
    images: Path
    binmaps: Path
    bboxes: Path
    polygons: Path
    predictions: Path
    out: Path

    @staticmethod
    def at(root, overrides: dict | None = None) -> "DatasetLayout":
        root = Path(root)
        cfg = overrides or {}

        def sub(key: str, default: str) -> Path:
            raw = cfg.get(key, default)
            p = Path(raw)
            return p if p.is_absolute() else root / p

        return DatasetLayout(root, sub("images_dir", "images"),
                             sub("binmaps_dir", "binmaps"), sub("bboxes_dir", "bboxes"),
                             sub("polygons_dir", "polygons"),
                             sub("predictions_dir", "predictions"), sub("out_dir", "out"))

    def image_ids(self) -> list[str]:
        ids = set()
        if self.images.is_dir():
            for p in self.images.iterdir():
                if p.suffix.lower() in IMAGE_SUFFIXES:
                    ids.add(p.stem)
        if self.bboxes.is_dir():
            for p in self.bboxes.glob("*.xml"):
                ids.add(p.stem)
        return sorted(ids)

    def image_path(self, image_id: str) -> Path | None:
        for suffix in IMAGE_SUFFIXES:
            p = self.images / f"{image_id}{suffix}"
            if p.exists():
                return p
        return None

    def binmap_path(self, image_id: str) -> Path:
        """Externally supplied maps win over generated ones."""
        supplied = self.binmaps / f"{image_id}.png"
        if supplied.exists():
            return supplied
        return self.out / "binmaps" / f"{image_id}.png"


@dataclass
class DatasetStats:
    images: int = 0
    boxes: int = 0
    classes: int = 0
    binmaps: int = 0
    polygons: int = 0
    box_histogram: dict[str, int] = field(default_factory=dict)
    polygon_histogram: dict[str, int] = field(default_factory=dict)
    missing: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "images": self.images, "boxes": self.boxes, "classes": self.classes,
            "binmaps": self.binmaps, "polygons": self.polygons,
            "box_histogram": dict(sorted(self.box_histogram.items())),
            "polygon_histogram": dict(sorted(self.polygon_histogram.items())),
            "missing": self.missing,
        }


def dataset_stats(layout: DatasetLayout, taxonomy: ClassTaxonomy) -> DatasetStats:
    """Counts and per-class histograms over the corpus; missing files reported per image."""
    stats = DatasetStats()
    if layout.images.is_dir():
        stats.images = sum(1 for p in layout.images.iterdir()
                           if p.suffix.lower() in IMAGE_SUFFIXES)
    if layout.binmaps.is_dir():
        stats.binmaps = sum(1 for _ in layout.binmaps.glob("*.png"))
    if layout.bboxes.is_dir():
        for p in sorted(layout.bboxes.glob("*.xml")):
            try:
                anns = load_bbox_document(p, taxonomy)
            except Exception as exc:
                stats.missing.append({"image": p.stem, "problem": str(exc)})
                continue
            stats.boxes += len(anns.bboxes)
            for b in anns.bboxes:
                stats.box_histogram[b.label] = stats.box_histogram.get(b.label, 0) + 1
            if layout.images.is_dir() and layout.image_path(anns.image_id) is None:
                stats.missing.append({"image": anns.image_id, "problem": "no image file"})
    if layout.polygons.is_dir():
        for p in sorted(layout.polygons.glob("*.json")):
            try:
                polys, degenerate = load_polygon_document(p, taxonomy)
            except Exception as exc:
                stats.missing.append({"image": p.stem, "problem": str(exc)})
                continue
            stats.polygons += len(polys) + len(degenerate)
            for ann in polys:
                stats.polygon_histogram[ann.label] = \
                    stats.polygon_histogram.get(ann.label, 0) + 1
    stats.classes = len(stats.box_histogram)
    return stats


def write_json(path: Path, payload: dict) -> None:
    """Canonical JSON writer used for every machine-readable artifact."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

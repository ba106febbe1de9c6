"""Conversion of annotation documents into detector training datasets.

Output is a COCO-style JSON per split (images, annotations with polygon
segmentation and fixed-length keypoint arrays, categories). Keypoint
padding: every instance carries ``keypoint_slots`` (x, y, visibility)
triples, where ``keypoint_slots`` is the maximum port count seen in the
corpus; unused slots are (0, 0, 0). Splits are assigned per replica
group, never per image, so all photographs/drawings of one circuit stay
on one side.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .formats import DocumentError, read_polygon_document

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def group_key(image_id: str) -> str:
    """Replica group of an image id.

    Corpus ids look like C12_D1_P3 (circuit, drawing, photograph); every
    circuit occurs as several drawings x photographs, and those replicas
    must never straddle a split boundary. The group is the leading token.
    """
    return image_id.split("_", 1)[0]


def make_split(image_ids, val_every: int = 5) -> dict:
    """Deterministic group-aware split: every ``val_every``-th group is validation."""
    groups = sorted({group_key(i) for i in image_ids})
    val = set(groups[val_every - 1::val_every])
    return {"train": [g for g in groups if g not in val], "val": sorted(val)}


def load_split_manifest(path) -> dict:
    doc = json.loads(Path(path).read_text())
    for key in ("train", "val"):
        if key not in doc or not isinstance(doc[key], list):
            raise DocumentError(f"{path}: split manifest needs 'train' and 'val' lists")
    overlap = set(doc["train"]) & set(doc["val"])
    if overlap:
        raise DocumentError(f"{path}: groups in both splits: {sorted(overlap)}")
    return {"train": list(doc["train"]), "val": list(doc["val"])}


def _find_image(images_dir: Path, image_id: str) -> Path | None:
    for suffix in IMAGE_SUFFIXES:
        p = images_dir / f"{image_id}{suffix}"
        if p.exists():
            return p
    return None


@dataclass
class ConversionResult:
    out_dir: Path
    counts: dict
    skipped: list[dict]


def convert_dataset(images_dir, polygons_dir, out_dir, split_manifest: dict | None = None,
                    val_every: int = 5) -> ConversionResult:
    """Build train/val detector datasets from annotation documents.

    Images without a polygon document are skipped and listed in the
    conversion manifest. The conversion is a pure function of its inputs
    and the split manifest.
    """
    images_dir = Path(images_dir)
    polygons_dir = Path(polygons_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    image_ids = sorted(p.stem for p in images_dir.iterdir()
                       if p.suffix.lower() in IMAGE_SUFFIXES) if images_dir.is_dir() else []
    records = []
    skipped = []
    for image_id in image_ids:
        doc_path = polygons_dir / f"{image_id}.json"
        if not doc_path.exists():
            skipped.append({"image": image_id, "reason": "no polygon document"})
            continue
        try:
            rec = read_polygon_document(doc_path)
        except DocumentError as exc:
            skipped.append({"image": image_id, "reason": str(exc)})
            continue
        records.append((image_id, _find_image(images_dir, image_id), rec))

    if split_manifest is None:
        split_manifest = make_split([r[0] for r in records], val_every)
    train_groups = set(split_manifest["train"])
    val_groups = set(split_manifest["val"])

    labels = sorted({s.label for _, _, rec in records for s in rec.shapes})
    categories = [{"id": i + 1, "name": name} for i, name in enumerate(labels)]
    cat_ids = {name: i + 1 for i, name in enumerate(labels)}
    keypoint_slots = max([len(s.ports) for _, _, rec in records for s in rec.shapes],
                         default=1) or 1

    splits = {"train": _empty_split(categories, keypoint_slots),
              "val": _empty_split(categories, keypoint_slots)}
    counts = {"train": 0, "val": 0, "annotations": 0}
    ann_id = 0
    for image_id, image_path, rec in records:
        group = group_key(image_id)
        if group in train_groups:
            split = "train"
        elif group in val_groups:
            split = "val"
        else:
            skipped.append({"image": image_id, "reason": f"group {group!r} not in manifest"})
            continue
        doc = splits[split]
        img_idx = len(doc["images"])
        doc["images"].append({
            "id": img_idx,
            "image_id": image_id,
            "file_name": image_path.name if image_path else f"{image_id}.png",
            "path": str(image_path) if image_path else None,
            "width": rec.width,
            "height": rec.height,
        })
        counts[split] += 1
        for shape in rec.shapes:
            xs = [p[0] for p in shape.points]
            ys = [p[1] for p in shape.points]
            kps = []
            for port in shape.ports[:keypoint_slots]:
                kps.extend([float(port["x"]), float(port["y"]), 2])
            while len(kps) < 3 * keypoint_slots:
                kps.extend([0.0, 0.0, 0])
            doc["annotations"].append({
                "id": ann_id,
                "image": img_idx,
                "category_id": cat_ids[shape.label],
                "bbox": [min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys)],
                "segmentation": [[v for xy in shape.points for v in xy]],
                "keypoints": kps,
                "num_ports": len(shape.ports),
            })
            ann_id += 1
            counts["annotations"] += 1
    for split, doc in splits.items():
        (out_dir / f"{split}.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n")
    manifest = {"split": {"train": sorted(train_groups), "val": sorted(val_groups)},
                "counts": counts, "skipped": skipped}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ConversionResult(out_dir, counts, skipped)


def _empty_split(categories, keypoint_slots) -> dict:
    return {"categories": categories, "keypoint_slots": keypoint_slots,
            "images": [], "annotations": []}


def rasterize_ring(points, width: int, height: int) -> np.ndarray:
    """Training-mask fill via PIL; the annotation pipeline's own rasterizer
    stays the reference for evaluation geometry."""
    img = Image.new("L", (width, height), 0)
    ImageDraw.Draw(img).polygon([(float(x), float(y)) for x, y in points],
                                fill=1, outline=1)
    return np.asarray(img, dtype=np.uint8)


class DetectionDataset:
    """Loads a converted split as (image tensor, torchvision target) pairs."""

    def __init__(self, split_path):
        import torch  # deferred: keep conversion usable without torch

        self._torch = torch
        doc = json.loads(Path(split_path).read_text())
        self.categories = doc["categories"]
        self.keypoint_slots = int(doc["keypoint_slots"])
        self.images = doc["images"]
        self.by_image: dict[int, list[dict]] = {}
        for ann in doc["annotations"]:
            self.by_image.setdefault(ann["image"], []).append(ann)

    def __len__(self) -> int:
        return len(self.images)

    def __getitem__(self, idx: int):
        torch = self._torch
        info = self.images[idx]
        with Image.open(info["path"]) as im:
            rgb = np.asarray(im.convert("RGB"), np.float32) / 255.0
        image = torch.from_numpy(rgb).permute(2, 0, 1)
        anns = self.by_image.get(info["id"], [])
        boxes, labels, masks, keypoints = [], [], [], []
        for ann in anns:
            x, y, w, h = ann["bbox"]
            if w < 1 or h < 1:
                continue
            boxes.append([x, y, x + w, y + h])
            labels.append(ann["category_id"])
            ring = np.asarray(ann["segmentation"][0], np.float64).reshape(-1, 2)
            masks.append(rasterize_ring(ring, info["width"], info["height"]))
            keypoints.append(np.asarray(ann["keypoints"], np.float32).reshape(-1, 3))
        target = {
            "boxes": torch.as_tensor(boxes, dtype=torch.float32).reshape(-1, 4),
            "labels": torch.as_tensor(labels, dtype=torch.int64),
            "masks": torch.as_tensor(np.array(masks, np.uint8)) if masks
            else torch.zeros((0, info["height"], info["width"]), dtype=torch.uint8),
            "keypoints": torch.as_tensor(np.array(keypoints, np.float32)) if keypoints
            else torch.zeros((0, self.keypoint_slots, 3), dtype=torch.float32),
            "image_id": torch.tensor([idx]),
        }
        return image, target

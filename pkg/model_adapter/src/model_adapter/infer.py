"""Inference: images in, per-image prediction documents out.

Documents use the exact schema the annotation pipeline validates; mask
to polygon conversion uses the same outer-contour semantics as that
pipeline (see contours.py).
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .contours import mask_to_polygon
from .dataset import IMAGE_SUFFIXES
from .formats import read_polygon_document, write_prediction_document
from .model import load_checkpoint

log = logging.getLogger(__name__)


def _load_image_tensor(path):
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), np.float32) / 255.0
    return torch.from_numpy(rgb).permute(2, 0, 1), rgb.shape[1], rgb.shape[0]


@torch.no_grad()
def predict_image(model, categories, keypoint_slots: int, path,
                  score_threshold: float = 0.5, mask_threshold: float = 0.5) -> dict:
    """Prediction document payload for one image."""
    image, width, height = _load_image_tensor(path)
    output = model([image])[0]
    names = {c["id"]: c["name"] for c in categories}
    instances = []
    for i in range(len(output["scores"])):
        score = float(output["scores"][i])
        if score < score_threshold:
            continue
        mask = (output["masks"][i, 0].numpy() >= mask_threshold)
        ring = mask_to_polygon(mask)
        if ring is None:
            continue
        kps = []
        if "keypoints" in output:
            for k in range(keypoint_slots):
                x, y, v = output["keypoints"][i][k].tolist()
                kps.extend([float(x), float(y), 2 if v > 0 else 0])
        instances.append({
            "category": names[int(output["labels"][i])],
            "score": score,
            "segmentation": [[float(v) for xy in ring for v in xy]],
            "keypoints": kps,
        })
    return {"image_id": Path(path).stem, "width": width, "height": height,
            "instances": instances}


def run_inference(checkpoint_path, images_dir, out_dir,
                  score_threshold: float = 0.5) -> dict:
    """Predict every image in a directory; unreadable files become error
    entries in the returned manifest and the run continues."""
    model, categories, keypoint_slots, _cfg = load_checkpoint(checkpoint_path)
    images_dir = Path(images_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    errors = []
    for path in sorted(images_dir.iterdir()):
        if path.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        try:
            doc = predict_image(model, categories, keypoint_slots, path,
                                score_threshold)
        except Exception as exc:
            log.error("%s: %s", path.name, exc)
            errors.append({"image": path.stem, "error": str(exc)})
            continue
        target = out_dir / f"{path.stem}.json"
        write_prediction_document(target, image_id=doc["image_id"],
                                  width=doc["width"], height=doc["height"],
                                  instances=doc["instances"])
        written.append(path.stem)
    manifest = {"written": written, "errors": errors}
    (out_dir / "inference_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def passthrough(polygons_dir, out_dir, keypoint_slots: int | None = None) -> list[str]:
    """Re-emit ground-truth polygon documents as perfect-score predictions.

    An identity check for the document contract: the annotation pipeline
    must score these at F1 = 1.0 against the same ground truth.
    """
    polygons_dir = Path(polygons_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for doc_path in sorted(polygons_dir.glob("*.json")):
        rec = read_polygon_document(doc_path)
        slots = keypoint_slots
        if slots is None:
            slots = max((len(s.ports) for s in rec.shapes), default=1) or 1
        instances = []
        for shape in rec.shapes:
            kps = []
            for port in shape.ports[:slots]:
                kps.extend([float(port["x"]), float(port["y"]), 2])
            while len(kps) < 3 * slots:
                kps.extend([0.0, 0.0, 0])
            instances.append({
                "category": shape.label,
                "score": 1.0,
                "segmentation": [[float(v) for xy in shape.points for v in xy]],
                "keypoints": kps,
            })
        write_prediction_document(out_dir / f"{rec.image_id}.json",
                                  image_id=rec.image_id, width=rec.width,
                                  height=rec.height, instances=instances)
        written.append(rec.image_id)
    return written

"""Config-driven training loop with periodic validation logging."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import torch
import yaml

from .dataset import DetectionDataset
from .model import build_model, save_checkpoint

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    learning_rate: float = 0.0005
    batch_size: int = 4
    iterations: int = 7000
    momentum: float = 0.9
    weight_decay: float = 0.0001
    backbone: str = "resnet18"
    min_size: int = 320
    max_size: int = 640
    eval_period: int = 250
    log_period: int = 10
    seed: int = 0
    device: str = "cpu"

    def validate(self) -> "TrainConfig":
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        return self


def load_config(path) -> TrainConfig:
    raw = yaml.safe_load(Path(path).read_text()) or {}
    known = {f.name for f in fields(TrainConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    return TrainConfig(**raw).validate()


def _collate(batch):
    return tuple(zip(*batch))


def _loader(dataset, batch_size: int, seed: int, shuffle: bool):
    generator = torch.Generator()
    generator.manual_seed(seed)
    return torch.utils.data.DataLoader(dataset, batch_size=batch_size, shuffle=shuffle,
                                       generator=generator if shuffle else None,
                                       collate_fn=_collate, num_workers=0)


def _box_iou(a, b) -> float:
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    ix = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    iy = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = ix * iy
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union if union > 0 else 0.0


@torch.no_grad()
def _validation_metrics(model, val_dataset, device) -> dict:
    """Validation loss (train-mode forward) and mask pixel accuracy on
    IoU-matched detections."""
    if len(val_dataset) == 0:
        return {"val_loss": math.nan, "mask_accuracy": math.nan}
    was_training = model.training
    model.train()
    total = 0.0
    batches = 0
    for i in range(len(val_dataset)):
        image, target = val_dataset[i]
        losses = model([image.to(device)], [{k: v.to(device) for k, v in target.items()}])
        total += float(sum(losses.values()))
        batches += 1
    val_loss = total / batches
    model.eval()
    correct = 0
    counted = 0
    for i in range(len(val_dataset)):
        image, target = val_dataset[i]
        pred = model([image.to(device)])[0]
        for gi in range(len(target["boxes"])):
            gbox = target["boxes"][gi].tolist()
            glabel = int(target["labels"][gi])
            best = None
            for pi in range(len(pred["boxes"])):
                if int(pred["labels"][pi]) != glabel:
                    continue
                iou = _box_iou(gbox, pred["boxes"][pi].tolist())
                if iou >= 0.5 and (best is None or iou > best[0]):
                    best = (iou, pi)
            if best is None:
                continue
            gmask = target["masks"][gi].numpy().astype(bool)
            pmask = (pred["masks"][best[1], 0].cpu().numpy() >= 0.5)
            x0, y0, x1, y1 = (int(v) for v in gbox)
            window = (slice(max(0, y0), y1 + 1), slice(max(0, x0), x1 + 1))
            correct += int((gmask[window] == pmask[window]).sum())
            counted += int(np.prod(gmask[window].shape))
    accuracy = correct / counted if counted else math.nan
    if was_training:
        model.train()
    return {"val_loss": val_loss, "mask_accuracy": accuracy}


def train(config: TrainConfig, data_dir, out_dir) -> Path:
    """Train on data_dir/train.json, validate on data_dir/val.json.

    Writes metrics.jsonl (per-iteration losses plus periodic validation
    rows) and model.pt; returns the checkpoint path.
    """
    config.validate()
    data_dir = Path(data_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(config.seed)
    device = torch.device(config.device)
    train_ds = DetectionDataset(data_dir / "train.json")
    val_ds = DetectionDataset(data_dir / "val.json")
    if len(train_ds) == 0:
        raise ConfigError(f"{data_dir}/train.json contains no images")
    model = build_model(len(train_ds.categories) + 1, train_ds.keypoint_slots,
                        backbone=config.backbone, min_size=config.min_size,
                        max_size=config.max_size).to(device)
    model.train()
    params = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.SGD(params, lr=config.learning_rate,
                                momentum=config.momentum,
                                weight_decay=config.weight_decay)
    loader = _loader(train_ds, config.batch_size, config.seed, shuffle=True)
    metrics_path = out_dir / "metrics.jsonl"
    iteration = 0
    with metrics_path.open("w") as metrics:
        while iteration < config.iterations:
            for images, targets in loader:
                iteration += 1
                images = [im.to(device) for im in images]
                targets = [{k: v.to(device) for k, v in t.items()} for t in targets]
                losses = model(images, targets)
                loss = sum(losses.values())
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                if iteration == 1 or iteration % config.log_period == 0 \
                        or iteration == config.iterations:
                    row = {"iteration": iteration, "loss": float(loss.detach())}
                    row.update({k: float(v.detach()) for k, v in losses.items()})
                    metrics.write(json.dumps(row, sort_keys=True) + "\n")
                    metrics.flush()
                    log.info("iter %d loss %.4f", iteration, row["loss"])
                if iteration % config.eval_period == 0 or iteration == config.iterations:
                    row = {"iteration": iteration}
                    row.update(_validation_metrics(model, val_ds, device))
                    metrics.write(json.dumps(row, sort_keys=True) + "\n")
                    metrics.flush()
                    model.train()
                if iteration >= config.iterations:
                    break
    checkpoint = out_dir / "model.pt"
    save_checkpoint(checkpoint, model, train_ds.categories, train_ds.keypoint_slots,
                    asdict(config))
    return checkpoint

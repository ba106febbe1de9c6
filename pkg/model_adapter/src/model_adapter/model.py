"""Instance segmentation + keypoint model assembled from torchvision parts.

A Mask R-CNN with an additional keypoint branch on the shared RoI heads,
so one forward pass yields boxes, classes, masks, and the fixed-length
port keypoint slots. Backbones: resnet FPNs for quality, a mobilenet FPN
for CPU smoke runs.
"""

from __future__ import annotations

import torch
from torchvision.models.detection.anchor_utils import AnchorGenerator
from torchvision.models.detection.backbone_utils import (
    mobilenet_backbone,
    resnet_fpn_backbone,
)
from torchvision.models.detection.keypoint_rcnn import (
    KeypointRCNNHeads,
    KeypointRCNNPredictor,
)
from torchvision.models.detection.mask_rcnn import MaskRCNN
from torchvision.ops import MultiScaleRoIAlign

RESNET_BACKBONES = ("resnet18", "resnet34", "resnet50")
MOBILENET_BACKBONES = ("mobilenet_v3_small", "mobilenet_v3_large")


def build_model(num_classes: int, num_keypoints: int, *, backbone: str = "resnet18",
                min_size: int = 320, max_size: int = 640) -> MaskRCNN:
    """num_classes counts the background: 1 + number of categories."""
    if num_keypoints < 1:
        raise ValueError("num_keypoints must be >= 1")
    if backbone in RESNET_BACKBONES:
        body = resnet_fpn_backbone(backbone_name=backbone, weights=None,
                                   trainable_layers=5)
        featmaps = ["0", "1", "2", "3"]
        extra = {}
    elif backbone in MOBILENET_BACKBONES:
        body = mobilenet_backbone(backbone_name=backbone, weights=None, fpn=True,
                                  trainable_layers=6)
        featmaps = ["0", "1"]
        # the mobilenet FPN exposes fewer pyramid levels than the MaskRCNN
        # defaults assume, so anchors and pools are given explicitly
        anchors = AnchorGenerator(sizes=((16, 32), (32, 64), (64, 128)),
                                  aspect_ratios=((0.5, 1.0, 2.0),) * 3)
        extra = {
            "rpn_anchor_generator": anchors,
            "box_roi_pool": MultiScaleRoIAlign(featmaps, 7, 2),
            "mask_roi_pool": MultiScaleRoIAlign(featmaps, 14, 2),
        }
    else:
        raise ValueError(f"unknown backbone {backbone!r}; pick one of "
                         f"{RESNET_BACKBONES + MOBILENET_BACKBONES}")
    model = MaskRCNN(body, num_classes=num_classes, min_size=min_size, max_size=max_size,
                     box_detections_per_img=64, **extra)
    head_width = 256 if backbone in RESNET_BACKBONES else 128
    model.roi_heads.keypoint_roi_pool = MultiScaleRoIAlign(featmaps, 14, 2)
    model.roi_heads.keypoint_head = KeypointRCNNHeads(body.out_channels,
                                                      (head_width, head_width))
    model.roi_heads.keypoint_predictor = KeypointRCNNPredictor(head_width, num_keypoints)
    return model


def save_checkpoint(path, model, categories, keypoint_slots: int, config: dict) -> None:
    torch.save({
        "model_state": model.state_dict(),
        "categories": categories,
        "keypoint_slots": keypoint_slots,
        "config": config,
    }, path)


def load_checkpoint(path):
    """Returns (model in eval mode, categories, keypoint_slots, config)."""
    payload = torch.load(path, map_location="cpu", weights_only=False)
    config = payload["config"]
    model = build_model(len(payload["categories"]) + 1, payload["keypoint_slots"],
                        backbone=config.get("backbone", "resnet18"),
                        min_size=config.get("min_size", 320),
                        max_size=config.get("max_size", 640))
    model.load_state_dict(payload["model_state"])
    model.eval()
    return model, payload["categories"], payload["keypoint_slots"], config

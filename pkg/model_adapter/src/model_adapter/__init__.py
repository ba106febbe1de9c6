"""Detector adapter: converts annotation documents to training data,
trains the instance-segmentation + keypoint model, and emits prediction
documents in the schema the annotation pipeline validates."""

__version__ = "0.1.0"

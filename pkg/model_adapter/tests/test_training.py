from __future__ import annotations

import json
import math
from importlib import resources

import pytest
import yaml

from model_adapter.train import ConfigError, TrainConfig, load_config


def test_shipped_default_config_carries_full_scale_settings():
    raw = yaml.safe_load(
        resources.files("model_adapter.configs").joinpath("default.yaml").read_text())
    assert raw["learning_rate"] == 0.0005
    assert raw["batch_size"] == 4
    assert raw["iterations"] == 7000


def test_config_rejects_zero_batch_size(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("batch_size: 0\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("warp_factor: 9\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_config_defaults_are_valid():
    assert TrainConfig().validate().batch_size == 4


def test_smoke_training_reduces_loss(smoke_checkpoint):
    metrics_path = smoke_checkpoint.parent / "metrics.jsonl"
    rows = [json.loads(line) for line in metrics_path.read_text().splitlines()]
    losses = {row["iteration"]: row["loss"] for row in rows if "loss" in row}
    assert 1 in losses and 50 in losses
    assert losses[50] < losses[1], f"loss went {losses[1]:.3f} -> {losses[50]:.3f}"
    val_rows = [row for row in rows if "val_loss" in row]
    assert val_rows, "eval period must produce validation rows"
    for row in val_rows:
        assert math.isfinite(row["val_loss"])
        assert "mask_accuracy" in row
    assert smoke_checkpoint.exists()

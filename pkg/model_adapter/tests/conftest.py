from __future__ import annotations

import shutil
import subprocess
import sys
from pathlib import Path

import pytest

# The fixture corpus is produced by the annotation pipeline itself (its
# renderer and CLI); the adapter under test touches only the files.
from PIL import Image
from schemgraph.annotations import save_bbox_document
from schemgraph.synthetic import random_circuit


def run_primary(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "schemgraph.cli", *args],
                          capture_output=True, text=True)


@pytest.fixture(scope="session")
def annotated_corpus(tmp_path_factory) -> Path:
    """10 rendered circuits, run through the full annotation pipeline.

    Returns the dataset root; images/ holds the scans, out/polygons the
    refined polygon documents with ports.
    """
    root = tmp_path_factory.mktemp("corpus")
    (root / "images").mkdir()
    (root / "bboxes").mkdir()
    for seed in range(10):
        c = random_circuit(seed)
        Image.fromarray(c.image.values, mode="L").save(
            root / "images" / f"{c.image_id}.png")
        save_bbox_document(c.annotations, root / "bboxes" / f"{c.image_id}.xml")
    proc = run_primary("pipeline", str(root))
    assert proc.returncode == 0, proc.stderr
    return root


@pytest.fixture(scope="session")
def converted_dataset(annotated_corpus, tmp_path_factory) -> Path:
    from model_adapter.dataset import convert_dataset

    out = tmp_path_factory.mktemp("converted")
    result = convert_dataset(annotated_corpus / "images",
                             annotated_corpus / "out" / "polygons",
                             out, split_manifest=None, val_every=5)
    assert result.counts["train"] == 8 and result.counts["val"] == 2
    return out


@pytest.fixture(scope="session")
def smoke_checkpoint(converted_dataset, tmp_path_factory) -> Path:
    """50-iteration CPU training run on the 8-image fixture."""
    from model_adapter.train import TrainConfig, train

    out = tmp_path_factory.mktemp("run")
    config = TrainConfig(learning_rate=0.005, batch_size=2, iterations=50,
                         backbone="mobilenet_v3_small", min_size=128, max_size=256,
                         eval_period=25, log_period=5, seed=0)
    return train(config, converted_dataset, out)


@pytest.fixture()
def eval_root(annotated_corpus, tmp_path) -> Path:
    """Dataset root wired for `schemgraph eval`: gt polygons + empty predictions."""
    root = tmp_path / "evalroot"
    (root / "polygons").mkdir(parents=True)
    (root / "predictions").mkdir()
    (root / "images").mkdir()
    for doc in (annotated_corpus / "out" / "polygons").glob("*.json"):
        shutil.copy(doc, root / "polygons" / doc.name)
    for img in (annotated_corpus / "images").glob("*.png"):
        shutil.copy(img, root / "images" / img.name)
    return root

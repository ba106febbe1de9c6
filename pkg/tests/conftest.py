from __future__ import annotations

import sys
from pathlib import Path

import pytest
from PIL import Image

from schemgraph.annotations import save_bbox_document
from schemgraph.dataset import DatasetLayout

sys.path.insert(0, str(Path(__file__).parent))


def materialize(root: Path, circuits) -> DatasetLayout:
    """Write synthetic circuits as an images/ + bboxes/ dataset."""
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "bboxes").mkdir(parents=True, exist_ok=True)
    for c in circuits:
        Image.fromarray(c.image.values, mode="L").save(root / "images" / f"{c.image_id}.png")
        save_bbox_document(c.annotations, root / "bboxes" / f"{c.image_id}.xml")
    return DatasetLayout.at(root)


@pytest.fixture
def make_dataset(tmp_path):
    def _make(circuits, name="ds"):
        return materialize(tmp_path / name, circuits)
    return _make

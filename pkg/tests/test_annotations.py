from __future__ import annotations

import numpy as np
import pytest

from schemgraph.annotations import (
    BBoxAnnotation,
    ImageAnnotationSet,
    PolygonAnnotation,
    Port,
    Refinement,
    default_prototype_library,
    default_taxonomy,
    load_bbox_document,
    load_polygon_document,
    load_prediction_document,
    load_prototype_library,
    save_bbox_document,
    save_polygon_document,
    save_prediction_document,
    save_prototype_library,
    PredictedInstance,
)
from schemgraph.errors import SchemaError, UnknownClassError
from schemgraph.geometry import BoundingBox, Polygon

TAX = default_taxonomy()


def tri(label="resistor", **kw) -> PolygonAnnotation:
    return PolygonAnnotation(label, Polygon(np.array([[0, 0], [10, 0], [5, 8]], float)), **kw)


def test_default_taxonomy_counts():
    assert len(TAX) == 58
    assert "wire" in TAX           # synthesized class is always valid
    assert "resistor" in TAX
    assert "warp-drive" not in TAX


def test_bbox_document_roundtrip(tmp_path):
    anns = ImageAnnotationSet(
        "img1", 200, 100,
        bboxes=(BBoxAnnotation("resistor", BoundingBox(10, 20, 60, 50), rotation=90.0),
                BBoxAnnotation("text", BoundingBox(5, 5, 30, 15), text_content="R1"),
                BBoxAnnotation("junction", BoundingBox(80, 40, 92, 52))))
    path = tmp_path / "img1.xml"
    save_bbox_document(anns, path)
    back = load_bbox_document(path, TAX)
    assert back == anns


def test_bbox_document_empty(tmp_path):
    anns = ImageAnnotationSet("img2", 50, 50)
    path = tmp_path / "img2.xml"
    save_bbox_document(anns, path)
    assert load_bbox_document(path, TAX).bboxes == ()


def test_bbox_unknown_class_rejected(tmp_path):
    path = tmp_path / "bad.xml"
    path.write_text("""<annotation><filename>x.png</filename>
      <size><width>10</width><height>10</height><depth>1</depth></size>
      <object><name>flux_capacitor</name>
        <bndbox><xmin>1</xmin><ymin>1</ymin><xmax>5</xmax><ymax>5</ymax></bndbox>
      </object></annotation>""")
    with pytest.raises(UnknownClassError):
        load_bbox_document(path, TAX)


def test_bbox_clamped_to_image(tmp_path):
    path = tmp_path / "clamp.xml"
    path.write_text("""<annotation><filename>x.png</filename>
      <size><width>100</width><height>80</height><depth>1</depth></size>
      <object><name>resistor</name>
        <bndbox><xmin>-5</xmin><ymin>10</ymin><xmax>120</xmax><ymax>70</ymax></bndbox>
      </object></annotation>""")
    box = load_bbox_document(path, TAX).bboxes[0].box
    assert (box.xmin, box.ymin, box.xmax, box.ymax) == (0, 10, 100, 70)


def test_bbox_invalid_geometry_rejected(tmp_path):
    path = tmp_path / "bad2.xml"
    path.write_text("""<annotation><filename>x.png</filename>
      <size><width>10</width><height>10</height><depth>1</depth></size>
      <object><name>resistor</name>
        <bndbox><xmin>6</xmin><ymin>1</ymin><xmax>2</xmax><ymax>5</ymax></bndbox>
      </object></annotation>""")
    with pytest.raises(SchemaError):
        load_bbox_document(path, TAX)


def test_polygon_document_roundtrip(tmp_path):
    anns = [tri(refinement=Refinement.REFINED, source_bbox=0,
                ports=(Port("left", 0.0, 0.0), Port("right", 10.0, 0.0))),
            tri("wire", refinement=Refinement.WIRE_AUTO)]
    path = tmp_path / "img.json"
    save_polygon_document(anns, path, image_id="img", width=100, height=50)
    back, degenerate = load_polygon_document(path, TAX)
    assert degenerate == []
    assert len(back) == 2
    assert back[0].ports == anns[0].ports
    assert back[0].refinement is Refinement.REFINED
    assert back[0].outline.equals(anns[0].outline)
    assert back[1].label == "wire"


def test_polygon_document_empty_shapes(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text('{"shapes": [], "imageHeight": 10, "imageWidth": 10}')
    polys, degenerate = load_polygon_document(path, TAX)
    assert polys == [] and degenerate == []


def test_polygon_degenerate_reported_not_dropped_silently(tmp_path):
    path = tmp_path / "deg.json"
    path.write_text("""{"shapes": [
        {"label": "resistor", "points": [[0,0],[5,0]], "shape_type": "polygon"},
        {"label": "resistor", "points": [[0,0],[5,0],[5,5]], "shape_type": "polygon"}
    ]}""")
    polys, degenerate = load_polygon_document(path, TAX)
    assert len(polys) == 1
    assert len(degenerate) == 1
    assert degenerate[0].index == 0 and "points" in degenerate[0].reason


def test_polygon_port_border_invariant_enforced(tmp_path):
    bad = tri(ports=(Port("far", 50.0, 50.0),))
    with pytest.raises(SchemaError):
        save_polygon_document([bad], tmp_path / "x.json", image_id="x", width=60, height=60)


def test_prototype_library_defaults():
    lib = default_prototype_library()
    resistor = lib.get("resistor")
    assert [(p.name, p.x, p.y) for p in resistor] == [("left", 0.0, 0.5), ("right", 1.0, 0.5)]
    assert lib.get("transistor.bjt") is not None and len(lib.get("transistor.bjt")) == 3
    assert lib.get("junction") is None  # missing classes are simply absent


def test_prototype_library_roundtrip(tmp_path):
    lib = default_prototype_library()
    path = tmp_path / "protos.json"
    save_prototype_library(lib, path)
    assert load_prototype_library(path).entries == lib.entries


def test_prototype_library_rejects_out_of_frame(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"schema_version": 1, "classes": {"resistor": '
                    '[{"name": "a", "x": 1.2, "y": 0.5}]}}')
    with pytest.raises(SchemaError):
        load_prototype_library(path)


def test_prototype_library_rejects_duplicate_port_names(tmp_path):
    path = tmp_path / "dup.json"
    path.write_text('{"schema_version": 1, "classes": {"resistor": '
                    '[{"name": "a", "x": 0, "y": 0.5}, {"name": "a", "x": 1, "y": 0.5}]}}')
    with pytest.raises(SchemaError):
        load_prototype_library(path)


def test_prototype_library_requires_schema_version(tmp_path):
    path = tmp_path / "nover.json"
    path.write_text('{"classes": {}}')
    with pytest.raises(SchemaError):
        load_prototype_library(path)


def test_prediction_document_roundtrip(tmp_path):
    inst = PredictedInstance(tri(score=0.93), ((1.0, 2.0), (3.0, 4.0)))
    path = tmp_path / "pred.json"
    save_prediction_document(path, image_id="img", width=64, height=48, instances=[inst])
    image_id, width, height, back = load_prediction_document(path, TAX)
    assert (image_id, width, height) == ("img", 64, 48)
    assert len(back) == 1
    assert back[0].annotation.label == "resistor"
    assert back[0].annotation.score == pytest.approx(0.93)
    assert back[0].keypoints == ((1.0, 2.0), (3.0, 4.0))
    assert back[0].annotation.outline.equals(inst.annotation.outline)


def test_prediction_document_validates_keypoint_triples(tmp_path):
    path = tmp_path / "badkp.json"
    path.write_text('{"image_id": "x", "width": 10, "height": 10, "instances": '
                    '[{"category": "resistor", "segmentation": [[0,0,5,0,5,5]], '
                    '"keypoints": [1, 2]}]}')
    with pytest.raises(SchemaError):
        load_prediction_document(path, TAX)


def test_parse_error_carries_path(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(SchemaError) as err:
        load_polygon_document(path, TAX)
    assert str(path) in str(err.value)

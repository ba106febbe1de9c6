"""File-driven pipeline stages over the dataset layout.

Every stage reads and writes documents under the layout's directories, so
``pipeline`` (all stages chained) is byte-identical to running the stage
commands one by one. Images are independent; the runner may process them
in parallel, but within one image the stage order is fixed.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import annotations as ann_io
from . import graph as graph_mod
from . import keypoints as kp_mod
from . import refine as refine_mod
from .annotations import ClassTaxonomy, PrototypeLibrary, TEXT_CLASS, WIRE_CLASS
from .dataset import DatasetLayout, write_json
from .errors import SchemaError
from .raster import binarize, load_binary_map, load_image, median_denoise, save_binary_map
from .refine import class_palette

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    method: str = "otsu"
    threshold: int = 128
    polarity: str = "dark"
    denoise_radius: int = 0
    epsilon: float = refine_mod.DEFAULT_EPSILON
    min_area: int = refine_mod.DEFAULT_MIN_WIRE_AREA
    erosion_radius: int = kp_mod.DEFAULT_EROSION_RADIUS
    cluster_gap: float = kp_mod.DEFAULT_CLUSTER_GAP
    tolerance: float = graph_mod.DEFAULT_TOLERANCE
    workers: int = 1
    overwrite: bool = False
    classes_file: str | None = None
    prototypes_file: str | None = None

    def taxonomy(self) -> ClassTaxonomy:
        if self.classes_file:
            return ann_io.load_taxonomy(self.classes_file)
        return ann_io.default_taxonomy()

    def prototypes(self) -> PrototypeLibrary:
        if self.prototypes_file:
            return ann_io.load_prototype_library(self.prototypes_file)
        return ann_io.default_prototype_library()


def read_config_file(path) -> dict:
    """Simple ``key = value`` lines; # starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError("expected 'key = value'", path=path, location=f"line {lineno}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _polygon_doc_path(layout: DatasetLayout, image_id: str) -> Path:
    return layout.out / "polygons" / f"{image_id}.json"


def _keypoints_path(layout: DatasetLayout, image_id: str) -> Path:
    return layout.out / "keypoints" / f"{image_id}.json"


def _load_binmap(layout: DatasetLayout, image_id: str):
    path = layout.binmap_path(image_id)
    if not path.exists():
        raise SchemaError("no binary map; run the binarize stage first", path=path)
    return load_binary_map(path)


def _load_bboxes(layout: DatasetLayout, image_id: str, taxonomy: ClassTaxonomy):
    return ann_io.load_bbox_document(layout.bboxes / f"{image_id}.xml", taxonomy)


def _load_polygons(layout: DatasetLayout, image_id: str, taxonomy: ClassTaxonomy):
    path = _polygon_doc_path(layout, image_id)
    if not path.exists():
        raise SchemaError("no polygon document; run earlier stages first", path=path)
    polys, degenerate = ann_io.load_polygon_document(path, taxonomy)
    if degenerate:
        raise SchemaError(f"{len(degenerate)} degenerate shapes in pipeline document", path=path)
    return polys


def stage_binarize(layout: DatasetLayout, cfg: PipelineConfig, image_id: str) -> None:
    supplied = layout.binmaps / f"{image_id}.png"
    if supplied.exists():
        log.info("%s: externally corrected binary map present, not regenerating", image_id)
        return
    target = layout.out / "binmaps" / f"{image_id}.png"
    if target.exists() and not cfg.overwrite:
        log.info("%s: binary map already generated", image_id)
        return
    image_path = layout.image_path(image_id)
    if image_path is None:
        raise SchemaError("no image file", path=layout.images / image_id)
    img = load_image(image_path)
    m = binarize(img, method=cfg.method, threshold=cfg.threshold, polarity=cfg.polarity)
    if cfg.denoise_radius > 0:
        m = median_denoise(m, cfg.denoise_radius)
    target.parent.mkdir(parents=True, exist_ok=True)
    save_binary_map(m, target)


def stage_coarse(layout: DatasetLayout, cfg: PipelineConfig, image_id: str) -> None:
    taxonomy = cfg.taxonomy()
    anns = _load_bboxes(layout, image_id, taxonomy)
    binmap_path = layout.binmap_path(image_id)
    m = load_binary_map(binmap_path) if binmap_path.exists() else None
    polygons, overlaps = refine_mod.coarse_from_bboxes(anns, m)
    path = _polygon_doc_path(layout, image_id)
    path.parent.mkdir(parents=True, exist_ok=True)
    ann_io.save_polygon_document(polygons, path, image_id=image_id,
                                 width=anns.width, height=anns.height)
    write_json(layout.out / "reports" / f"{image_id}.overlaps.json",
               {"image_id": image_id, "overlaps": [list(p) for p in overlaps]})


def stage_refine(layout: DatasetLayout, cfg: PipelineConfig, image_id: str) -> None:
    taxonomy = cfg.taxonomy()
    m = _load_binmap(layout, image_id)
    polys = _load_polygons(layout, image_id, taxonomy)
    refined, report = refine_mod.refine_all(polys, m, cfg.epsilon)
    ann_io.save_polygon_document(refined, _polygon_doc_path(layout, image_id),
                                 image_id=image_id, width=m.width, height=m.height)
    write_json(layout.out / "reports" / f"{image_id}.refine.json",
               {"image_id": image_id, **report.to_dict()})


def stage_wires(layout: DatasetLayout, cfg: PipelineConfig, image_id: str) -> None:
    taxonomy = cfg.taxonomy()
    m = _load_binmap(layout, image_id)
    polys = _load_polygons(layout, image_id, taxonomy)
    polys = [p for p in polys if p.label != WIRE_CLASS]  # idempotent rerun
    wires = refine_mod.generate_wire_polygons(m, polys, cfg.epsilon, cfg.min_area)
    ann_io.save_polygon_document(list(polys) + wires, _polygon_doc_path(layout, image_id),
                                 image_id=image_id, width=m.width, height=m.height)


def stage_keypoints(layout: DatasetLayout, cfg: PipelineConfig, image_id: str) -> None:
    taxonomy = cfg.taxonomy()
    m = _load_binmap(layout, image_id)
    polys = _load_polygons(layout, image_id, taxonomy)
    texts = [p for p in polys if p.label == TEXT_CLASS]
    symbols = []
    wires = []
    for idx, p in enumerate(polys):
        if p.label == WIRE_CLASS:
            points = kp_mod.wire_keypoints(p, m, cfg.cluster_gap)
            wires.append({"polygon": idx, "points": [[x, y] for x, y in points]})
        elif graph_mod.kind_of_label(p.label) is graph_mod.NodeKind.SYMBOL:
            points = kp_mod.generate_keypoints(m, p, texts, cfg.erosion_radius,
                                               cfg.cluster_gap)
            symbols.append({"polygon": idx, "points": [[x, y] for x, y in points]})
    write_json(_keypoints_path(layout, image_id),
               {"image_id": image_id, "symbols": symbols, "wires": wires})


def stage_ports(layout: DatasetLayout, cfg: PipelineConfig, image_id: str) -> None:
    taxonomy = cfg.taxonomy()
    library = cfg.prototypes()
    polys = _load_polygons(layout, image_id, taxonomy)
    anns = _load_bboxes(layout, image_id, taxonomy)
    kp_doc = json.loads(_keypoints_path(layout, image_id).read_text())
    sym_kps = {rec["polygon"]: [tuple(p) for p in rec["points"]]
               for rec in kp_doc["symbols"]}
    out_polys = list(polys)
    assignments = []
    for idx, poly in enumerate(polys):
        if idx not in sym_kps:
            continue
        rotation = None
        if poly.source_bbox is not None and poly.source_bbox < len(anns.bboxes):
            rotation = anns.bboxes[poly.source_bbox].rotation
        assignment = kp_mod.assign_ports(sym_kps[idx], poly, poly.outline.bounds(),
                                         rotation, library, symbol_ref=idx)
        assignments.append(assignment.to_dict())
        if assignment.pairs:
            out_polys[idx] = poly.with_ports(assignment.pairs)
    m = _load_binmap(layout, image_id)
    ann_io.save_polygon_document(out_polys, _polygon_doc_path(layout, image_id),
                                 image_id=image_id, width=m.width, height=m.height)
    write_json(layout.out / "reports" / f"{image_id}.ports.json",
               {"image_id": image_id, "assignments": assignments})


def stage_graph(layout: DatasetLayout, cfg: PipelineConfig, image_id: str) -> None:
    taxonomy = cfg.taxonomy()
    polys = _load_polygons(layout, image_id, taxonomy)
    kp_doc = json.loads(_keypoints_path(layout, image_id).read_text())
    wire_kps = {rec["polygon"]: [tuple(p) for p in rec["points"]]
                for rec in kp_doc["wires"]}
    assignments = {}
    for idx, poly in enumerate(polys):
        if poly.ports and graph_mod.kind_of_label(poly.label) is graph_mod.NodeKind.SYMBOL:
            assignments[idx] = kp_mod.PortAssignment(idx, poly.ports,
                                                     kp_mod.AssignmentStatus.VERIFIED)
    g, report = graph_mod.build_graph(polys, assignments, wire_kps, cfg.tolerance)
    graphs_dir = layout.out / "graphs"
    graphs_dir.mkdir(parents=True, exist_ok=True)
    write_json(graphs_dir / f"{image_id}.graph.json", graph_mod.export_graph_json(g))
    (graphs_dir / f"{image_id}.graphml").write_text(graph_mod.export_graphml(g))
    write_json(layout.out / "reports" / f"{image_id}.graph_report.json",
               {"image_id": image_id, **report.to_dict()})


def stage_netlist(layout: DatasetLayout, cfg: PipelineConfig, image_id: str) -> None:
    doc = json.loads((layout.out / "graphs" / f"{image_id}.graph.json").read_text())
    g = graph_mod.graph_from_json(doc)
    netlist = graph_mod.to_netlist(g)
    out = layout.out / "netlists"
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{image_id}.net").write_text(graph_mod.export_netlist_text(netlist))
    write_json(layout.out / "reports" / f"{image_id}.netlist.json",
               {"image_id": image_id,
                "nets": [sorted(f"{n}:{p}" for n, p in net) for net in netlist.nets],
                "opens": [f"{n}:{p}" for n, p in netlist.opens],
                "unpaired_crossovers": netlist.unpaired_crossovers})


def stage_overlay(layout: DatasetLayout, cfg: PipelineConfig, image_id: str) -> None:
    taxonomy = cfg.taxonomy()
    m = _load_binmap(layout, image_id)
    polys = _load_polygons(layout, image_id, taxonomy)
    non_wire = [p for p in polys if p.label != WIRE_CLASS]
    idx_map, legend, _overlaps = refine_mod.render_semantic_map(m, non_wire, taxonomy)
    palette = np.zeros((256, 3), np.uint8)
    palette[0] = (255, 255, 255)
    colors = class_palette(taxonomy)
    for name in colors:
        palette[1 + taxonomy.index(name)] = colors[name]
    img = Image.fromarray(idx_map.astype(np.uint8), mode="P")
    img.putpalette(palette.ravel().tolist())
    out = layout.out / "overlays"
    out.mkdir(parents=True, exist_ok=True)
    img.save(out / f"{image_id}.png")
    write_json(out / f"{image_id}.legend.json", {"image_id": image_id, "legend": legend})


STAGES = {
    "binarize": stage_binarize,
    "coarse": stage_coarse,
    "refine": stage_refine,
    "wires": stage_wires,
    "keypoints": stage_keypoints,
    "ports": stage_ports,
    "graph": stage_graph,
    "netlist": stage_netlist,
    "overlay": stage_overlay,
}
PIPELINE_ORDER = ("binarize", "coarse", "refine", "wires", "keypoints",
                  "ports", "graph", "netlist", "overlay")


def run_stage(layout: DatasetLayout, cfg: PipelineConfig, stage: str,
              image_ids=None) -> list[str]:
    """Run one stage over the corpus; returns processed image ids."""
    ids = list(image_ids) if image_ids is not None else layout.image_ids()
    fn = STAGES[stage]
    for image_id in ids:
        fn(layout, cfg, image_id)
    return ids


def _pipeline_one(args) -> str:
    layout, cfg, image_id = args
    for stage in PIPELINE_ORDER:
        STAGES[stage](layout, cfg, image_id)
    return image_id


def run_pipeline(layout: DatasetLayout, cfg: PipelineConfig, image_ids=None) -> list[str]:
    """All stages, chained per image; parallel across images when workers > 1."""
    ids = list(image_ids) if image_ids is not None else layout.image_ids()
    jobs = [(layout, cfg, image_id) for image_id in ids]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            list(pool.map(_pipeline_one, jobs))
    else:
        for job in jobs:
            _pipeline_one(job)
    return ids

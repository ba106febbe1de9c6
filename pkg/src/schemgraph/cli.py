"""Batch command-line driver.

Exit codes: 0 success, 1 usage problems, 2 data errors, 3 metric floors
violated. Logs go to standard error; artifacts only to files under the
dataset's out/ directory.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import click

from . import __version__
from . import graph as graph_mod
from .annotations import load_polygon_document, load_prediction_document
from .dataset import DatasetLayout, dataset_stats, write_json
from .errors import MetricFloorError, SchemgraphError
from .evaluate import _prf, keypoint_metrics, mask_metrics, render_prf_table
from .pipeline import (
    PIPELINE_ORDER,
    PipelineConfig,
    read_config_file,
    run_pipeline,
    run_stage,
)

log = logging.getLogger("schemgraph")

_CONFIG_KEYS = {f.name for f in fields(PipelineConfig)}
_LAYOUT_KEYS = {"images_dir", "binmaps_dir", "bboxes_dir", "polygons_dir",
                "predictions_dir", "out_dir"}


def _build_config(ctx_params: dict) -> tuple[PipelineConfig, dict]:
    """Config file values first, explicit flags override them."""
    file_values: dict = {}
    layout_overrides: dict = {}
    config_path = ctx_params.get("config")
    if config_path:
        for key, value in read_config_file(config_path).items():
            if key in _LAYOUT_KEYS:
                layout_overrides[key] = value
            elif key in _CONFIG_KEYS:
                file_values[key] = value
            else:
                raise click.UsageError(f"unknown config key {key!r} in {config_path}")
    merged = {}
    for f in fields(PipelineConfig):
        if f.name in ctx_params and ctx_params[f.name] is not None:
            merged[f.name] = ctx_params[f.name]
        elif f.name in file_values:
            raw = file_values[f.name]
            caster = {int: int, float: float, bool: lambda v: v.lower() in ("1", "true", "yes")}
            typ = {"method": str, "polarity": str, "classes_file": str,
                   "prototypes_file": str}.get(f.name)
            if typ is None:
                typ = type(getattr(PipelineConfig(), f.name))
            merged[f.name] = caster.get(typ, typ)(raw)
    return PipelineConfig(**merged), layout_overrides


_shared_options = [
    click.option("--config", type=click.Path(exists=True, dir_okay=False),
                 help="Key = value config file; flags override it."),
    click.option("--method", type=click.Choice(["otsu", "fixed"]), default=None,
                 help="Binarization thresholding method."),
    click.option("--threshold", type=int, default=None,
                 help="Fixed threshold (strokes are strictly below it)."),
    click.option("--polarity", type=click.Choice(["dark", "light"]), default=None,
                 help="Which side of the threshold is stroke."),
    click.option("--denoise-radius", type=int, default=None,
                 help="Majority-filter radius applied after thresholding."),
    click.option("--epsilon", type=float, default=None,
                 help="Polygon simplification tolerance in pixels."),
    click.option("--min-area", type=int, default=None,
                 help="Smallest residual component kept as a wire polygon."),
    click.option("--erosion-radius", type=int, default=None,
                 help="Erosion radius before keypoint intersection."),
    click.option("--cluster-gap", type=float, default=None,
                 help="Border-arc gap that still merges intersection pixels."),
    click.option("--tolerance", type=float, default=None,
                 help="Keypoint-to-terminal matching radius in pixels."),
    click.option("--workers", type=int, default=None,
                 help="Parallel image workers (pipeline only)."),
    click.option("--overwrite", is_flag=True, default=None,
                 help="Regenerate artifacts that already exist."),
    click.option("--classes-file", type=click.Path(exists=True, dir_okay=False), default=None,
                 help="Override the shipped class taxonomy."),
    click.option("--prototypes-file", type=click.Path(exists=True, dir_okay=False), default=None,
                 help="Override the shipped symbol port prototype library."),
]


def shared_options(fn):
    for opt in reversed(_shared_options):
        fn = opt(fn)
    return fn


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__)
def cli():
    """Handwritten circuit diagram to electrical graph pipeline."""
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")


def _stage_command(stage: str, help_text: str):
    @cli.command(name=stage, help=help_text)
    @click.argument("root", type=click.Path(exists=True, file_okay=False))
    @click.option("--image-id", "image_ids", multiple=True,
                  help="Process only these image ids (repeatable).")
    @shared_options
    def _cmd(root, image_ids, **params):
        cfg, layout_overrides = _build_config(params)
        layout = DatasetLayout.at(root, layout_overrides)
        ids = run_stage(layout, cfg, stage, image_ids or None)
        log.info("%s: processed %d image(s)", stage, len(ids))
    return _cmd


_stage_command("binarize", "Threshold raw images into stroke maps (skips externally "
                           "corrected maps).")
_stage_command("coarse", "Convert bounding boxes to coarse polygons and report "
                         "stroke-area overlaps.")
_stage_command("refine", "Tighten coarse polygons onto strokes (contour or convex-hull "
                         "fallback).")
_stage_command("wires", "Sweep unclaimed strokes into wire polygons.")
_stage_command("keypoints", "Derive terminal keypoints from border-stroke intersections.")
_stage_command("ports", "Assign keypoints to rotated prototype ports.")
_stage_command("graph", "Build the electrical graph from polygons and keypoints.")
_stage_command("netlist", "Reduce graphs to netlists (one net per line).")
_stage_command("overlay", "Render semantic overlays with a class color legend.")


@cli.command(help="Run every stage in order: " + " -> ".join(PIPELINE_ORDER) + ".")
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--image-id", "image_ids", multiple=True,
              help="Process only these image ids (repeatable).")
@click.option("--seedless", is_flag=True, default=False,
              help="Assert the run uses no randomness (always true; kept for "
                   "interface stability).")
@shared_options
def pipeline(root, image_ids, seedless, **params):
    cfg, layout_overrides = _build_config(params)
    layout = DatasetLayout.at(root, layout_overrides)
    if seedless:
        log.info("seedless: no stage draws random numbers")
    ids = run_pipeline(layout, cfg, image_ids or None)
    log.info("pipeline: processed %d image(s)", len(ids))


@cli.command(name="eval", help="Score predictions against ground-truth polygons.")
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--iou-threshold", type=float, default=0.5, show_default=True)
@click.option("--keypoint-radius", type=float, default=10.0, show_default=True)
@click.option("--min-mask-f1", type=float, default=None,
              help="Exit 3 when overall mask F1 falls below this floor.")
@click.option("--min-keypoint-f1", type=float, default=None,
              help="Exit 3 when overall keypoint F1 falls below this floor.")
@shared_options
def eval_cmd(root, iou_threshold, keypoint_radius, min_mask_f1, min_keypoint_f1, **params):
    cfg, layout_overrides = _build_config(params)
    layout = DatasetLayout.at(root, layout_overrides)
    taxonomy = cfg.taxonomy()
    per_image = {}
    mask_tp = mask_pred = mask_gt = 0
    kp_tp = kp_pred = kp_gt = 0
    for pred_path in sorted(layout.predictions.glob("*.json")):
        image_id = pred_path.stem
        gt_path = layout.polygons / f"{image_id}.json"
        if not gt_path.exists():
            log.warning("%s: prediction without ground truth, skipped", image_id)
            continue
        _, _, _, instances = load_prediction_document(pred_path, taxonomy)
        gt_polys, _deg = load_polygon_document(gt_path, taxonomy)
        mm = mask_metrics([i.annotation for i in instances], gt_polys, iou_threshold)
        pred_points = [p for inst in instances for p in inst.keypoints]
        gt_points = [port.point for ann in gt_polys for port in (ann.ports or ())]
        km = keypoint_metrics(pred_points, gt_points, keypoint_radius)
        per_image[image_id] = {"masks": mm.to_dict(), "keypoints": km.to_dict()}
        mask_tp += mm.overall.matched
        mask_pred += mm.overall.predicted
        mask_gt += mm.overall.actual
        kp_tp += km.matched
        kp_pred += km.predicted
        kp_gt += km.actual
    masks = _prf(mask_tp, mask_pred, mask_gt)
    kps = _prf(kp_tp, kp_pred, kp_gt)
    report = {"masks": masks.to_dict(), "keypoints": kps.to_dict(), "per_image": per_image}
    write_json(layout.out / "reports" / "eval.json", report)
    click.echo(render_prf_table("overall", {"masks": masks, "keypoints": kps}))
    if min_mask_f1 is not None and masks.f1 < min_mask_f1:
        raise MetricFloorError(f"mask F1 {masks.f1:.3f} below floor {min_mask_f1}")
    if min_keypoint_f1 is not None and kps.f1 < min_keypoint_f1:
        raise MetricFloorError(f"keypoint F1 {kps.f1:.3f} below floor {min_keypoint_f1}")


@cli.command(help="Corpus statistics: images, boxes, classes, maps, polygons.")
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@shared_options
def stats(root, **params):
    cfg, layout_overrides = _build_config(params)
    layout = DatasetLayout.at(root, layout_overrides)
    st = dataset_stats(layout, cfg.taxonomy())
    write_json(layout.out / "reports" / "stats.json", st.to_dict())
    click.echo(f"images    {st.images}")
    click.echo(f"boxes     {st.boxes}")
    click.echo(f"classes   {st.classes}")
    click.echo(f"binmaps   {st.binmaps}")
    click.echo(f"polygons  {st.polygons}")
    if st.missing:
        click.echo(f"problems  {len(st.missing)} (see reports/stats.json)")


@cli.command(name="compare", help="Compare two exported graph documents.")
@click.argument("graph_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("graph_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["geometric", "degree"]), default="geometric",
              show_default=True, help="geometric: same image; degree: cross-drawing.")
def compare(graph_a, graph_b, mode):
    a = graph_mod.graph_from_json(json.loads(Path(graph_a).read_text()))
    b = graph_mod.graph_from_json(json.loads(Path(graph_b).read_text()))
    metrics = graph_mod.compare_graphs(a, b, mode=mode)
    click.echo(json.dumps(metrics.to_dict(), indent=2, sort_keys=True))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.exceptions.Abort:
        return 1
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except MetricFloorError as exc:
        log.error("%s", exc)
        return 3
    except (SchemgraphError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

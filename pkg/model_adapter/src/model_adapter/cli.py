"""Command-line driver: convert, train, infer, passthrough."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .dataset import convert_dataset, load_split_manifest, make_split
from .formats import DocumentError
from .train import ConfigError, load_config, train

log = logging.getLogger("model_adapter")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """Detector adapter for circuit diagram annotation documents."""
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command(help="Convert annotation documents into train/val detector datasets.")
@click.option("--images", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--polygons", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--split-manifest", type=click.Path(exists=True, dir_okay=False),
              help="JSON with train/val replica-group lists; derived when absent.")
@click.option("--val-every", type=int, default=5, show_default=True,
              help="Without a manifest, send every Nth replica group to validation.")
def convert(images, polygons, out, split_manifest, val_every):
    manifest = load_split_manifest(split_manifest) if split_manifest else None
    result = convert_dataset(images, polygons, out, manifest, val_every)
    log.info("converted: %s (skipped %d)", result.counts, len(result.skipped))


@cli.command(name="split", help="Write a deterministic replica-group split manifest.")
@click.option("--images", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--val-every", type=int, default=5, show_default=True)
def split_cmd(images, out, val_every):
    ids = [p.stem for p in Path(images).iterdir()]
    manifest = make_split(ids, val_every)
    Path(out).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    log.info("%d train groups, %d val groups", len(manifest["train"]), len(manifest["val"]))


@cli.command(name="train", help="Train on a converted dataset directory.")
@click.option("--data", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--train-config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
def train_cmd(data, out, config_path):
    config = load_config(config_path)
    checkpoint = train(config, data, out)
    log.info("checkpoint written to %s", checkpoint)


@cli.command(name="infer", help="Emit prediction documents for every image in a directory.")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--images", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--score-threshold", type=float, default=0.5, show_default=True)
def infer_cmd(checkpoint, images, out, score_threshold):
    from .infer import run_inference
    manifest = run_inference(checkpoint, images, out, score_threshold)
    log.info("wrote %d documents, %d errors", len(manifest["written"]),
             len(manifest["errors"]))


@cli.command(help="Re-emit ground truth as perfect-score prediction documents.")
@click.option("--polygons", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
def passthrough(polygons, out):
    from .infer import passthrough as run
    written = run(polygons, out)
    log.info("wrote %d documents", len(written))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except (ConfigError, DocumentError) as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

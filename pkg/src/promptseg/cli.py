"""Command-line entry point: synth, train, eval, serve.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Every flag falls
back to an environment variable prefixed PROMPTSEG_.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import evalkit, synthgen
from .promptsim import GuidanceConfig
from .volgrid import load_mask, load_volume, preprocess

CONTEXT = {"auto_envvar_prefix": "PROMPTSEG", "help_option_names": ["-h", "--help"]}


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@click.group(context_settings=CONTEXT)
def main():
    """Interactive promptable tumor segmentation toolkit."""


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--n-train", default=200, show_default=True)
@click.option("--n-val", default=50, show_default=True)
@click.option("--size", default=64, show_default=True, help="Cubic volume edge, voxels.")
@click.option("--preset", type=click.Choice(["easy", "hard"]), default="easy",
              show_default=True)
@click.option("--seed", default=0, show_default=True)
def synth(out, n_train, n_val, size, preset, seed):
    """Generate a synthetic phantom dataset with ground-truth masks."""
    from dataclasses import replace
    cfg = replace(synthgen.PRESETS[preset], shape=(size, size, size), seed=seed)
    manifest = synthgen.generate_dataset(cfg, n_train, n_val, out)
    click.echo(f"wrote {len(manifest['cases'])} cases to {out}")


def _load_cases(data_dir, split):
    manifest = synthgen.load_manifest(data_dir)
    data_dir = Path(data_dir)
    cases = []
    for entry in manifest["cases"]:
        if entry["split"] != split:
            continue
        cid = entry["id"]
        cases.append((cid,
                      load_volume(data_dir / f"{cid}_img.nii.gz"),
                      load_mask(data_dir / f"{cid}_gt.nii.gz")))
    return cases


@main.command()
@click.option("--data", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON file mirroring TrainConfig fields; optional 'network' "
                   "and 'guidance' sub-objects.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--resume", type=click.Path(), default=None,
              help="Initialize from an existing weights archive.")
def train(data, config_path, out_path, resume):
    """Train the promptable network on a generated dataset."""
    from . import segnet
    from .volgrid import AugmentConfig

    raw = {}
    if config_path:
        try:
            raw = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            _fail(f"cannot read config: {e}")
    net_cfg = segnet.NetworkConfig.from_dict(raw.pop("network", {})) \
        if "network" in raw else segnet.NetworkConfig()
    guidance_cfg = GuidanceConfig(**raw.pop("guidance", {}))
    try:
        train_cfg = segnet.TrainConfig.toy(**raw) if raw.pop("toy", True) is not False \
            else segnet.TrainConfig(**raw)
    except (TypeError, ValueError) as e:
        _fail(f"bad training config: {e}")

    if not Path(data).is_dir():
        _fail(f"data directory {data} does not exist")
    try:
        train_cases = [_pp(v, m) for _, v, m in _load_cases(data, "train")]
        val_cases = [_pp(v, m) for _, v, m in _load_cases(data, "val")]
    except FileNotFoundError as e:
        _fail(str(e))
    if not train_cases:
        _fail("empty training dataset")

    initial = None
    if resume:
        try:
            initial, _ = segnet.load_weights(resume, expected_config=net_cfg)
        except segnet.WeightsError as e:
            _fail(str(e))

    try:
        model, history = segnet.train(train_cases, net_cfg, train_cfg, guidance_cfg,
                                      val_dataset=val_cases,
                                      augment_cfg=AugmentConfig(),
                                      log=lambda msg: click.echo(msg),
                                      initial_model=initial)
    except RuntimeError as e:
        _fail(str(e))
    segnet.save_weights(model, out_path, metadata={
        "history": history, "train_config": train_cfg.to_dict(),
        "guidance_layout": guidance_cfg.layout, "seed": train_cfg.seed})
    Path(str(out_path) + ".history.json").write_text(json.dumps(history, indent=2))
    click.echo(f"saved weights to {out_path}")


def _pp(volume, mask):
    from .evalkit import _preprocess_mask
    vol_pp, record = preprocess(volume)
    return vol_pp, _preprocess_mask(mask, record)


@main.command("eval")
@click.option("--data", required=True, type=click.Path())
@click.option("--weights", type=click.Path(), default=None)
@click.option("--oracle", is_flag=True, help="Score a GT-returning stub instead of a model.")
@click.option("--prompt", "prompt_type",
              type=click.Choice(["none", "point", "box", "lasso", "scribble"]),
              required=True)
@click.option("--rounds", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--report", "report_path", type=click.Path(), default=None)
def eval_cmd(data, weights, oracle, prompt_type, rounds, seed, report_path):
    """Run the simulated-interaction benchmark on the validation split."""
    from . import segnet

    if not oracle and not weights:
        raise click.UsageError("provide --weights or --oracle")
    try:
        cases = _load_cases(data, "val")
    except FileNotFoundError as e:
        _fail(str(e))
    if oracle:
        predictor = evalkit.OraclePredictor()
        guidance_cfg = GuidanceConfig()
        method = "oracle"
    else:
        try:
            model, metadata = segnet.load_weights(weights)
        except segnet.WeightsError as e:
            _fail(str(e))
        guidance_cfg = GuidanceConfig(layout=metadata.get("guidance_layout", "shared"))
        predictor = segnet.SlidingWindowPredictor(model, guidance_cfg)
        method = "promptseg"
    report = evalkit.run_benchmark(predictor, cases, prompt_type, rounds=rounds,
                                   seed=seed, guidance_cfg=guidance_cfg)
    click.echo(evalkit.report_table(report, method=method))
    if report_path:
        Path(report_path).write_text(evalkit.report_to_json(report))


@main.command()
@click.option("--weights", required=True, type=click.Path())
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--capacity", default=16, show_default=True)
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Static frontend assets served under /ui.")
def serve(weights, port, host, capacity, ui_dir):
    """Start the interactive segmentation HTTP service."""
    import uvicorn
    from . import segnet
    from .server import create_app

    try:
        model, metadata = segnet.load_weights(weights)
    except segnet.WeightsError as e:
        _fail(str(e))
    guidance_cfg = GuidanceConfig(layout=metadata.get("guidance_layout", "shared"))
    predictor = segnet.SlidingWindowPredictor(model, guidance_cfg)
    app = create_app(predictor, capacity=capacity, ui_dir=ui_dir)
    click.echo(f"endpoints: /v1/health /v1/sessions /v1/sessions/{{id}}/prompts "
               f"/mask /slice/{{z}} /undo /export")
    try:
        uvicorn.run(app, host=host, port=port)
    except SystemExit:
        raise
    except OSError as e:
        _fail(f"cannot bind {host}:{port}: {e}")


if __name__ == "__main__":
    main()

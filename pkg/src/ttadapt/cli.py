"""Command-line front end for the whole pipeline.

One multiplexed command with subcommands: ``filter`` applies the adjustable
filters to an image, ``corrupt`` synthesizes fog or low light, ``synth``
renders a dataset, ``train`` fits the toy detector (clean-only or mix
training), ``adapt`` runs a continual sequence in one of the four modes,
``eval`` scores stored detections, and ``report`` renders the aligned
metric table.

Flags shared by every subcommand: ``--seed``, ``--config``, ``--output-dir``.
A config file is flat ``key = value`` text; keys must match the subcommand's
flag names (unknown keys are rejected before any work), and explicit flags
override file values.

Exit codes: 0 success, 1 usage or config error (rejected before any work),
2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .adaptation import save_checkpoint
from .benchmark import DEFAULT_BENCHMARK
from .boxes import read_detection_records, write_detection_records
from .corruption import (FogParams, LowLightParams, MixPolicy, synthesize_fog,
                         synthesize_low_light)
from .dataset import load_manifest, synth_dataset
from .defog import DefogParams
from .detector import load_model, save_model
from .errors import ParameterError
from .harness import (MODES, RunSettings, compute_metrics, mix_train,
                      read_metrics_file, render_report, run_sequence,
                      write_metrics_file)
from .image import PixelFilterParams, apply_filter_chain
from .io import read_image, write_image, write_text_atomic


class UsageError(Exception):
    """Bad flags or config; reported with exit code 1 before any work."""


COMMON_FLAGS = {
    "seed": (int, 0, "seed for any randomized step"),
    "config": (str, None, "flat key = value config file; flags override it"),
    "output_dir": (str, ".", "directory for outputs that take no explicit path"),
}

# per-subcommand option tables: dest -> (type, default, help)
OPTION_TABLES = {
    "filter": {
        "input": (str, None, "input image (.png or .ppm)"),
        "output": (str, None, "output image path"),
        "gamma": (float, 1.0, "gamma exponent (> 0)"),
        "contrast": (float, 0.0, "contrast blend in [0, 1]"),
        "exposure": (float, 0.0, "exposure in stops"),
        "defog_w": (float, 0.0, "defog strength in [0, 1]; 0 disables"),
        "defog_alpha": (float, 0.001, "airlight pixel fraction in (0, 0.05]"),
        "defog_window": (int, 15, "dark-channel window (odd)"),
    },
    "corrupt": {
        "input": (str, None, "input image"),
        "output": (str, None, "output image path"),
        "kind": (str, None, "fog or lowlight"),
        "level": (int, None, "fog level 0..9 (default: sampled from seed)"),
        "eta": (float, None, "low-light exponent in [1.5, 5] (default: sampled)"),
    },
    "synth": {
        "width": (int, 64, "frame width"),
        "height": (int, 64, "frame height"),
        "frames_per_segment": (int, 40, "frames per segment"),
        "schedule": (str, "clean,fog:5,lowlight:3.0,clean",
                     "comma-separated domain tags"),
        "num_classes": (int, 3, "object classes"),
    },
    "train": {
        "manifest": (str, None, "training dataset manifest"),
        "output": (str, None, "model file to write"),
        "epochs": (int, DEFAULT_BENCHMARK.epochs, "training epochs"),
        "lr": (float, DEFAULT_BENCHMARK.lr, "learning rate"),
        "grid_size": (int, DEFAULT_BENCHMARK.grid_size, "detector grid"),
        "mix": (bool, False, "mix fog/low-light/clean corruption during training"),
    },
    "adapt": {
        "manifest": (str, None, "sequence dataset manifest"),
        "model": (str, None, "source model file"),
        "mode": (str, None, f"one of {', '.join(MODES)}"),
        "score_threshold": (float, RunSettings.score_threshold, "detection threshold"),
        "lr": (float, RunSettings.lr, "student learning rate"),
        "momentum": (float, RunSettings.momentum, "EMA teacher momentum"),
        "iou_thresholds": (str, "0.2", "comma-separated mAP IoU thresholds"),
    },
    "eval": {
        "manifest": (str, None, "dataset manifest"),
        "detections": (str, None, "detection records file"),
        "output": (str, None, "metrics file to write (default in --output-dir)"),
        "mode": (str, "eval", "label stored in the metrics file"),
        "iou_thresholds": (str, "0.2", "comma-separated mAP IoU thresholds"),
    },
    "report": {
        "metrics": (str, None, "comma-separated metrics files"),
        "output": (str, None, "also write the table to this path"),
    },
}

REQUIRED = {
    "filter": ("input", "output"),
    "corrupt": ("input", "output", "kind"),
    "synth": (),
    "train": ("manifest", "output"),
    "adapt": ("manifest", "model", "mode"),
    "eval": ("manifest", "detections"),
    "report": ("metrics",),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ttadapt", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command, table in OPTION_TABLES.items():
        sub = subparsers.add_parser(command)
        for dest, (kind, _default, help_text) in {**COMMON_FLAGS, **table}.items():
            flag = "--" + dest.replace("_", "-")
            if kind is bool:
                sub.add_argument(flag, dest=dest, action="store_const", const=True,
                                 default=None, help=help_text)
            else:
                sub.add_argument(flag, dest=dest, type=kind, default=None,
                                 help=help_text)
    return parser


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"cannot parse boolean value {text!r}")


def _load_config(path: str, command: str) -> dict:
    config_path = Path(path)
    if not config_path.is_file():
        raise UsageError(f"config file not found: {path}")
    known = {**COMMON_FLAGS, **OPTION_TABLES[command]}
    values = {}
    for lineno, line in enumerate(config_path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        if key not in known:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        kind = known[key][0]
        try:
            values[key] = _parse_bool(value) if kind is bool else kind(value)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key!r}: {exc}")
    return values


def _resolve(ns: argparse.Namespace) -> argparse.Namespace:
    """Layer explicit flags over config-file values over hard defaults."""
    table = {**COMMON_FLAGS, **OPTION_TABLES[ns.command]}
    config = _load_config(ns.config, ns.command) if ns.config else {}
    for dest, (_kind, default, _help) in table.items():
        if getattr(ns, dest) is None:
            setattr(ns, dest, config.get(dest, default))
    for dest in REQUIRED[ns.command]:
        if getattr(ns, dest) is None:
            raise UsageError(f"--{dest.replace('_', '-')} is required")
    return ns


def _require_file(path: str, what: str) -> Path:
    resolved = Path(path)
    if not resolved.is_file():
        raise UsageError(f"{what} not found: {path}")
    return resolved


def _parse_thresholds(text: str) -> tuple:
    try:
        thresholds = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise UsageError(f"bad IoU threshold list {text!r}: {exc}")
    if not thresholds:
        raise UsageError("IoU threshold list is empty")
    return thresholds


def _cmd_filter(ns) -> int:
    src = _require_file(ns.input, "input image")
    try:
        pixel = PixelFilterParams(gamma=ns.gamma, contrast=ns.contrast,
                                  exposure=ns.exposure)
        defog_params = None
        if ns.defog_w > 0.0:
            defog_params = DefogParams(strength=ns.defog_w,
                                       airlight_frac=ns.defog_alpha,
                                       window=ns.defog_window)
    except ParameterError as exc:
        raise UsageError(str(exc))
    img = read_image(src)
    write_image(ns.output, apply_filter_chain(img, pixel, defog_params))
    print(f"filter: gamma={ns.gamma} contrast={ns.contrast} exposure={ns.exposure} "
          f"defog_w={ns.defog_w} -> {ns.output}")
    return 0


def _cmd_corrupt(ns) -> int:
    src = _require_file(ns.input, "input image")
    if ns.kind not in ("fog", "lowlight"):
        raise UsageError(f"--kind must be fog or lowlight, got {ns.kind!r}")
    rng = np.random.default_rng(ns.seed)
    try:
        if ns.kind == "fog":
            level = ns.level if ns.level is not None else int(rng.integers(0, 10))
            params = FogParams(level=level)
            label = f"fog level={level} beta={params.beta:.2f}"
        else:
            eta = ns.eta if ns.eta is not None else float(rng.uniform(1.5, 5.0))
            params = LowLightParams(exponent=eta)
            label = f"lowlight eta={eta:.3f}"
    except ParameterError as exc:
        raise UsageError(str(exc))
    img = read_image(src)
    out = synthesize_fog(img, params) if ns.kind == "fog" else \
        synthesize_low_light(img, params)
    write_image(ns.output, out)
    print(f"corrupt: {label} -> {ns.output}")
    return 0


def _cmd_synth(ns) -> int:
    schedule = tuple(tag.strip() for tag in ns.schedule.split(",") if tag.strip())
    try:
        manifest = synth_dataset(ns.output_dir, seed=ns.seed, width=ns.width,
                                 height=ns.height,
                                 frames_per_segment=ns.frames_per_segment,
                                 schedule=schedule, num_classes=ns.num_classes)
    except ParameterError as exc:
        raise UsageError(str(exc))
    print(f"synth: {len(manifest.frame_ids)} frames, {len(manifest.segments)} "
          f"segments -> {Path(ns.output_dir) / 'manifest.txt'}")
    return 0


def _cmd_train(ns) -> int:
    manifest_path = _require_file(ns.manifest, "manifest")
    if ns.epochs < 0 or ns.lr <= 0 or ns.grid_size < 1:
        raise UsageError("epochs must be >= 0, lr > 0, grid-size >= 1")
    manifest = load_manifest(manifest_path)
    if ns.mix:
        policy = MixPolicy(rng_seed=ns.seed)
    else:
        policy = MixPolicy(p_fog=0.0, p_lowlight=0.0, p_clean=1.0, rng_seed=ns.seed)
    model = mix_train(manifest, epochs=ns.epochs, lr=ns.lr, policy=policy,
                      grid_size=ns.grid_size)
    save_model(ns.output, model)
    print(f"train: {'mix' if ns.mix else 'clean-only'} {ns.epochs} epochs "
          f"on {len(manifest.frame_ids)} frames -> {ns.output}")
    return 0


def _cmd_adapt(ns) -> int:
    manifest_path = _require_file(ns.manifest, "manifest")
    model_path = _require_file(ns.model, "model file")
    if ns.mode not in MODES:
        raise UsageError(f"--mode must be one of {', '.join(MODES)}, got {ns.mode!r}")
    try:
        settings = RunSettings(score_threshold=ns.score_threshold, lr=ns.lr,
                               momentum=ns.momentum,
                               iou_thresholds=_parse_thresholds(ns.iou_thresholds))
    except ParameterError as exc:
        raise UsageError(str(exc))
    manifest = load_manifest(manifest_path)
    model = load_model(model_path)
    metrics, frame_dets, ensemble = run_sequence(model, manifest, ns.mode, settings)
    out_dir = Path(ns.output_dir)
    write_metrics_file(out_dir / f"metrics_{ns.mode}.json", ns.mode, ns.seed, metrics)
    write_detection_records(out_dir / f"detections_{ns.mode}.txt", frame_dets)
    if ensemble is not None:
        save_checkpoint(out_dir / f"checkpoint_{ns.mode}.json", ensemble)
    print(f"adapt: mode={ns.mode} map_target={metrics.map_target:.1f} "
          f"map_drop={metrics.map_drop:.1f} -> {out_dir}")
    return 0


def _cmd_eval(ns) -> int:
    manifest_path = _require_file(ns.manifest, "manifest")
    detections_path = _require_file(ns.detections, "detections file")
    thresholds = _parse_thresholds(ns.iou_thresholds)
    manifest = load_manifest(manifest_path)
    frame_dets = read_detection_records(detections_path)
    unknown = sorted(set(frame_dets) - set(manifest.frame_paths))
    if unknown:
        raise ValueError(f"detections reference unknown frame ids {unknown[:5]}")
    for fid in manifest.frame_ids:
        frame_dets.setdefault(fid, [])
    metrics = compute_metrics(frame_dets, manifest, thresholds)
    out = Path(ns.output) if ns.output else Path(ns.output_dir) / "metrics_eval.json"
    write_metrics_file(out, ns.mode, ns.seed, metrics)
    print(f"eval: map={metrics.map:.1f} map_drop={metrics.map_drop:.1f} -> {out}")
    return 0


def _cmd_report(ns) -> int:
    paths = [p.strip() for p in ns.metrics.split(",") if p.strip()]
    for path in paths:
        _require_file(path, "metrics file")
    rows = [read_metrics_file(path) for path in paths]
    table = render_report(rows)
    sys.stdout.write(table)
    if ns.output:
        write_text_atomic(ns.output, table)
    return 0


HANDLERS = {
    "filter": _cmd_filter,
    "corrupt": _cmd_corrupt,
    "synth": _cmd_synth,
    "train": _cmd_train,
    "adapt": _cmd_adapt,
    "eval": _cmd_eval,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = _resolve(parser.parse_args(argv))
    except UsageError as exc:
        print(f"ttadapt: error: {exc}", file=sys.stderr)
        return 1
    try:
        return HANDLERS[ns.command](ns)
    except UsageError as exc:
        print(f"ttadapt: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 2
        print(f"ttadapt: runtime error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

"""Command-line entry point.

Subcommands: simulate, calibrate, pipeline, train, inspect, dataset.

Exit codes::

    0  success
    2  invalid arguments or configuration, unreadable scene/manifest/model
    3  frame shape or grid spec disagrees with the config or the background
    4  background file missing
    5  corrupt input file (bad magic, version or size)
    6  training manifest holds a single class
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from voxradar import formats
from voxradar.calibrate import SpecMismatchError, accumulate_background, subtract_background
from voxradar.config import ConfigError, PipelineConfig, load_config
from voxradar.framefilter import (
    Flag,
    Pooling,
    SingleClassError,
    StreamState,
    TrainConfig,
    Verdict,
    classify,
    extract_input,
    init_model,
    read_model,
    stream_filter,
    train,
    write_model,
)
from voxradar.framefilter.modelio import MODEL_MAGIC, model_header
from voxradar.framefilter.training import write_history_csv
from voxradar.imaging import heatmap_slice, marching_cubes, peak_voxel, threshold_normalize, Mesh
from voxradar.reconstruct import PowerGrid, reconstruct_grid
from voxradar.scenesim import scene_script_from_dict, synthesize_frame

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SPEC_MISMATCH = 3
EXIT_NO_BACKGROUND = 4
EXIT_CORRUPT = 5
EXIT_SINGLE_CLASS = 6


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _epoch_of(path, fallback: int) -> int:
    m = re.search(r"(\d+)$", Path(path).stem)
    return int(m.group(1)) if m else fallback


def _load_frame(path, epoch, cfg: PipelineConfig):
    try:
        frame = formats.read_frame(path, epoch)
    except formats.FormatError as exc:
        raise CliError(EXIT_CORRUPT, str(exc)) from exc
    except OSError as exc:
        raise CliError(EXIT_CONFIG, f"cannot read frame {path}: {exc}") from exc
    try:
        frame.check_matches(cfg.geometry, cfg.chirp)
    except ValueError as exc:
        raise CliError(EXIT_SPEC_MISMATCH, f"{path}: {exc}") from exc
    return frame


def _reconstruct_file(args) -> PowerGrid:
    path, epoch, cfg = args
    frame = _load_frame(path, epoch, cfg)
    return reconstruct_grid(frame, cfg.geometry, cfg.chirp, cfg.grid)


def _reconstruct_all(paths, cfg: PipelineConfig, jobs: int) -> list[PowerGrid]:
    work = [(p, _epoch_of(p, i), cfg) for i, p in enumerate(paths)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_reconstruct_file, work))
    return [_reconstruct_file(w) for w in work]


# -- subcommands ------------------------------------------------------------

def cmd_simulate(args, cfg: PipelineConfig) -> int:
    try:
        script = scene_script_from_dict(json.loads(Path(args.scene).read_text()))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_CONFIG, f"cannot read scene file {args.scene}: {exc}") from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for epoch in range(args.start, args.start + args.epochs):
        try:
            scene = script.scene(epoch)
            frame = synthesize_frame(scene, cfg.geometry, cfg.chirp, noise=cfg.noise,
                                     seed=cfg.seed, path_loss=cfg.path_loss)
        except ValueError as exc:
            raise CliError(EXIT_CONFIG, f"epoch {epoch}: {exc}") from exc
        formats.write_frame(out / f"frame_{epoch:04d}.hicf", frame)
    print(f"wrote {args.epochs} frames to {out}")
    return EXIT_OK


def cmd_calibrate(args, cfg: PipelineConfig) -> int:
    grids = _reconstruct_all(args.frames, cfg, args.jobs)
    try:
        bg = accumulate_background(grids)
    except SpecMismatchError as exc:
        raise CliError(EXIT_SPEC_MISMATCH, str(exc)) from exc
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    formats.write_grid(out, bg.mean_grid)
    formats.write_sidecar(out, bg.frame_count, bg.mean_grid.epoch)
    print(f"background from {bg.frame_count} frames written to {out}")
    return EXIT_OK


def _load_background(path):
    from voxradar.calibrate import BackgroundModel

    if path is None or not Path(path).exists():
        raise CliError(EXIT_NO_BACKGROUND, f"background file not found: {path}")
    try:
        grid = formats.read_grid(path)
        count = formats.read_sidecar(path).get("frame_count", 1) if formats.sidecar_path(path).exists() else 1
    except formats.FormatError as exc:
        raise CliError(EXIT_CORRUPT, str(exc)) from exc
    return BackgroundModel(grid, int(count), grid.spec)


def _mesh_for(grid: PowerGrid, iso_fraction: float) -> Mesh:
    peak = grid.values.max()
    if peak <= 0 or min(grid.values.shape) < 2:
        return Mesh(np.empty((0, 3)), np.empty((0, 3), dtype=np.int64))
    return marching_cubes(grid, iso_fraction * peak)


def cmd_pipeline(args, cfg: PipelineConfig) -> int:
    bg = _load_background(args.background or cfg.background_path)
    if bg.spec != cfg.grid:
        raise CliError(EXIT_SPEC_MISMATCH, "background grid spec differs from configured grid")
    model_path = args.model or cfg.model_path
    model = None
    if model_path is not None:
        try:
            model = read_model(model_path)
        except OSError as exc:
            raise CliError(EXIT_CONFIG, f"cannot read model {model_path}: {exc}") from exc
        except formats.FormatError as exc:
            raise CliError(EXIT_CORRUPT, str(exc)) from exc

    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grids = _reconstruct_all(args.frames, cfg, args.jobs)
    floor = cfg.detection_floor * bg.peak
    state = StreamState()
    rows = []
    for grid in grids:
        try:
            sub = subtract_background(grid, bg)
        except SpecMismatchError as exc:
            raise CliError(EXIT_SPEC_MISMATCH, str(exc)) from exc
        sub = sub.with_values(np.where(sub.values < floor, 0.0, sub.values))
        if sub.values.max() > 0:
            sub = threshold_normalize(sub, cfg.keep_fraction)
        verdict = classify(model, extract_input(sub)) if model is not None else Verdict.REGULAR
        state, shown, flag = stream_filter(state, sub, verdict)
        e = grid.epoch
        formats.write_grid(out / f"grid_{e:04d}.hgrd", shown)
        formats.write_pgm(out / f"heatmap_{e:04d}.pgm",
                          heatmap_slice(shown, peak_voxel(shown)[1]).values)
        formats.write_obj(out / f"mesh_{e:04d}.obj", _mesh_for(shown, cfg.iso_fraction))
        rows.append((e, "regular" if verdict is Verdict.REGULAR else "ambiguous", Flag(flag).value))
    with open(out / "flags.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "verdict", "flag"])
        w.writerows(rows)
    print(f"processed {len(rows)} frames into {out}")
    return EXIT_OK


_LABELS = {"0": 0, "1": 1, "regular": 0, "ambiguous": 1}


def read_manifest(path) -> list[tuple[Path, int]]:
    base = Path(path).parent
    entries = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise CliError(EXIT_CONFIG, f"cannot read manifest {path}: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2 or parts[1].lower() not in _LABELS:
            raise CliError(EXIT_CONFIG, f"{path}:{n}: expected '<grid-file> <label>'")
        p = Path(parts[0])
        entries.append((p if p.is_absolute() else base / p, _LABELS[parts[1].lower()]))
    return entries


def cmd_train(args, cfg: PipelineConfig) -> int:
    entries = read_manifest(args.manifest)
    labels = {lbl for _, lbl in entries}
    if labels != {0, 1}:
        raise CliError(EXIT_SINGLE_CLASS, "manifest must contain both regular and ambiguous grids")
    data = []
    for p, lbl in entries:
        try:
            data.append((extract_input(formats.read_grid(p)), lbl))
        except OSError as exc:
            raise CliError(EXIT_CONFIG, f"cannot read grid {p}: {exc}") from exc
        except formats.FormatError as exc:
            raise CliError(EXIT_CORRUPT, str(exc)) from exc
    tcfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, seed=cfg.seed)
    model = init_model(Pooling(args.pooling), seed=cfg.seed)
    try:
        model, history = train(model, data, tcfg)
    except SingleClassError as exc:
        raise CliError(EXIT_SINGLE_CLASS, str(exc)) from exc
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_model(out, model)
    hist = Path(args.history) if args.history else out.with_suffix(".history.csv")
    write_history_csv(hist, history)
    print(f"model written to {out}, history to {hist}")
    return EXIT_OK


def inspect_file(path) -> dict:
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == formats.FRAME_MAGIC:
        return formats.frame_header(path)
    if magic == formats.GRID_MAGIC:
        info = formats.grid_header(path)
        if formats.sidecar_path(path).exists():
            info["sidecar"] = formats.read_sidecar(path)
        return info
    if magic == MODEL_MAGIC:
        return model_header(path)
    if magic[:2] == b"P5":
        img = formats.read_pgm(path)
        return {"format": "PGM", "rows": img.shape[0], "cols": img.shape[1]}
    if magic[:2] in (b"v ", b"f ") or magic == b"":
        mesh = formats.read_obj(path)
        return {"format": "OBJ", "vertices": len(mesh.vertices), "faces": len(mesh.faces)}
    raise formats.FormatError(f"{path}: unrecognised file type")


def cmd_inspect(args, cfg: PipelineConfig) -> int:
    for p in args.files:
        try:
            info = inspect_file(p)
        except OSError as exc:
            raise CliError(EXIT_CONFIG, f"cannot read {p}: {exc}") from exc
        except formats.FormatError as exc:
            raise CliError(EXIT_CORRUPT, str(exc)) from exc
        print(json.dumps({"file": str(p), **info}, sort_keys=True))
    return EXIT_OK


def cmd_dataset(args, cfg: PipelineConfig) -> int:
    """Write labelled synthetic grids plus a training manifest."""
    from voxradar.synthetic import Rig, labelled_frames

    rig = Rig(cfg.chirp, cfg.geometry, cfg.grid, cfg.keep_fraction)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for i, (grid, label) in enumerate(labelled_frames(args.count, seed=cfg.seed, rig=rig)):
        name = f"sample_{i:05d}.hgrd"
        formats.write_grid(out / name, grid)
        lines.append(f"{name} {'ambiguous' if label else 'regular'}")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")
    print(f"wrote {len(lines)} grids and manifest.txt to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voxradar", description=__doc__.split("\n")[0])
    parser.add_argument("--config", help="pipeline configuration JSON")
    parser.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    parser.add_argument("--jobs", type=int, default=1, help="parallel reconstruction workers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize HICF frames from a scene file")
    p.add_argument("scene")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--start", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="average background frames into an HGRD file")
    p.add_argument("frames", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("pipeline", help="reconstruct, subtract, filter and export frames")
    p.add_argument("frames", nargs="+")
    p.add_argument("--background")
    p.add_argument("--model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("train", help="train the frame classifier from a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--history")
    p.add_argument("--pooling", choices=[k.value for k in Pooling], default="max")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=16)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("inspect", help="print file headers")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("dataset", help="generate a labelled synthetic grid set")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=400)
    p.set_defaults(func=cmd_dataset)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

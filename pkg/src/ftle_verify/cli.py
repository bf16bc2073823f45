"""Command-line front end and experiment orchestration.

Verbs: ftle, attractors, metrics, certify, train, sweep, render. Each
reads a JSON experiment config and writes deterministic CSV/JSON/PNM
artifacts into the configured output directory, embedding the full
parameter set for reproducibility. Exit codes: 0 success, 1 usage error,
2 input-data error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import traceback
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import continuous as cont
from .attractors import final_state_histogram, simulate_ensemble
from .certificate import (
    make_certificate,
    region_from_dict,
    region_max_ftle,
    validate_divergence_bound,
)
from .dynamics import ContinuousSystem, GridSystem
from .errors import ConfigError, FtleVerifyError, InvariantError
from .fileio import dump_json, read_field_csv, write_field_csv, write_paths_csv
from .ftle import compute_ftle_field
from .gridworld import GridWorld, bundled_layout, load_layout_file
from .heatmap import render_heatmap, write_pnm
from .metrics import build_metric_report
from .policies import MlpPolicy, MlpPolicyWeights, QLearningConfig, TabularPolicy, make_scripted

GRID_NAMES = ("simple_wall", "scattered_blocks", "u_shape_trap")
CONTINUOUS_NAMES = tuple(cont.ENV_FACTORIES)
_CHECKPOINT_RE = re.compile(r"-ep(\d+)\.policy$")


@dataclass
class ExperimentConfig:
    environment: str = ""
    policy: dict | None = None
    t_int: int = 30
    exhaustive: bool = True
    n_traj: int = 500
    alpha: float = 0.25
    n_sim: int = 10
    t_escape: int | None = None
    seed: int = 0
    output_dir: str = "out"
    h: float | list | None = None
    slice: dict | None = None
    env_params: dict | None = None
    episode: int | None = None
    region: dict | None = None
    epsilon: float | None = None
    pairs: int = 1000
    sigma_max: float | None = None
    checkpoints: list | None = None
    checkpoint_episodes: list | None = None
    q_learning: dict | None = None
    timestamp: str | None = None
    colormap: str = "ember"
    upscale: int = 8
    record_paths: bool = False

    def __post_init__(self):
        if self.t_int < 1:
            raise ConfigError("t_int must be >= 1")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must lie in (0, 1]")
        if self.n_sim < 1 or self.n_traj < 1 or self.pairs < 1 or self.upscale < 1:
            raise ConfigError("n_sim, n_traj, pairs, and upscale must be >= 1")
        if self.t_escape is not None and self.t_escape < 1:
            raise ConfigError("t_escape must be >= 1")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}; expected a subset of {sorted(known)}")
        return cls(**data)

    def resolved_t_escape(self) -> int:
        return self.t_escape if self.t_escape is not None else 4 * self.t_int

    def echo(self) -> dict:
        out = asdict(self)
        out["t_escape"] = self.resolved_t_escape()
        return out


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _grid_world(cfg: ExperimentConfig) -> GridWorld:
    name = cfg.environment
    if name in GRID_NAMES:
        world, _ = bundled_layout(name)
        return world
    if name.endswith(".txt"):
        _require(os.path.exists(name), f"layout file not found: {name}")
        world, _ = load_layout_file(name)
        return world
    raise ConfigError(f"unknown grid environment {name!r}")


def _grid_policy(cfg: ExperimentConfig, world: GridWorld):
    spec = cfg.policy
    _require(isinstance(spec, dict) and spec, "config needs a policy table")
    if "scripted" in spec:
        kwargs = {k: v for k, v in spec.items() if k != "scripted"}
        if "cycle" in kwargs:
            kwargs["cycle"] = [tuple(c) for c in kwargs["cycle"]]
        return make_scripted(spec["scripted"], world, **kwargs)
    if "checkpoint" in spec:
        path = spec["checkpoint"]
        _require(os.path.exists(path), f"checkpoint file not found: {path}")
        return TabularPolicy.load(path)
    if "mlp" in spec:
        path = spec["mlp"]
        _require(os.path.exists(path), f"weights file not found: {path}")
        return MlpPolicy(MlpPolicyWeights.load(path))
    raise ConfigError("policy table needs one of: scripted, checkpoint, mlp")


def _continuous_policy(cfg: ExperimentConfig, env):
    spec = cfg.policy
    _require(isinstance(spec, dict) and "scripted" in spec,
             "continuous environments need a scripted policy table")
    kwargs = {k: v for k, v in spec.items() if k != "scripted"}
    return make_scripted(spec["scripted"], env, **kwargs)


def _slice_spec(cfg: ExperimentConfig, env) -> cont.AnalysisSlice:
    raw = cfg.slice or {}
    free = tuple(raw.get("free_dims", (0, 1)))
    fixed = tuple(raw.get("fixed", [0.0] * env.dims))
    resolution = tuple(raw.get("resolution", (64, 64)))
    bounds = raw.get("bounds")
    if bounds is not None:
        bounds = (tuple(bounds[0]), tuple(bounds[1]))
    return cont.AnalysisSlice(free, fixed, resolution, bounds)


def build_system(cfg: ExperimentConfig):
    """Resolve the config into (system, goal_cells, descriptor)."""
    if cfg.environment in CONTINUOUS_NAMES:
        env = cont.ENV_FACTORIES[cfg.environment](cfg.env_params)
        policy = _continuous_policy(cfg, env)
        closed = ContinuousSystem(env, policy)
        sliced = cont.slice_to_grid(closed, _slice_spec(cfg, env))
        goal_cells = sliced.goal_region_cells()
        return sliced, goal_cells, {"environment": cfg.environment, "policy": policy.name}
    world = _grid_world(cfg)
    policy = _grid_policy(cfg, world)
    sys_ = GridSystem(world, policy)
    name = getattr(policy, "name", "policy")
    return sys_, frozenset({world.goal}), {"environment": world.name, "policy": name}


def _image_path(base: str, cfg: ExperimentConfig) -> str:
    ext = ".pgm" if cfg.colormap == "gray" else ".ppm"
    return base + ext


def _ensure_outdir(cfg: ExperimentConfig) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


# --------------------------------------------------------------------------
# commands

def cmd_ftle(cfg: ExperimentConfig) -> dict:
    out = _ensure_outdir(cfg)
    sys_, _, desc = build_system(cfg)
    field = compute_ftle_field(sys_, cfg.t_int, h=cfg.h)
    csv_path = os.path.join(out, "ftle_field.csv")
    write_field_csv(csv_path, field.values, field.valid)
    image = render_heatmap(field.values, field.valid, cfg.colormap, cfg.upscale)
    img_path = _image_path(os.path.join(out, "ftle_field"), cfg)
    write_pnm(image, img_path)
    summary = {
        "command": "ftle",
        "scheme": field.scheme,
        "horizon": field.horizon,
        "valid_cells": int(field.valid.sum()),
        "sigma_min": float(field.values[field.valid].min()) if field.valid.any() else 0.0,
        "sigma_max": float(field.values[field.valid].max()) if field.valid.any() else 0.0,
        "row_coords": field.row_coords,
        "col_coords": field.col_coords,
        "system": desc,
        "params": cfg.echo(),
    }
    json_path = os.path.join(out, "ftle_summary.json")
    dump_json(json_path, summary)
    return {"field_csv": csv_path, "heatmap": img_path, "summary": json_path}


def _run_ensemble(cfg: ExperimentConfig, sys_):
    ens = simulate_ensemble(sys_, cfg.n_traj, cfg.t_int, cfg.seed,
                            exhaustive=cfg.exhaustive,
                            record_paths=cfg.record_paths)
    hist = final_state_histogram(ens, sys_)
    return ens, hist


def cmd_attractors(cfg: ExperimentConfig) -> dict:
    out = _ensure_outdir(cfg)
    sys_, goal_cells, desc = build_system(cfg)
    ens, hist = _run_ensemble(cfg, sys_)
    from .attractors import detect_local_peaks

    peaks = detect_local_peaks(hist, exclude=goal_cells)
    csv_path = os.path.join(out, "attractor_hist.csv")
    valid = _valid_mask(sys_)
    write_field_csv(csv_path, hist.counts.astype(float), valid)
    image = render_heatmap(hist.counts, valid, cfg.colormap, cfg.upscale)
    img_path = _image_path(os.path.join(out, "attractor_hist"), cfg)
    write_pnm(image, img_path)
    payload = {
        "command": "attractors",
        "n_traj": ens.n_traj,
        "exhaustive": ens.exhaustive,
        "total_mass": hist.total,
        "peaks": [{"cell": list(p.cell), "h": p.value} for p in peaks],
        "goal_cells": sorted(list(c) for c in goal_cells),
        "system": desc,
        "params": cfg.echo(),
    }
    json_path = os.path.join(out, "attractor_peaks.json")
    dump_json(json_path, payload)
    paths = {"hist_csv": csv_path, "heatmap": img_path, "peaks": json_path}
    if cfg.record_paths and ens.paths is not None:
        traj_path = os.path.join(out, "trajectories.csv")
        write_paths_csv(traj_path, ens.paths)
        paths["trajectories"] = traj_path
    return paths


def _valid_mask(sys_):
    if hasattr(sys_, 'valid_cells'):
        mask = np.zeros(sys_.grid_shape, dtype=bool)
        for cell in sys_.valid_cells():
            mask[cell] = True
        return mask
    return np.ones(sys_.grid_shape, dtype=bool)


def _metric_row(episode: int, report) -> str:
    def enc(v):
        return "inf" if math.isinf(v) else repr(float(v))

    return f"{episode},{enc(report.mbr)},{enc(report.asas)},{enc(report.tasas)}"


def _compute_report(cfg: ExperimentConfig, sys_, goal_cells, desc):
    _require(bool(goal_cells),
             "goal region covers no analysis cells; widen the slice or goal radius")
    field = compute_ftle_field(sys_, cfg.t_int, h=cfg.h)
    _, hist = _run_ensemble(cfg, sys_)
    return build_metric_report(
        sys_, field, hist, goal_cells,
        alpha=cfg.alpha, n_sim=cfg.n_sim, t_escape=cfg.resolved_t_escape(),
        seed=cfg.seed, params={"system": desc, "config": cfg.echo()},
    )


def cmd_metrics(cfg: ExperimentConfig) -> dict:
    out = _ensure_outdir(cfg)
    sys_, goal_cells, desc = build_system(cfg)
    report = _compute_report(cfg, sys_, goal_cells, desc)
    json_path = os.path.join(out, "metric_report.json")
    dump_json(json_path, {"command": "metrics", **report.to_dict()})
    episode = cfg.episode if cfg.episode is not None else -1
    csv_path = os.path.join(out, "metrics_row.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("episode,mbr,asas,tasas\n")
        fh.write(_metric_row(episode, report) + "\n")
    return {"report": json_path, "row_csv": csv_path}


def cmd_certify(cfg: ExperimentConfig) -> dict:
    out = _ensure_outdir(cfg)
    _require(cfg.epsilon is not None and cfg.epsilon > 0, "certify needs a positive epsilon")
    _require(cfg.region is not None, "certify needs a region table")
    region = region_from_dict(cfg.region)
    if cfg.sigma_max is not None:
        sigma_max = float(cfg.sigma_max)
        resolution = (0, 0)
        validation = {"skipped": True,
                      "reason": "sigma_max supplied directly; no field to validate against"}
        field_ref = None
    else:
        sys_, _, _ = build_system(cfg)
        field = compute_ftle_field(sys_, cfg.t_int, h=cfg.h)
        sigma_max = region_max_ftle(field, region)
        resolution = field.shape
        report = validate_divergence_bound(sys_, region, field, cfg.t_int,
                                           pairs=cfg.pairs, seed=cfg.seed)
        validation = report.to_dict()
        field_ref = "ftle_field.csv"
        write_field_csv(os.path.join(out, "ftle_field.csv"), field.values, field.valid)
    certificate = make_certificate(region, sigma_max, cfg.t_int, cfg.epsilon,
                                   resolution, cfg.timestamp)
    cert_path = os.path.join(out, "certificate.json")
    dump_json(cert_path, {**certificate.to_dict(), "params": cfg.echo()})
    val_path = os.path.join(out, "bound_validation.json")
    dump_json(val_path, {"command": "certify", **validation})
    overlay_path = os.path.join(out, "region_overlay.json")
    dump_json(overlay_path, {
        "region": region.to_dict(),
        "field_reference": field_ref,
        "attractor_reference": "attractor_hist.csv",
    })
    return {"certificate": cert_path, "validation": val_path, "overlay": overlay_path}


def cmd_train(cfg: ExperimentConfig) -> dict:
    from .policies import train_tabular_q

    out = _ensure_outdir(cfg)
    world = _grid_world(cfg)
    qcfg = QLearningConfig(**(cfg.q_learning or {}))
    marks = cfg.checkpoint_episodes or [0, 150, 750, 1200]
    marks = sorted({int(e) for e in marks if 0 <= int(e) <= qcfg.episodes})
    run = train_tabular_q(world, qcfg, checkpoint_episodes=marks)
    files = {}
    for episode, policy in sorted(run.checkpoints.items()):
        path = os.path.join(out, f"{world.name}-ep{episode}.policy")
        policy.save(path)
        files[episode] = path
    summary_path = os.path.join(out, "training_summary.json")
    dump_json(summary_path, {
        "command": "train",
        "environment": world.name,
        "checkpoints": {str(e): p for e, p in files.items()},
        "q_learning": asdict(qcfg),
        "params": cfg.echo(),
    })
    return {"checkpoints": files, "summary": summary_path}


def cmd_sweep(cfg: ExperimentConfig) -> dict:
    out = _ensure_outdir(cfg)
    table_path = os.path.join(out, "sweep_table.csv")
    rows = []
    for path in cfg.checkpoints or []:
        match = _CHECKPOINT_RE.search(str(path))
        _require(match is not None,
                 f"checkpoint {path!r} does not match '<env>-ep<episode>.policy'")
        _require(os.path.exists(path), f"checkpoint file not found: {path}")
        episode = int(match.group(1))
        sub = ExperimentConfig(**{**asdict(cfg), "policy": {"checkpoint": str(path)},
                                  "episode": episode})
        sys_, goal_cells, desc = build_system(sub)
        report = _compute_report(sub, sys_, goal_cells, desc)
        rows.append((episode, report))
    rows.sort(key=lambda pair: pair[0])
    with open(table_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("episode,mbr,asas,tasas\n")
        for episode, report in rows:
            fh.write(_metric_row(episode, report) + "\n")
    return {"table": table_path}


def cmd_render(input_csv: str, output_path: str, colormap: str, upscale: int) -> dict:
    if not os.path.exists(input_csv):
        raise ConfigError(f"field CSV not found: {input_csv}")
    values, valid = read_field_csv(input_csv)
    image = render_heatmap(values, valid, colormap, upscale)
    write_pnm(image, output_path)
    return {"image": output_path}


# --------------------------------------------------------------------------
# argument parsing and dispatch

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ftle-verify",
                     description="Dynamical-systems verification of deterministic policies")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    for verb in ("ftle", "attractors", "metrics", "certify", "train", "sweep"):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True, help="experiment config JSON")
        if verb == "certify":
            p.add_argument("--epsilon", type=float, default=None)
            p.add_argument("--sigma-max", type=float, default=None)
            p.add_argument("--t-int", type=int, default=None)
    render = sub.add_parser("render")
    render.add_argument("--input", required=True, help="field CSV to render")
    render.add_argument("--output", required=True, help="image path (.pgm/.ppm)")
    render.add_argument("--colormap", default="ember")
    render.add_argument("--upscale", type=int, default=8)
    return parser


def _dispatch(args) -> dict:
    if args.verb == "render":
        return cmd_render(args.input, args.output, args.colormap, args.upscale)
    cfg = ExperimentConfig.from_json(args.config)
    if args.verb == "certify":
        overrides = {}
        if args.epsilon is not None:
            overrides["epsilon"] = args.epsilon
        if args.sigma_max is not None:
            overrides["sigma_max"] = args.sigma_max
        if args.t_int is not None:
            overrides["t_int"] = args.t_int
        if overrides:
            cfg = ExperimentConfig(**{**asdict(cfg), **overrides})
    handler = {
        "ftle": cmd_ftle,
        "attractors": cmd_attractors,
        "metrics": cmd_metrics,
        "certify": cmd_certify,
        "train": cmd_train,
        "sweep": cmd_sweep,
    }[args.verb]
    return handler(cfg)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        outputs = _dispatch(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InvariantError, AssertionError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except FtleVerifyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3
    for key, value in outputs.items():
        print(f"{key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

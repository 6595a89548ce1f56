"""Command-line front-end: simulate datasets, run the estimators, audit Jacobians.

Every command reads an optional JSON config, writes CSV and JSON artifacts
into ``--out`` and returns one of the exit codes below.  File layouts are
described in ``docs/formats.md``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.stats import chi2

from .core import DimensionError, LieGroup
from .diffdrive import (
    Calib,
    NoiseParams,
    WheelParams,
    calibrate,
    read_anchor_csv,
    read_encoder_csv,
    write_anchor_csv,
    write_encoder_csv,
)
from .estimation import (
    BeaconMeasurement,
    ControlInput,
    ConvergenceError,
    ESKFLocalizer,
    RankDeficientError,
    SAMSolver,
    SingularInnovationError,
    dead_reckon,
    null_space_dim,
    sam_jacobian,
)
from .jaccheck import DEFAULT_TOL, audit
from .rot3 import Rot3
from .se2 import Pose2
from .se3 import Pose3
from .simulate import MotionNoise, make_encoder_run, make_localization, make_sam_graph, make_selfcal_graph

__all__ = ["main", "build_parser", "load_config", "EXIT_OK", "EXIT_VALIDATION",
           "EXIT_CONVERGENCE", "EXIT_CONFORMANCE"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_CONFORMANCE = 4


class ConfigError(ValueError):
    pass


# -- config -----------------------------------------------------------------------

DEFAULTS: dict[str, Any] = {
    "dim": 2,
    "seed": 0,
    "noisy": True,
    "steps": 200,
    "dt": 0.1,
    "v": 1.0,
    "w": 0.1,
    "noise": {},
    "beacons": None,
    "prior_sigma": 0.01,
    "bias": [0.05, -0.02],
    "encoder": {},
    "trials": 100,
    "tolerance": DEFAULT_TOL,
}

ENCODER_DEFAULTS: dict[str, Any] = {
    "kind": "figure8",
    "n_ticks": 500,
    "wheel": [0.1, 0.1, 0.5],
    "calib": [1.02, 0.98, 1.05],
    "c0": [1.0, 1.0, 1.0],
    "noisy": False,
    "noise": {},
    "dt": 0.1,
    "v": 0.5,
    "anchor_every": 50,
    "anchor_sigma": 1e-3,
}


def load_config(path: str | Path | None, overrides: dict[str, Any] | None = None) -> dict[str, Any]:
    """Defaults, then the JSON file, then command-line overrides."""
    cfg = dict(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(user) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(user)
    for k, v in (overrides or {}).items():
        if v is not None:
            cfg[k] = v
    enc = dict(ENCODER_DEFAULTS)
    unknown = set(cfg["encoder"]) - set(ENCODER_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown encoder keys: {sorted(unknown)}")
    enc.update(cfg["encoder"])
    cfg["encoder"] = enc
    if cfg["dim"] not in (2, 3):
        raise ConfigError("dim must be 2 or 3")
    seed = cfg["seed"]
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return cfg


def _motion_noise(cfg) -> MotionNoise:
    try:
        noise = MotionNoise(**cfg["noise"])
    except TypeError as exc:
        raise ConfigError(f"bad noise block: {exc}") from exc
    if any(v < 0 for v in vars(noise).values()):
        raise ConfigError("noise standard deviations must be nonnegative")
    return noise


def _encoder_noise(enc) -> NoiseParams:
    kw = dict(enc["noise"])
    if "Q_s" in kw:
        kw["Q_s"] = np.asarray(kw["Q_s"], dtype=float)
    try:
        return NoiseParams(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad encoder noise block: {exc}") from exc


def _wheel(enc) -> WheelParams:
    return WheelParams(*map(float, enc["wheel"]))


# -- pose coordinates -------------------------------------------------------------


def pose_columns(dim: int) -> list[str]:
    return ["x", "y", "theta"] if dim == 2 else ["x", "y", "z", "rx", "ry", "rz"]


def pose_to_row(X: LieGroup) -> list[float]:
    """``(x, y, theta)`` in 2D; translation and rotation vector in 3D."""
    if isinstance(X, Pose2):
        return [X.x, X.y, X.angle]
    return [*X.translation, *Rot3(X.rotation()).log()]


def pose_from_row(vals: Sequence[float]) -> LieGroup:
    if len(vals) == 3:
        return Pose2(*vals)
    return Pose3(Rot3.exp(np.asarray(vals[3:])), np.asarray(vals[:3]))


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])


def _read_csv(path: Path) -> tuple[list[str], list[list[float]]]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"{path} is empty")
    try:
        return rows[0], [[float(v) for v in r] for r in rows[1:] if r]
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _pose_errors(est: Sequence[LieGroup], truth: Sequence[LieGroup]) -> tuple[float, float]:
    """Position and rotation RMSE over a trajectory."""
    dim = 2 if isinstance(truth[0], Pose2) else 3
    dp, dr = [], []
    for X, T in zip(est, truth):
        e = T.inverse().compose(X)
        dp.append(float(np.sum((np.asarray(X.translation) - np.asarray(T.translation)) ** 2)))
        rot = e.angle if dim == 2 else np.linalg.norm(Rot3(e.rotation()).log())
        dr.append(float(rot) ** 2)
    return math.sqrt(np.mean(dp)), math.sqrt(np.mean(dr))


# -- simulate ---------------------------------------------------------------------


def _localization(cfg):
    return make_localization(
        cfg["dim"], int(cfg["steps"]), cfg["seed"], noise=_motion_noise(cfg),
        noisy=bool(cfg["noisy"]), dt=float(cfg["dt"]), v=float(cfg["v"]),
        w=float(cfg["w"]), beacons=cfg["beacons"],
    )


def _encoder_run(cfg):
    enc = cfg["encoder"]
    return make_encoder_run(
        enc["kind"], int(enc["n_ticks"]), cfg["seed"], wheel=_wheel(enc),
        calib=Calib(*map(float, enc["calib"])), noise=_encoder_noise(enc),
        noisy=bool(enc["noisy"]), dt=float(enc["dt"]), v=float(enc["v"]),
        anchor_every=int(enc["anchor_every"]),
    )


def cmd_simulate(cfg, out: Path) -> int:
    sc = _localization(cfg)
    dim = sc.dim
    axes = ["x", "y", "z"][:dim]
    n = sc.initial_pose.dof
    _write_csv(out / "truth.csv", ["step", "t", *pose_columns(dim)],
               ([k + 1, (k + 1) * sc.dt, *pose_to_row(X)] for k, X in enumerate(sc.truth)))
    _write_csv(out / "controls.csv", ["step", *(f"u{i}" for i in range(n))],
               ([k + 1, *u.u] for k, u in enumerate(sc.controls)))
    _write_csv(out / "measurements.csv", ["step", "beacon", *(f"y_{a}" for a in axes)],
               ([k + 1, m.beacon_id, *m.y] for k, ms in enumerate(sc.measurements) for m in ms))
    _write_csv(out / "beacons.csv", ["beacon", *axes],
               ([i, *b] for i, b in enumerate(sc.beacons)))
    run = _encoder_run(cfg)
    write_encoder_csv(out / "encoders.csv", run.ticks)
    write_anchor_csv(out / "anchors.csv", run.anchors)
    _write_csv(out / "encoder_truth.csv", ["t", "x", "y", "theta"],
               ([k * run.dt, *pose_to_row(X)] for k, X in enumerate(run.poses)))
    meta = {
        "dim": dim,
        "dt": sc.dt,
        "seed": cfg["seed"],
        "W_diag": np.diag(sc.controls[0].W).tolist(),
        "N_diag": np.diag(sc.noise.N(dim)).tolist(),
        "config": cfg,
    }
    _write_json(out / "dataset.json", meta)
    return EXIT_OK


def _load_localization(data: Path):
    """Rebuild the filter inputs written by ``simulate``."""
    try:
        meta = json.loads((data / "dataset.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read dataset: {exc}") from exc
    dim = meta["dim"]
    W = np.diag(meta["W_diag"])
    N = np.diag(meta["N_diag"])
    _, beacon_rows = _read_csv(data / "beacons.csv")
    beacons = np.array([r[1:] for r in beacon_rows])
    _, control_rows = _read_csv(data / "controls.csv")
    controls = [ControlInput(np.array(r[1:]), W) for r in control_rows]
    meas: list[list[BeaconMeasurement]] = [[] for _ in controls]
    _, meas_rows = _read_csv(data / "measurements.csv")
    for r in meas_rows:
        meas[int(r[0]) - 1].append(BeaconMeasurement(int(r[1]), np.array(r[2:]), N))
    _, truth_rows = _read_csv(data / "truth.csv")
    truth = [pose_from_row(r[2:]) for r in truth_rows]
    if beacons.shape[1] != dim or len(truth) != len(controls):
        raise ConfigError("dataset files disagree on dimension or length")
    return dim, meta["dt"], beacons, controls, meas, truth


# -- estimators -------------------------------------------------------------------


def cmd_eskf(cfg, out: Path, data: Path | None = None) -> int:
    if data is None:
        sc = _localization(cfg)
        dim, dt, beacons, controls, meas, truth = (sc.dim, sc.dt, sc.beacons, sc.controls,
                                                   sc.measurements, sc.truth)
    else:
        dim, dt, beacons, controls, meas, truth = _load_localization(data)
    X0 = Pose2() if dim == 2 else Pose3()
    est = ESKFLocalizer(X0, np.zeros((X0.dof, X0.dof)), list(beacons)).fit(controls, meas)
    nees = est.nees(truth)
    n = X0.dof
    rows = []
    for k, (s, e) in enumerate(zip(est.states_, nees)):
        rows.append([k + 1, (k + 1) * dt, *pose_to_row(s.mean), *np.diag(s.cov), e])
    _write_csv(out / "eskf_states.csv",
               ["step", "t", *pose_columns(dim), *(f"var{i}" for i in range(n)), "nees"], rows)
    rmse_p, rmse_r = _pose_errors(est.poses_, truth)
    terminal = float(np.linalg.norm(truth[-1].minus(est.poses_[-1])))
    _write_json(out / "eskf_summary.json", {
        "dim": dim,
        "steps": len(controls),
        "rmse_position": rmse_p,
        "rmse_rotation": rmse_r,
        "terminal_error": terminal,
        "mean_nees": float(np.mean(nees)),
        "nees_dof": n,
    })
    return EXIT_OK


def _block_rows(state, cov, truth, labels) -> tuple[list[str], list[list]]:
    """One row per block: coordinates, marginal variances and NEES against truth."""
    width = max(b.dof for b in state.blocks)
    layout = state.layout
    rows = []
    for h, (X, T) in enumerate(zip(state.blocks, truth.blocks)):
        s = layout.slice(h)
        P = cov[s, s]
        coords = pose_to_row(X) if isinstance(X, (Pose2, Pose3)) else list(X.vector)
        e = X.minus(T)
        nees = float(e @ np.linalg.solve(P, e))
        pad = [None] * (width - len(coords))
        rows.append([h, labels[h], *coords, *pad, *np.diag(P), *pad, nees])
    header = ["block", "kind", *(f"v{i}" for i in range(width)),
              *(f"var{i}" for i in range(width)), "nees"]
    return header, rows


def _block_labels(state) -> list[str]:
    labels = []
    for X in state.blocks:
        labels.append("pose" if isinstance(X, (Pose2, Pose3)) else "vector")
    return labels


def _solve_summary(solver: SAMSolver, truth) -> dict:
    poses = [(X, T) for X, T in zip(solver.state_.blocks, truth.blocks) if isinstance(X, (Pose2, Pose3))]
    beacons = [(X, T) for X, T in zip(solver.state_.blocks, truth.blocks)
               if not isinstance(X, (Pose2, Pose3))]
    m = solver.graph_.n_residuals
    rmse_p, rmse_r = _pose_errors([p[0] for p in poses], [p[1] for p in poses])
    return {
        "converged": bool(solver.converged_),
        "iterations": int(solver.n_iter_),
        "initial_cost": float(solver.initial_cost_),
        "final_cost": float(solver.cost_),
        "residuals": m,
        "chi2_95": float(chi2.ppf(0.95, m)),
        "rmse_position": rmse_p,
        "rmse_rotation": rmse_r,
        "beacon_errors": [float(np.linalg.norm(X.vector - T.vector)) for X, T in beacons],
    }


def cmd_sam(cfg, out: Path) -> int:
    noise = _motion_noise(cfg)
    graph, truth = make_sam_graph(cfg["dim"], cfg["seed"], noise=noise, noisy=bool(cfg["noisy"]),
                                  prior_sigma=float(cfg["prior_sigma"]))
    solver = SAMSolver().fit(graph)
    header, rows = _block_rows(solver.state_, solver.covariance_, truth, _block_labels(truth))
    _write_csv(out / "sam_estimates.csv", header, rows)
    summary = _solve_summary(solver, truth)
    # gauge check: the same problem without its prior
    free = solver.graph_.without("prior")
    summary["null_dim_without_prior"] = null_space_dim(sam_jacobian(free))[0]
    _write_json(out / "sam_summary.json", summary)
    return EXIT_OK if solver.converged_ else EXIT_CONVERGENCE


def cmd_selfcal(cfg, out: Path) -> int:
    if cfg["dim"] != 2:
        raise ConfigError("selfcal is planar; use --dim 2")
    noise = _motion_noise(cfg)
    graph, truth = make_selfcal_graph(cfg["bias"], cfg["seed"], noise=noise, noisy=bool(cfg["noisy"]),
                                      prior_sigma=float(cfg["prior_sigma"]))
    start = dead_reckon(graph.state, graph.factors, bias=0)
    solver = SAMSolver(initialize=False).fit(graph.with_state(start))
    labels = _block_labels(truth)
    labels[0] = "bias"
    header, rows = _block_rows(solver.state_, solver.covariance_, truth, labels)
    _write_csv(out / "selfcal_estimates.csv", header, rows)
    summary = _solve_summary(solver, truth)
    summary["bias"] = solver.state_[0].vector.tolist()
    summary["bias_std"] = solver.block_std(0).tolist()
    summary["bias_true"] = truth[0].vector.tolist()
    _write_json(out / "selfcal_summary.json", summary)
    return EXIT_OK if solver.converged_ else EXIT_CONVERGENCE


def cmd_ddcalib(cfg, out: Path, data: Path | None = None) -> int:
    enc = cfg["encoder"]
    wheel, noise = _wheel(enc), _encoder_noise(enc)
    truth_poses = None
    calib_true = None
    if data is None:
        run = _encoder_run(cfg)
        ticks, anchors = run.ticks, run.anchors
        truth_poses = {round(k * run.dt, 9): X for k, X in enumerate(run.poses)}
        calib_true = list(run.calib.vector)
    else:
        ticks = read_encoder_csv(data / "encoders.csv")
        anchors = read_anchor_csv(data / "anchors.csv")
    summary: dict[str, Any] = {"calib_true": calib_true}
    try:
        res = calibrate(ticks, anchors, wheel, noise, c0=enc["c0"],
                        anchor_cov=float(enc["anchor_sigma"]) ** 2 * np.eye(3))
    except RankDeficientError as exc:
        summary.update({"converged": False, "null_dim": exc.null_dim,
                        "null_basis": None if exc.null_basis is None else exc.null_basis.T.tolist()})
        _write_json(out / "ddcalib_summary.json", summary)
        raise
    rows = []
    for (t, _), X in zip(sorted(anchors, key=lambda a: a[0]), res.poses):
        T = None if truth_poses is None else truth_poses.get(round(t, 9))
        err = None if T is None else float(np.linalg.norm(X.minus(T)))
        rows.append([t, *pose_to_row(X), err])
    _write_csv(out / "ddcalib_poses.csv", ["t", "x", "y", "theta", "error"], rows)
    summary.update({
        "calib": list(res.calib.vector),
        "calib_std": np.sqrt(np.diag(res.covariance)).tolist(),
        "iterations": res.iterations,
        "converged": res.converged,
        "final_cost": res.cost,
        "null_dim": 0,
    })
    _write_json(out / "ddcalib_summary.json", summary)
    return EXIT_OK if res.converged else EXIT_CONVERGENCE


def cmd_jaccheck(cfg, out: Path, inject: Sequence[str] = ()) -> int:
    try:
        report = audit(int(cfg["trials"]), cfg["seed"], float(cfg["tolerance"]), inject=inject)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    _write_json(out / "jaccheck.json", report)
    return EXIT_OK if report["pass"] else EXIT_CONFORMANCE


# -- entry point ------------------------------------------------------------------


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liestate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config document")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=_u64, help="RNG seed (overrides the config)")
    common.add_argument("--dim", type=int, choices=(2, 3), help="2 or 3 (overrides the config)")
    for name, help_ in [
        ("simulate", "write a synthetic dataset"),
        ("eskf", "error-state Kalman filter localization"),
        ("sam", "three-pose, three-beacon smoothing and mapping"),
        ("selfcal", "smoothing and mapping with odometry bias estimation"),
        ("ddcalib", "differential-drive intrinsic calibration"),
        ("jaccheck", "audit analytic Jacobians against finite differences"),
    ]:
        p = sub.add_parser(name, parents=[common], help=help_)
        if name in ("eskf", "ddcalib"):
            p.add_argument("--data", type=Path, help="dataset directory written by simulate")
        if name == "jaccheck":
            p.add_argument("--inject", action="append", default=[], help=argparse.SUPPRESS)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    try:
        cfg = load_config(args.config, {"seed": args.seed, "dim": args.dim})
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out)
        if args.command == "eskf":
            return cmd_eskf(cfg, args.out, args.data)
        if args.command == "sam":
            return cmd_sam(cfg, args.out)
        if args.command == "selfcal":
            return cmd_selfcal(cfg, args.out)
        if args.command == "ddcalib":
            return cmd_ddcalib(cfg, args.out, args.data)
        return cmd_jaccheck(cfg, args.out, args.inject)
    except (RankDeficientError, ConvergenceError, SingularInnovationError) as exc:
        print(f"liestate: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ConfigError, DimensionError, ValueError, TypeError, KeyError, OSError) as exc:
        print(f"liestate: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface: run / sweep / analyze / compare.

Configs are JSON files whose keys mirror the run parameters plus the
initial-data block, e.g.::

    {
      "epsilon": 0.1, "n": 64, "dt_requested": 2e-5, "t_end": 0.5,
      "scheme": "imex1", "stabilization": 0.0, "dealias_on": true,
      "seed": 7,
      "init": {"name": "smooth-wave", "params": {"a": 0.7}},
      "output_dir": "out/run1",
      "sample_every": 5,
      "snapshot_times": [0.25, 0.5],
      "emit_plots_data": false
    }

Exit codes: 0 success, 1 audit failure, 2 blow-up abort, 3 usage error.
Sweep parallelism is capped by the ``GLNEMATIC_THREADS`` environment
variable.  All CSV output uses '\\n' line endings, '.' decimals, and 17
significant digits.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics, dynamics, limit
from .concentration import default_ball_radius, detect_sigma
from .diagnostics import EnergySample, energy_audit, penalty_scaling_fit, polar_sample
from .dynamics import BlowUpError
from .initial import GENERATORS, generate_initial
from .snapshot import SnapshotError, read_snapshot, write_snapshot
from .spectral import make_grid
from .state import MAX_PRINCIPLE_TOL, SimParams

SCALING_COLUMNS = ("epsilon", "sup_penalty_l2", "grad_rho_l2sq", "wedge_residual_max")
COMPARE_COLUMNS = ("t", "v_l2_diff", "d_l2_diff", "d_max_diff")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    epsilon: float
    n: int
    dt_requested: float
    t_end: float
    init_name: str
    init_params: dict = field(default_factory=dict)
    scheme: str = "imex1"
    stabilization: float = 0.0
    eps0_sq: float | None = None
    ball_radius: float | None = None
    dealias_on: bool = True
    seed: int = 0
    output_dir: str = "out"
    sample_every: int = 1
    snapshot_times: tuple = ()
    emit_plots_data: bool = False

    def sim_params(self) -> SimParams:
        return SimParams(
            epsilon=self.epsilon,
            n=self.n,
            dt_requested=self.dt_requested,
            t_end=self.t_end,
            scheme=self.scheme,
            stabilization=self.stabilization,
            eps0_sq=self.eps0_sq,
            ball_radius=self.ball_radius,
            dealias_on=self.dealias_on,
            seed=self.seed,
        )


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path!s}: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> RunConfig:
    try:
        init = raw["init"]
        cfg = RunConfig(
            epsilon=float(raw["epsilon"]),
            n=int(raw["n"]),
            dt_requested=float(raw["dt_requested"]),
            t_end=float(raw["t_end"]),
            init_name=init["name"],
            init_params=dict(init.get("params", {})),
            scheme=raw.get("scheme", "imex1"),
            stabilization=float(raw.get("stabilization", 0.0)),
            eps0_sq=raw.get("eps0_sq"),
            ball_radius=raw.get("ball_radius"),
            dealias_on=bool(raw.get("dealias_on", True)),
            seed=int(raw.get("seed", 0)),
            output_dir=raw.get("output_dir", "out"),
            sample_every=int(raw.get("sample_every", 1)),
            snapshot_times=tuple(raw.get("snapshot_times", ())),
            emit_plots_data=bool(raw.get("emit_plots_data", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid config: {exc}") from exc
    if cfg.init_name not in GENERATORS:
        raise UsageError(
            f"unknown generator {cfg.init_name!r}; known: {sorted(GENERATORS)}"
        )
    for t in cfg.snapshot_times:
        if not (0.0 <= t <= cfg.t_end):
            raise UsageError(f"snapshot time {t} outside [0, {cfg.t_end}]")
    if cfg.sample_every < 1:
        raise UsageError("sample_every must be >= 1")
    try:
        cfg.sim_params()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return cfg


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path, columns, rows) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _snapshot_name(t_target: float) -> str:
    return f"snapshot_t{t_target:.6f}.bin"


def execute_run(cfg: RunConfig):
    """Run one simulation; returns (final_state, trajectory, report dict).

    Writes energy.csv, requested snapshots, and report.json into
    ``cfg.output_dir``.  Snapshot times resolve to the first sample instant
    at or after the requested time.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = cfg.sim_params()
    grid = make_grid(cfg.n)
    init = generate_initial(cfg.init_name, cfg.init_params, grid, cfg.seed)

    pending = sorted(cfg.snapshot_times)

    def sink(state, sample):
        while pending and state.t >= pending[0] - 1e-9:
            target = pending.pop(0)
            write_snapshot(state, cfg.epsilon, out / _snapshot_name(target))

    final, trajectory = dynamics.run(params, init, cfg.sample_every, sink)

    write_csv(
        out / "energy.csv",
        EnergySample.CSV_COLUMNS,
        [s.as_row() for s in trajectory],
    )

    max_d = max((s.max_d for s in trajectory), default=0.0)
    max_principle = {
        "max_abs_d": max_d,
        "threshold": 1.0 + MAX_PRINCIPLE_TOL,
        "passed": max_d <= 1.0 + MAX_PRINCIPLE_TOL,
    }
    if len(trajectory) >= 2:
        audit = energy_audit(trajectory, params.dt_effective * cfg.sample_every)
        audit_dict = audit.as_dict()
        passed = audit.passed and max_principle["passed"]
    else:
        audit_dict = {"passed": True, "note": "trajectory too short to audit"}
        passed = max_principle["passed"]

    report = {
        "energy_audit": audit_dict,
        "max_principle": max_principle,
        "blow_up": False,
        "passed": bool(passed),
        "final_t": final.t,
        "steps": final.step,
    }
    with open(out / "report.json", "w", encoding="ascii") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return final, trajectory, report


def _sweep_worker(args):
    """Run one epsilon of a sweep; module-level so it pickles for processes."""
    raw_cfg, eps = args
    cfg = config_from_dict(raw_cfg)
    cfg.epsilon = eps
    cfg.output_dir = str(Path(raw_cfg["output_dir"]) / f"eps_{eps:g}")
    final, trajectory, report = execute_run(cfg)

    params = cfg.sim_params()
    sup_penalty = max(s.penalty_l2 for s in trajectory)
    polar = polar_sample(final.d)

    nxt = dynamics.step(final, params)
    wedge = limit.wedge_residual(nxt, (final, nxt), k_max=4)
    momentum = diagnostics.momentum_weak_residual((final, nxt), eps, k_max=4)
    return {
        "epsilon": eps,
        "sup_penalty_l2": sup_penalty,
        "grad_rho_l2sq": polar.grad_rho_l2sq,
        "wedge_residual_max": wedge.max,
        "momentum_residual_max": momentum.max,
        "passed": report["passed"],
    }


def sweep_parallelism(n_jobs: int) -> int:
    cap = os.environ.get("GLNEMATIC_THREADS")
    if cap is not None:
        return max(1, min(n_jobs, int(cap)))
    return max(1, min(n_jobs, os.cpu_count() or 1))


def run_sweep(raw_cfg: dict, eps_list) -> list:
    """Run per-epsilon simulations (concurrently) and collect scaling rows."""
    jobs = [(raw_cfg, eps) for eps in eps_list]
    workers = sweep_parallelism(len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_worker, jobs))
    else:
        rows = [_sweep_worker(job) for job in jobs]
    return rows


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    final, trajectory, report = execute_run(cfg)
    print(f"run finished: t={final.t:.6g}, steps={final.step}")
    print(f"energy audit: {'pass' if report['energy_audit']['passed'] else 'FAIL'}")
    print(f"max principle: {'pass' if report['max_principle']['passed'] else 'FAIL'}")
    return 0 if report["passed"] else 1


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    try:
        eps_list = [float(e) for e in args.eps.split(",") if e.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --eps list {args.eps!r}") from exc
    if len(eps_list) < 2:
        raise UsageError("sweep needs at least two epsilon values")
    with open(args.config, "r", encoding="utf-8") as fh:
        raw_cfg = json.load(fh)
    raw_cfg.setdefault("output_dir", cfg.output_dir)

    rows = run_sweep(raw_cfg, eps_list)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(
        out / "scaling.csv",
        SCALING_COLUMNS,
        [[r[c] for c in SCALING_COLUMNS] for r in rows],
    )
    slope = penalty_scaling_fit([(r["epsilon"], r["sup_penalty_l2"]) for r in rows]) \
        if len(rows) >= 3 else float("nan")
    print(f"sweep finished: {len(rows)} runs")
    print(f"penalty scaling slope: {slope:.6g}")
    return 0 if all(r["passed"] for r in rows) else 1


def cmd_analyze(args) -> int:
    try:
        state, eps = read_snapshot(args.snapshot)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from exc
    radius = args.radius if args.radius is not None else default_ball_radius(state.grid.n)
    report = detect_sigma(
        state.d, eps, radius=radius, eps0_sq=args.eps0_sq, t=state.t
    )
    origin = (
        "default calibration: 0.05 * snapshot director energy"
        if report.eps0_is_default
        else "user-specified"
    )
    print("concentration report")
    print(f"  t = {report.t:.6g}, epsilon = {report.epsilon:.6g}")
    print(f"  eps0_sq = {report.eps0_sq:.6g} ({origin})")
    print(f"  ball radius = {report.radius:.6g}")
    print(f"  snapshot director energy = {report.total_energy:.6g}")
    print(f"  cardinality bound K = {report.k_bound}")
    print(f"  concentration points: {report.count}")
    for i, p in enumerate(report.points, 1):
        print(
            f"    {i}: center = ({p.center[0]:.4f}, {p.center[1]:.4f}), "
            f"max local energy = {p.max_local_energy:.6g}, "
            f"attributed energy = {p.attributed_energy:.6g}"
        )
    if args.out is not None:
        write_csv(
            args.out,
            ("t", "epsilon", "eps0_sq", "center_x", "center_y",
             "max_local_energy", "attributed_energy"),
            [
                (report.t, report.epsilon, report.eps0_sq,
                 p.center[0], p.center[1], p.max_local_energy, p.attributed_energy)
                for p in report.points
            ],
        )
    return 0


def cmd_compare(args) -> int:
    """Penalized (small eps) vs constrained-solver trajectory distances."""
    cfg = load_config(args.config)
    params = cfg.sim_params()
    grid = make_grid(cfg.n)
    init = generate_initial(cfg.init_name, cfg.init_params, grid, cfg.seed)

    n_checks = 10
    checkpoints = [cfg.t_end * (i + 1) / n_checks for i in range(n_checks)]

    def sample_trajectory(stepper, state, dt):
        out = []
        targets = list(checkpoints)
        while targets and state.t < cfg.t_end - 1e-12:
            state = stepper(state, params)
            if targets and state.t >= targets[0] - 0.5 * dt:
                out.append(state)
                targets.pop(0)
        return out

    gl_states = sample_trajectory(dynamics.step, init, params.dt_effective)
    lim_states = sample_trajectory(limit.step_limit, init, params.dt_requested)

    h2 = grid.h**2
    rows = []
    for a, b in zip(gl_states, lim_states):
        dv = a.v.physical - b.v.physical
        dd = a.d.physical - b.d.physical
        rows.append(
            (
                a.t,
                float(np.sqrt(h2 * np.sum(dv**2))),
                float(np.sqrt(h2 * np.sum(dd**2))),
                float(np.max(np.abs(dd))),
            )
        )
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "compare.csv", COMPARE_COLUMNS, rows)
    print("t, |v_gl - v_limit|_L2, |d_gl - d_limit|_L2, max|d_gl - d_limit|")
    for row in rows:
        print("  " + ", ".join(f"{v:.6g}" for v in row))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glnematic",
        description="Pseudo-spectral penalized director-flow solver and audit harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single simulation with diagnostics")
    p_run.add_argument("--config", required=True)

    p_sweep = sub.add_parser("sweep", help="epsilon sweep with scaling report")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--eps", required=True, help="comma-separated epsilon list")

    p_an = sub.add_parser("analyze", help="concentration report for a snapshot")
    p_an.add_argument("--snapshot", required=True)
    p_an.add_argument("--eps0-sq", dest="eps0_sq", type=float, default=None)
    p_an.add_argument("--radius", type=float, default=None)
    p_an.add_argument("--out", default=None, help="optional CSV path for the points")

    p_cmp = sub.add_parser("compare", help="penalized vs constrained trajectories")
    p_cmp.add_argument("--config", required=True)
    return parser


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 3 if exc.code not in (0, None) else 0
    try:
        return COMMANDS[args.command](args)
    except (UsageError, SnapshotError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except BlowUpError as exc:
        print(f"blow-up abort: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``truncfront <subcommand> [options]``.

Every subcommand accepts ``--config FILE`` (a JSON object whose keys are the
option names with dashes replaced by underscores); flags given on the command
line override it.  A written ``manifest.json`` is itself a valid config file,
so ``truncfront <subcommand> --config OUT/manifest.json --output-dir OUT2``
re-runs an experiment.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analysis
from .batch import code_digest, derive_seeds, file_digests, run_batch
from .continuum import ContinuumConfig, domination_statistics, simulate_continuum
from .kernel import _check_alpha, kernel_continuous, kernel_tail_integral
from .lattice import (
    LatticeConfig,
    WindowLimitError,
    rectangle_holds,
    simulate,
    simulate_coupled_xi_zeta,
    simulate_gamma,
)
from .lattice.coupling import DominationReport
from .meso import GridSpec, MesoField, domain_for_front, solve
from .trajectory import CONTINUUM_COLUMNS, LATTICE_COLUMNS, read_csv, write_csv

log = logging.getLogger("truncfront")


class OutputExists(RuntimeError):
    pass


class Outputs:
    """Output directory with clobber policy and a record of written files."""

    def __init__(self, root, no_clobber: bool):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.no_clobber = no_clobber
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.root / name
        if p.exists():
            if self.no_clobber:
                raise OutputExists(f"{p} exists and --no-clobber is set")
            log.warning("overwriting %s", p)
        self.written.append(p)
        return p

    def write_json(self, name: str, obj) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
        return p


def _fmt_alpha(alpha: float) -> str:
    return repr(float(alpha))


def _seeds(args) -> list[int]:
    if args.seeds:
        return [int(s) for s in args.seeds]
    return derive_seeds(args.master_seed, args.runs)


# -- workers (module level so they can run in worker processes) -----------------------


def _lattice_worker(item):
    cfg = LatticeConfig(**item)
    try:
        return simulate(cfg)
    except WindowLimitError as exc:
        return exc


def _continuum_worker(item):
    return simulate_continuum(ContinuumConfig(**item))


def _gamma_worker(item):
    seed, horizon, interval = item
    return simulate_gamma(horizon, np.random.default_rng(seed), sample_interval=interval, seed=seed)


def _xz_worker(item):
    seed, alpha, depth, events = item
    return simulate_coupled_xi_zeta(alpha, depth, events, np.random.default_rng(seed), seed=seed)


# -- subcommands ---------------------------------------------------------------------


def _per_run_status(seeds, results):
    status, ok = [], True
    for s, r in zip(seeds, results):
        if isinstance(r, Exception):
            ok = False
            status.append({"seed": s, "status": "failed", "error": f"{type(r).__name__}: {r}"})
        else:
            status.append({"seed": s, "status": "truncated" if getattr(r, "truncated", False) else "ok"})
    return status, ok


def cmd_simulate_lattice(args, out: Outputs) -> tuple[dict, bool]:
    seeds = _seeds(args)
    items = [
        dict(alpha=args.alpha, horizon=args.horizon, seed=s, sample_interval=args.sample_interval,
             max_events=args.max_events, rate_scale=args.rate_scale, record_q=not args.no_q,
             max_window=args.max_window)
        for s in seeds
    ]
    LatticeConfig(**items[0])  # fail fast on a bad configuration
    results = run_batch(_lattice_worker, items)
    for s, r in zip(seeds, results):
        traj = r.trajectory if isinstance(r, WindowLimitError) else r
        if traj is not None and not isinstance(traj, Exception):
            write_csv(traj, out.path(f"lattice_{_fmt_alpha(args.alpha)}_{s}.csv"), LATTICE_COLUMNS)
    status, ok = _per_run_status(seeds, results)
    return {"seeds": seeds, "runs": status}, ok


def cmd_simulate_continuum(args, out: Outputs) -> tuple[dict, bool]:
    seeds = _seeds(args)
    items = [
        dict(alpha=args.alpha, horizon=args.horizon, seed=s, sample_interval=args.sample_interval,
             max_events=args.max_events, driver=args.driver)
        for s in seeds
    ]
    ContinuumConfig(**items[0])
    results = run_batch(_continuum_worker, items)
    for s, r in zip(seeds, results):
        if not isinstance(r, Exception):
            write_csv(r, out.path(f"continuum_{_fmt_alpha(args.alpha)}_{s}.csv"), CONTINUUM_COLUMNS)
    status, ok = _per_run_status(seeds, results)
    extra = {}
    if args.compare_at is not None:
        rep = domination_statistics(args.alpha, args.compare_at, seeds, driver=args.driver)
        out.write_json("quantile_report.json", rep.to_json())
        extra["quantile_report"] = {"upper_dominates": rep.upper_dominates, "lower_dominated": rep.lower_dominated}
    return {"seeds": seeds, "runs": status, **extra}, ok


def cmd_simulate_gamma(args, out: Outputs) -> tuple[dict, bool]:
    seeds = _seeds(args)
    if not args.horizon >= 0:
        raise ValueError("horizon must be >= 0")
    results = run_batch(_gamma_worker, [(s, args.horizon, args.sample_interval) for s in seeds])
    rect = []
    for s, r in zip(seeds, results):
        if not isinstance(r, Exception):
            write_csv(r.trajectory, out.path(f"gamma_{s}.csv"), LATTICE_COLUMNS[:4])
            rect.append(rectangle_holds(r.final_profile, args.horizon))
    status, ok = _per_run_status(seeds, results)
    summary = {"rectangle_fraction": float(np.mean(rect)) if rect else math.nan,
               "right_jumps_per_time": [r.right_jumps / args.horizon for r in results if not isinstance(r, Exception)]}
    out.write_json("gamma_summary.json", summary)
    return {"seeds": seeds, "runs": status}, ok


def cmd_couple_xi_zeta(args, out: Outputs) -> tuple[dict, bool]:
    seeds = _seeds(args)
    _check_alpha(args.alpha)
    if args.depth < 0 or args.events < 0:
        raise ValueError("depth and events must be non-negative")
    results = run_batch(_xz_worker, [(s, args.alpha, args.depth, args.events) for s in seeds])
    total = DominationReport()
    for r in results:
        if not isinstance(r, Exception):
            total = total.merge(r)
    out.write_json("domination.json", total.to_json())
    status, ok = _per_run_status(seeds, results)
    return {"seeds": seeds, "runs": status}, ok and total.violations == 0


def _meso_initial(args, grid: GridSpec) -> np.ndarray:
    x = grid.x
    if args.init == "bump":
        return np.where(np.abs(x) <= 1.0, kernel_continuous(x, args.alpha), 0.0)
    if args.init == "step":
        return (x <= 0).astype(float)
    if args.init == "tail":
        return kernel_tail_integral(x, args.alpha)
    raise ValueError(f"unknown init {args.init!r}")


def cmd_solve_meso(args, out: Outputs) -> tuple[dict, bool]:
    _check_alpha(args.alpha)
    if not args.horizon > 0:
        raise ValueError("horizon must be positive")
    case = 1 if args.init == "bump" else 2
    if case == 1:
        half = args.x_max if args.x_max is not None else max(domain_for_front(args.alpha, args.horizon, 1), 200.0)
        x_min = args.x_min if args.x_min is not None else -half
        grid = GridSpec(x_min, half, args.cells)
    else:
        x_max = args.x_max if args.x_max is not None else max(domain_for_front(args.alpha, args.horizon, 2), 200.0)
        x_min = args.x_min if args.x_min is not None else -200.0
        grid = GridSpec(x_min, x_max, args.cells, left_closure="plateau")
    field = MesoField(grid, _meso_initial(args, grid))
    res = solve(field, args.horizon, args.alpha, dt=args.dt, levels=tuple(args.level), frame_every=args.frame_every)
    for lv, tr in res.traces.items():
        tr.write_csv(out.path(f"front_{lv!r}.csv"))
    for f in res.frames:
        f.write_csv(out.path(f"field_t{f.t:.4f}.csv"))
    fits = {}
    for lv, tr in res.traces.items():
        try:
            fit = analysis.fit_exponential_rate(tr, (args.horizon / 2, args.horizon))
            fits[repr(lv)] = fit.to_json()
        except ValueError as exc:
            fits[repr(lv)] = {"error": str(exc)}
    return {"front_fits": fits, "steps": res.steps}, True


def cmd_analyze(args, out: Outputs) -> tuple[dict, bool]:
    files = sorted(Path(args.input).glob(args.pattern))
    if not files:
        raise ValueError(f"no trajectory files matching {args.pattern!r} in {args.input}")
    rows, fits = [], []
    for f in files:
        traj = read_csv(f)
        try:
            row, fit = _analyze_one(args, traj)
        except ValueError as exc:
            row, fit = [args.check, args.alpha, math.nan, math.nan, False], {"error": str(exc), "pass": False}
        rows.append(row)
        fits.append({"file": f.name, **fit})
    out.write_json("analysis.json", fits)
    summary = out.root / "summary.csv"
    new = not summary.exists()
    with summary.open("a") as fh:
        if new:
            fh.write("check,alpha,slope,stderr,pass\n")
        for r in rows:
            fh.write(",".join(["" if isinstance(v, float) and math.isnan(v) else str(v) for v in r]) + "\n")
    return {"files": [f.name for f in files]}, all(r[-1] for r in rows)


def _analyze_one(args, traj):
    if args.check == "linear":
        fit = analysis.fit_linear_speed(traj, tuple(args.window) if args.window else None)
        passed = fit.slope <= args.max_slope
        return ["linear_speed", args.alpha, fit.slope, fit.stderr, passed], {**fit.to_json(), "pass": passed}
    ratios = analysis.superlinearity_statistic(traj)
    last = ratios[-1][1] if ratios else math.nan
    passed = last > 2.2
    return ["doubling_ratio", args.alpha, last, math.nan, passed], {"ratios": ratios, "pass": passed}


def cmd_verify(args, out: Outputs) -> tuple[dict, bool]:
    from .verify import CHECKS, run_suite

    names = list(CHECKS) if args.suite == "all" else [s.strip() for s in args.suite.split(",")]
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks: {', '.join(unknown)} (known: {', '.join(CHECKS)})")
    report = run_suite(names)
    out.write_json("verify.json", report)
    for r in report["checks"]:
        print(f"{'PASS' if r['pass'] else 'FAIL'} {r['check']}")
    return {"checks": names}, report["pass"]


# -- parser ----------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, stochastic: bool = True) -> None:
    p.add_argument("--config", help="JSON file of option values (flags override)")
    p.add_argument("--output-dir", default="out")
    p.add_argument("--no-clobber", action="store_true", help="fail instead of overwriting outputs")
    if stochastic:
        p.add_argument("--runs", type=int, default=1)
        p.add_argument("--master-seed", type=int, default=0)
        p.add_argument("--seeds", type=int, nargs="*", help="explicit seeds (override --runs/--master-seed)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="truncfront", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"truncfront {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-lattice", help="lattice birth process trajectories")
    _common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--sample-interval", type=float, default=0.5)
    p.add_argument("--max-events", type=int)
    p.add_argument("--max-window", type=int, default=20_000_000)
    p.add_argument("--rate-scale", type=float, default=1.0)
    p.add_argument("--no-q", action="store_true", help="skip the drift integral column")
    p.set_defaults(func=cmd_simulate_lattice)

    p = sub.add_parser("simulate-continuum", help="continuum birth process trajectories")
    _common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--sample-interval", type=float, default=0.5)
    p.add_argument("--max-events", type=int)
    p.add_argument("--driver", choices=("hull", "mixture"), default="hull")
    p.add_argument("--compare-at", type=float, help="also compare with rescaled lattice runs at this time")
    p.set_defaults(func=cmd_simulate_continuum)

    p = sub.add_parser("simulate-gamma", help="nearest-neighbour comparison process")
    _common(p)
    p.add_argument("--horizon", type=float)
    p.add_argument("--sample-interval", type=float, default=1.0)
    p.set_defaults(func=cmd_simulate_gamma)

    p = sub.add_parser("couple-xi-zeta", help="coupled tip view and dominating process")
    _common(p)
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--depth", type=int, default=64)
    p.add_argument("--events", type=int, default=10_000)
    p.set_defaults(func=cmd_couple_xi_zeta)

    p = sub.add_parser("solve-meso", help="solve du/dt = min(a*u, 1) and track fronts")
    _common(p, stochastic=False)
    p.add_argument("--alpha", type=float)
    p.add_argument("--init", choices=("bump", "step", "tail"), default="bump")
    p.add_argument("--horizon", type=float)
    p.add_argument("--level", type=float, nargs="+", default=[0.5])
    p.add_argument("--cells", type=int, default=2**16)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--x-min", type=float)
    p.add_argument("--x-max", type=float)
    p.add_argument("--frame-every", type=float)
    p.set_defaults(func=cmd_solve_meso)

    p = sub.add_parser("analyze", help="speed fits over trajectory CSVs")
    _common(p, stochastic=False)
    p.add_argument("--input")
    p.add_argument("--pattern", default="lattice_*.csv")
    p.add_argument("--alpha", type=float, default=math.nan)
    p.add_argument("--check", choices=("linear", "superlinear"), default="linear")
    p.add_argument("--window", type=float, nargs=2)
    p.add_argument("--max-slope", type=float, default=10.0)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="run the property-check suite")
    _common(p, stochastic=False)
    p.add_argument("--suite", default="all", help="'all' or a comma-separated list of checks")
    p.set_defaults(func=cmd_verify)
    return parser


REQUIRED = {
    "simulate-lattice": ("alpha", "horizon"),
    "simulate-continuum": ("alpha", "horizon"),
    "simulate-gamma": ("horizon",),
    "solve-meso": ("alpha", "horizon"),
    "analyze": ("input",),
}

_MANIFEST_ONLY = {"command", "version", "code_digest", "wall_time", "status", "outputs", "result", "func"}


def parse_args(parser: argparse.ArgumentParser, argv):
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text())
        cfg = data.get("config", data)
        if "command" in data and data["command"] != args.command:
            raise ValueError(f"config was written by {data['command']!r}, not {args.command!r}")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        bad = sorted(set(cfg) - known - _MANIFEST_ONLY)
        if bad:
            raise ValueError(f"unknown config keys: {', '.join(bad)}")
        sub.set_defaults(**{k: v for k, v in cfg.items() if k in known and k not in ("config", "output_dir", "no_clobber")})
        args = parser.parse_args(argv)
    missing = [k for k in REQUIRED.get(args.command, ()) if getattr(args, k) is None]
    if missing:
        raise ValueError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))
    if getattr(args, "runs", 1) < 1 and not getattr(args, "seeds", None):
        raise ValueError("--runs must be at least 1")
    return args


def run(args) -> int:
    out = Outputs(args.output_dir, args.no_clobber)
    t0 = time.perf_counter()
    result, ok = args.func(args, out)
    wall = time.perf_counter() - t0
    config = {k: v for k, v in vars(args).items() if k not in ("func", "config", "output_dir", "no_clobber", "command")}
    if "seeds" in result:
        config["seeds"] = result["seeds"]
    outputs = [p for p in out.written if p.exists()]
    manifest = {
        "command": args.command,
        "config": config,
        "version": __version__,
        "code_digest": code_digest(),
        "wall_time": wall,
        "status": "ok" if ok else "failed",
        "outputs": file_digests(outputs),
        "result": {k: v for k, v in result.items() if k != "seeds"},
    }
    (out.root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return 0 if ok else 1


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parse_args(parser, argv)
        return run(args)
    except (ValueError, OSError, OutputExists, json.JSONDecodeError) as exc:
        print(f"truncfront: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

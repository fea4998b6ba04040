"""The property-check suite behind ``truncfront verify``.

Each check returns ``{"check", "params", "max_violation", "pass"}`` plus
check-specific details.  ``max_violation`` is the signed distance of the
observed statistic past its threshold (``<= 0`` means the check passed).
"""

from __future__ import annotations

import math
import tempfile
from pathlib import Path

import numpy as np
from scipy import integrate, stats

from . import analysis, kernel
from .continuum import ContinuumConfig, simulate_continuum
from .lattice import (
    LatticeConfig,
    rectangle_holds,
    simulate,
    simulate_coupled_xi_zeta,
    simulate_gamma,
)
from .batch import derive_seeds
from .meso import (
    Convolver,
    GridSpec,
    MesoField,
    capped_weight,
    check_kernel_ratio,
    check_subsolution,
    comparison_check,
    domain_for_front,
    find_lambda,
    growth_bound_check,
    picard_solve,
    solve,
)


def _report(check, params, violation, passed, **extra):
    out = {"check": check, "params": params, "max_violation": float(violation), "pass": bool(passed)}
    out.update(extra)
    return out


def check_kernel(master_seed: int = 7) -> dict:
    worst = 0.0
    for a in (0.75, 1.0, 1.5, 2.0, 3.0):
        c = kernel.normalization_constant(a)
        mass = 2.0 * integrate.quad(lambda z: c * (1 + z * z) ** (-a), 0, np.inf, epsabs=1e-13, epsrel=1e-13)[0]
        worst = max(worst, abs(mass - 1.0))
    ks_fail = 0
    rng = np.random.default_rng(master_seed)
    for a in (0.75, 1.0, 1.5, 2.0, 3.0):
        draws = kernel.sample_displacement(rng, a, size=100_000)
        if stats.kstest(draws, lambda x: kernel.kernel_cdf(x, a)).pvalue < 0.01:
            ks_fail += 1
    xs = np.round(np.arange(-5000, 5001) * 0.01, 10)
    sandwich_bad = 0
    for a in (0.75, 1.0, 1.5, 2.0, 3.0):
        c = kernel.normalization_constant(a)
        ad = kernel.kernel_lattice(kernel.round_half_down(xs), a)
        ax = kernel.kernel_continuous(xs, a)
        lo, hi = c * 4.0 ** (-a) * ad, c * 2.0**a * ad
        sandwich_bad += int(np.sum((ax < lo * (1 - 1e-12)) | (ax > hi * (1 + 1e-12))))
    return _report(
        "kernel", {"mass_tol": 1e-8}, worst - 1e-8, worst <= 1e-8 and ks_fail == 0 and sandwich_bad == 0,
        ks_failures=ks_fail, sandwich_violations=sandwich_bad,
    )


def linear_regime_runs(master_seed: int = 42, runs: int = 16, horizon: float = 200.0):
    return [simulate(LatticeConfig(3.0, horizon, seed=s)) for s in derive_seeds(master_seed, runs)]


def check_linear(master_seed: int = 42, runs: int = 16) -> dict:
    slopes, ratio_max = [], 0.0
    for tr in linear_regime_runs(master_seed, runs):
        t = np.asarray(tr.times)
        x = np.abs(np.asarray(tr.column("left_tip"), dtype=float))
        pos = t > 0
        ratio_max = max(ratio_max, float(np.max(x[pos] / t[pos])))
        slopes.append(analysis.ols_fit(t[pos], x[pos] / t[pos], (100.0, 200.0)).slope)
    slopes = np.asarray(slopes)
    mean, se = float(slopes.mean()), float(slopes.std(ddof=1) / math.sqrt(slopes.size))
    ok = mean <= 2.0 * se and ratio_max <= 10.0
    return _report("linear_regime", {"alpha": 3.0, "runs": runs, "horizon": 200.0}, mean - 2 * se, ok,
                   mean_slope=mean, stderr=se, max_ratio=ratio_max)


def check_superlinear(master_seed: int = 42, runs: int = 16, horizon: float = 40.0, max_events: int = 2_000_000) -> dict:
    last = []
    for s in derive_seeds(master_seed, runs):
        tr = simulate(LatticeConfig(1.25, horizon, seed=s, record_q=False, max_events=max_events))
        last.append(analysis.superlinearity_statistic(tr)[-1][1])
    mean = float(np.mean(last))
    return _report("superlinear_regime", {"alpha": 1.25, "runs": runs, "horizon": horizon}, 2.2 - mean, mean > 2.2,
                   mean_ratio=mean)


def check_domination(master_seed: int = 42, runs: int = 100, depth: int = 64, events: int = 10_000) -> dict:
    viol = 0
    for s in derive_seeds(master_seed, runs):
        viol += simulate_coupled_xi_zeta(3.0, depth, events, np.random.default_rng(s), seed=s).violations
    return _report("domination", {"alpha": 3.0, "depth": depth, "runs": runs, "events": events}, viol, viol == 0)


def check_rectangle(master_seed: int = 42, runs: int = 32, t: float = 400.0) -> dict:
    hits = sum(rectangle_holds(simulate_gamma(t, np.random.default_rng(s)).final_profile, t) for s in derive_seeds(master_seed, runs))
    frac = hits / runs
    return _report("rectangle", {"runs": runs, "t": t}, 0.95 - frac, frac >= 0.95, fraction=frac)


def _front_slope(case: int, horizon: float) -> float:
    alpha = 1.0
    if case == 1:
        L = domain_for_front(alpha, horizon, 1)
        grid = GridSpec(-L, L, 2**20)
        u0 = np.where(np.abs(grid.x) <= 1.0, kernel.kernel_continuous(grid.x, alpha), 0.0)
    else:
        grid = GridSpec(-200.0, domain_for_front(alpha, horizon, 2), 2**20, left_closure="plateau")
        u0 = (grid.x <= 0).astype(float)
    res = solve(MesoField(grid, u0), horizon, alpha, dt=0.1, levels=(0.5,))
    return analysis.fit_exponential_rate(res.traces[0.5], (horizon / 2, horizon)).slope


def check_front_case1() -> dict:
    s = _front_slope(1, 15.0)
    return _report("front_case1", {"alpha": 1.0, "horizon": 15.0, "level": 0.5}, abs(s - 0.5) - 0.1, 0.4 <= s <= 0.6, slope=s)


def check_front_case2() -> dict:
    s = _front_slope(2, 10.0)
    return _report("front_case2", {"alpha": 1.0, "horizon": 10.0, "level": 0.5}, abs(s - 1.0) - 0.2, 0.8 <= s <= 1.2, slope=s)


def check_subsolutions() -> dict:
    worst, onsets = -math.inf, {}
    for a, e in ((1.0, 0.5), (1.5, 0.3)):
        for which in ("g", "h"):
            rep = check_subsolution(which, a, e)
            onsets[f"{which}_{a}_{e}"] = rep.onset
            worst = max(worst, rep.max_violation)
    return _report("subsolution", {"cases": [[1.0, 0.5], [1.5, 0.3]]}, worst, worst <= 1e-6, onsets=onsets)


def check_ratio() -> dict:
    r2, r6 = check_kernel_ratio(1.0, 0.9, [1e2, 1e6])
    ok = abs(r6 - 1) < 0.1 and abs(r6 - 1) < abs(r2 - 1)
    return _report("kernel_ratio", {"alpha": 1.0, "gamma": 0.9}, abs(r6 - 1) - 0.1, ok, ratio_1e2=r2, ratio_1e6=r6)


def growth_bound_frames(horizon: float = 10.0):
    grid = GridSpec(-2000.0, 2000.0, 2**15)
    u0 = kernel.kernel_continuous(grid.x, 1.0)
    return grid, solve(MesoField(grid, u0), horizon, 1.0, dt=0.05, frame_every=0.5).frames


def check_growth_bound() -> dict:
    lam = find_lambda(1.0, 0.9, 0.5)
    grid, frames = growth_bound_frames()
    w = capped_weight(grid.x, 1.0, 0.9, lam.lam)
    nu = 1.5
    excess = growth_bound_check(frames, w, nu)
    control = growth_bound_check(frames, w, nu / 2)
    ok = lam.reverified and excess <= 1e-6 and control > 0
    return _report("growth_bound", {"alpha": 1.0, "gamma": 0.9, "delta": 0.5, "horizon": 10.0}, excess, ok,
                   lam=lam.lam, control_excess=control)


def random_ordered_pair(rng, x):
    def smooth():
        out = np.zeros_like(x)
        for _ in range(3):
            out += rng.uniform(0, 1) * np.exp(-((x - rng.uniform(-20, 20)) ** 2) / rng.uniform(1, 30))
        return out

    u1 = smooth()
    return u1, u1 + smooth()


def check_comparison(master_seed: int = 42, pairs: int = 20) -> dict:
    grid = GridSpec(-400.0, 400.0, 2**12)
    conv = Convolver(grid, 1.0)
    rng = np.random.default_rng(master_seed)
    worst, mono_ok = 0.0, True
    for _ in range(pairs):
        u1, u2 = random_ordered_pair(rng, grid.x)
        worst = max(worst, comparison_check(grid, u1, u2, 10.0, 1.0, conv=conv))
    # solve() itself asserts frame-to-frame monotonicity; reaching here means it held
    return _report("comparison", {"pairs": pairs, "horizon": 10.0}, worst, worst <= 1e-8 and mono_ok)


def heun_convergence_ratio(dt: float = 0.1) -> float:
    grid = GridSpec(-100.0, 100.0, 2**11)
    conv = Convolver(grid, 1.0)
    u0 = 0.2 * np.exp(-grid.x**2 / 4.0)

    def run(step):
        return solve(MesoField(grid, u0.copy()), 1.0, 1.0, dt=step, conv=conv).field.u

    ref = run(dt / 8)
    e1 = np.max(np.abs(run(dt) - ref))
    e2 = np.max(np.abs(run(dt / 2) - ref))
    return float(e1 / e2)


def picard_gap(seed: int = 0) -> float:
    grid = GridSpec(-100.0, 100.0, 2**10)
    conv = Convolver(grid, 1.0)
    rng = np.random.default_rng(seed)
    u0, _ = random_ordered_pair(rng, grid.x)
    u0 = 3.0 * u0
    pic, _ = picard_solve(MesoField(grid, u0.copy()), 0.5, 1.0, conv=conv)
    heun = solve(MesoField(grid, u0.copy()), 0.5, 1.0, dt=1e-3, conv=conv).field
    return float(np.max(np.abs(pic.u - heun.u)))


def check_cross_solver() -> dict:
    gap = picard_gap()
    ratio = heun_convergence_ratio()
    ok = gap < 1e-4 and 3.0 <= ratio <= 5.0
    return _report("cross_solver", {"horizon": 0.5}, gap - 1e-4, ok, gap=gap, convergence_ratio=ratio)


def check_series_ldp() -> dict:
    conv = [analysis.heuristic_series(a, 10**6) for a in (2.5, 3.0)]
    div = [analysis.heuristic_series(a, 10**5) for a in (1.5, 2.0)]
    brute = analysis.series_limit(3.0)
    err = abs(conv[1].partial_sum - brute)
    ldp = [analysis.poisson_ldp_check(l) for l in (30, 60, 120, 240)]
    ok = (all(r.verdict == "converges" for r in conv) and all(r.verdict == "diverges" for r in div)
          and err <= 1e-6 and all(r.holds for r in ldp))
    return _report("series_ldp", {}, err - 1e-6, ok, series_alpha3=conv[1].partial_sum)


def check_reproducibility() -> dict:
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        a, b = Path(tmp) / "a", Path(tmp) / "b"
        base = ["simulate-lattice", "--alpha", "3", "--horizon", "20", "--runs", "3", "--master-seed", "5"]
        if main(base + ["--output-dir", str(a)]) != 0:
            return _report("reproducibility", {}, 1, False)
        if main(["simulate-lattice", "--config", str(a / "manifest.json"), "--output-dir", str(b)]) != 0:
            return _report("reproducibility", {}, 1, False)
        names = sorted(p.name for p in a.iterdir() if p.name != "manifest.json")
        diff = sum((a / n).read_bytes() != (b / n).read_bytes() for n in names)
    return _report("reproducibility", {"files": len(names)}, diff, diff == 0 and len(names) == 3)


CHECKS = {
    "kernel": check_kernel,
    "linear": check_linear,
    "superlinear": check_superlinear,
    "domination": check_domination,
    "rectangle": check_rectangle,
    "front_case1": check_front_case1,
    "front_case2": check_front_case2,
    "subsolution": check_subsolutions,
    "kernel_ratio": check_ratio,
    "growth_bound": check_growth_bound,
    "comparison": check_comparison,
    "cross_solver": check_cross_solver,
    "series_ldp": check_series_ldp,
    "reproducibility": check_reproducibility,
}


def run_suite(names) -> dict:
    results = []
    for name in names:
        try:
            results.append(CHECKS[name]())
        except Exception as exc:
            results.append(_report(name, {}, math.inf, False, error=f"{type(exc).__name__}: {exc}"))
    return {"checks": results, "pass": all(r["pass"] for r in results)}

"""Continuous-space process: thinning drivers, binning and the lattice comparison."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from truncfront.continuum import (
    ContinuumConfig,
    ContinuumProcess,
    PointState,
    acceptance_probability,
    discretize,
    domination_statistics,
    intensity_exceeds,
    run_to,
    simulate_continuum,
)
from truncfront.kernel import kernel_continuous, normalization_constant


def first_birth(alpha, initial, driver, seed):
    proc = ContinuumProcess(alpha, np.random.default_rng(seed), driver, initial)
    while True:
        ev = proc.step()
        if ev.accepted:
            return ev


def frozen_cdf(alpha, parents):
    """CDF of the first birth site: density proportional to ``min(1, S)``, by quadrature."""
    parents = np.asarray(parents, dtype=float)

    def rate(x):
        return min(1.0, float(kernel_continuous(x - parents, alpha).sum()))

    lo, hi = parents.min(), parents.max()
    pts = sorted({lo - 1, lo, hi, hi + 1})
    grid = np.concatenate([-np.logspace(4, 0, 60) + lo, np.linspace(lo - 1, hi + 1, 200)[1:-1], np.logspace(0, 4, 60) + hi])
    cum = [0.0]
    for a, b in zip(grid[:-1], grid[1:]):
        cum.append(cum[-1] + integrate.quad(rate, a, b, points=[p for p in pts if a < p < b] or None)[0])
    cum = np.array(cum)
    # mass beyond +-1e4 from the polynomial tails, split evenly
    c = normalization_constant(alpha)
    far = len(parents) * c * 1e4 ** (1 - 2 * alpha) / (2 * alpha - 1)
    total = cum[-1] + 2 * far
    return lambda x: np.interp(x, grid, (cum + far) / total, left=0.0, right=1.0), total


# ---------------------------------------------------------------- small pieces


def test_discretize_examples():
    assert discretize([0.4, 0.6, -0.5]) == {0: 1, 1: 1, -1: 1}
    assert discretize([0.5, 0.5, 1.5]) == {0: 2, 1: 1}
    assert discretize([]) == {}


def test_point_state_sorted_insert():
    st = PointState(np.array([1.0, -2.0]))
    st.insert(0.5)
    assert st.positions.tolist() == [-2.0, 0.5, 1.0]
    assert st.n == 3


def test_intensity_direct_sum():
    st = PointState(np.array([0.0, 1.0, 5.0]))
    expected = sum(kernel_continuous(2.0 - y, 2.0) for y in (0.0, 1.0, 5.0))
    assert st.intensity(2.0, 2.0) == pytest.approx(expected, rel=1e-14)


def test_acceptance_probability():
    st = PointState(np.zeros(10))
    S = 10 * kernel_continuous(0.0, 3.0)
    assert acceptance_probability(st, 0.0, 3.0) == pytest.approx(1 / S)
    far = PointState(np.array([0.0]))
    assert acceptance_probability(far, 50.0, 3.0) == 1.0


@pytest.mark.parametrize("alpha", [0.75, 1.5, 3.0])
def test_intensity_exceeds_agrees_with_full_sum(alpha):
    rng = np.random.default_rng(1)
    pos = np.sort(rng.standard_cauchy(500) * 20)
    st = PointState(pos)
    for x in rng.uniform(-200, 200, 200):
        S = st.intensity(x, alpha)
        for thr in (0.05, 0.5, 1.0, 3.0):
            if abs(S - thr) > 1e-9:
                assert intensity_exceeds(pos, x, alpha, thr) == (S >= thr)


# ---------------------------------------------------------------- dynamics


def test_zero_horizon_single_sample():
    traj = simulate_continuum(ContinuumConfig(alpha=2.0, horizon=0.0, seed=3))
    assert len(traj) == 1
    s = traj.samples[0]
    assert (s.t, s.left_tip, s.right_tip, s.n_particles) == (0.0, 0.0, 0.0, 1)


@pytest.mark.parametrize("driver", ["hull", "mixture"])
def test_first_birth_from_single_particle(driver):
    # c_alpha < 1 at alpha = 3, so the clamp is idle and the law is the kernel itself
    alpha = 3.0
    evs = [first_birth(alpha, None, driver, s) for s in range(2000)]
    xs = np.array([e.x for e in evs])
    ts = np.array([e.t for e in evs])
    cdf, total = frozen_cdf(alpha, [0.0])
    assert total == pytest.approx(1.0, abs=1e-6)
    assert stats.kstest(xs, cdf).pvalue > 0.01
    assert stats.kstest(ts, "expon").pvalue > 0.01


@pytest.mark.parametrize("driver", ["hull", "mixture"])
@pytest.mark.parametrize("alpha, parents", [(3.0, [0.0, 0.3]), (1.0, [0.0, 0.0, 0.0, 2.0])])
def test_first_birth_with_clamp(driver, alpha, parents):
    evs = [first_birth(alpha, parents, driver, 100 + s) for s in range(2000)]
    xs = np.array([e.x for e in evs])
    ts = np.array([e.t for e in evs])
    cdf, total = frozen_cdf(alpha, parents)
    assert total < len(parents)  # the clamp binds somewhere
    assert stats.kstest(xs, cdf).pvalue > 0.01
    assert stats.kstest(ts, stats.expon(scale=1 / total).cdf).pvalue > 0.01


@pytest.mark.parametrize("driver", ["hull", "mixture"])
def test_count_is_one_plus_births(driver):
    proc = ContinuumProcess(1.5, np.random.default_rng(4), driver)
    accepted = sum(proc.step().accepted for _ in range(3000))
    assert proc.state.n == 1 + accepted == 1 + proc.births
    assert np.all(np.diff(proc.state.positions) >= 0)


def test_drivers_agree_in_law():
    alpha, t = 1.5, 3.0
    cfg = lambda s, d: ContinuumConfig(alpha, t, seed=s, driver=d)
    hull = [run_to(cfg(s, "hull"), [t])[t] for s in range(150)]
    mix = [run_to(cfg(1000 + s, "mixture"), [t])[t] for s in range(150)]
    assert stats.ks_2samp([p.size for p in hull], [p.size for p in mix]).pvalue > 0.01
    assert stats.ks_2samp([p[0] for p in hull], [p[0] for p in mix]).pvalue > 0.01


def test_simulation_invariants_and_replay():
    cfg = ContinuumConfig(alpha=3.0, horizon=20.0, seed=9)
    a, b = simulate_continuum(cfg), simulate_continuum(cfg)
    a.check_invariants()
    assert a.samples == b.samples
    assert a.samples[-1].left_tip < 0 < a.samples[-1].right_tip


def test_initial_configuration():
    traj = simulate_continuum(ContinuumConfig(alpha=2.0, horizon=0.0, initial=[-3.0, 1.0, 2.0]))
    s = traj.samples[0]
    assert (s.left_tip, s.right_tip, s.n_particles) == (-3.0, 2.0, 3)


def test_invalid_driver():
    with pytest.raises(ValueError):
        ContinuumConfig(alpha=2.0, horizon=1.0, driver="nope")


@pytest.mark.slow
def test_lattice_sandwich_quantiles():
    rep = domination_statistics(3.0, 30.0, range(16))
    assert rep.upper_dominates
    assert rep.lower_dominated


def test_domination_needs_enough_seeds():
    with pytest.raises(ValueError):
        domination_statistics(3.0, 1.0, range(4))

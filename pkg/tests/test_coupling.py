"""Monotone couplings and the nearest-neighbour comparison process."""

import numpy as np
import pytest

from truncfront.lattice import (
    DominationReport,
    rectangle_holds,
    simulate_coupled_gamma_eta,
    simulate_coupled_xi_zeta,
    simulate_gamma,
)


# heavy tails stretch the window quickly, so fewer ticks there
@pytest.mark.parametrize("alpha, n", [(0.75, 300), (1.25, 1500), (3.0, 1500)])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_xi_zeta_domination(alpha, n, seed):
    rep = simulate_coupled_xi_zeta(alpha, depth=64, n_events=n, rng=np.random.default_rng(seed), seed=seed)
    assert rep.violations == 0, rep.violation_log[:3]
    assert rep.events == n
    assert rep.max_partial_sum_gap <= 0
    # every zeta shift is a left jump of the tip by exactly one
    assert rep.zeta_shifts <= rep.xi_shifts


def test_report_merge_and_json():
    a = DominationReport(violations=0, max_partial_sum_gap=-3, events=10, seeds=[1], zeta_shifts=2, xi_shifts=3)
    b = DominationReport(violations=1, max_partial_sum_gap=-1, events=5, seeds=[2], zeta_shifts=0, xi_shifts=1)
    m = a.merge(b)
    assert (m.violations, m.max_partial_sum_gap, m.events, m.seeds) == (1, -1, 15, [1, 2])
    js = m.to_json()
    assert js["violations"] == 1 and js["events"] == 15


@pytest.mark.parametrize("alpha, T", [(0.75, 2.0), (1.25, 5.0), (3.0, 40.0)])
def test_gamma_below_eta(alpha, T):
    rep = simulate_coupled_gamma_eta(alpha, T, np.random.default_rng(7), n_checkpoints=10)
    assert rep.violations == 0
    assert rep.gamma_only_births == 0
    assert rep.checkpoints[-1] == T


def test_gamma_right_tip_is_poisson():
    T = 1000.0
    tips = [simulate_gamma(T, np.random.default_rng(s)).trajectory.samples[-1].right_tip for s in range(32)]
    assert 0.9 <= np.mean(tips) / T <= 1.1
    # the right tip is Poisson(T): variance close to the mean
    assert np.var(tips, ddof=1) / T == pytest.approx(1.0, abs=0.6)


def test_gamma_occupies_an_interval():
    run = simulate_gamma(30.0, np.random.default_rng(3), profile_times=[10.0, 30.0])
    for prof in run.profiles.values():
        assert np.all(prof > 0)
    assert run.final_profile.size == run.right_jumps + 1
    assert run.trajectory.samples[-1].n_particles == run.final_profile.sum()


def test_gamma_mass_growth():
    # on {0..R} each site gains Poisson(dt) births: E(total) = 1 + int E(R+1) dt + E(R) = T^2/2 + 2T + 1
    T = 20.0
    totals = [simulate_gamma(T, np.random.default_rng(s)).trajectory.samples[-1].n_particles for s in range(200)]
    assert np.mean(totals) == pytest.approx(T * T / 2 + 2 * T + 1, rel=0.05)


def test_rectangle_examples():
    assert rectangle_holds(np.full(11, 4), 40.0)
    assert not rectangle_holds(np.full(11, 3), 40.0)
    assert not rectangle_holds(np.full(10, 4), 40.0)
    assert rectangle_holds(np.array([1]), 0.0)


def test_rectangle_holds_in_simulation():
    T = 200.0
    ok = [rectangle_holds(simulate_gamma(T, np.random.default_rng(s)).final_profile, T) for s in range(16)]
    assert all(ok)

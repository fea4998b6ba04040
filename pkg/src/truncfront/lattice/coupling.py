"""Shared-clock couplings built on top of :class:`LatticeBirthProcess`.

Every site ``j`` carries a unit-rate Poisson clock with uniform marks; ``eta``
gives birth at ``j`` when a mark falls below ``b(j, eta)``.  The lattice process
only generates the accepted points, so the couplings here superpose the
rejected ("null") points they need:

* :func:`simulate_coupled_xi_zeta` needs every tick of the clocks at
  ``tip - 1`` and ``tip + j`` for ``0 <= j <= depth``;
* :func:`simulate_coupled_gamma_eta` needs the ticks accepted by the
  nearest-neighbour process but not by ``eta`` (none, unless the ordering
  ``gamma <= eta`` has already failed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .process import LatticeBirthProcess


@dataclass
class DominationReport:
    violations: int = 0
    max_partial_sum_gap: int = 0
    events: int = 0
    seeds: list[int] = field(default_factory=list)
    zeta_shifts: int = 0
    xi_shifts: int = 0
    violation_log: list[dict] = field(default_factory=list)

    def merge(self, other: "DominationReport") -> "DominationReport":
        first = not self.seeds and self.events == 0
        return DominationReport(
            violations=self.violations + other.violations,
            max_partial_sum_gap=(
                other.max_partial_sum_gap
                if first
                else max(self.max_partial_sum_gap, other.max_partial_sum_gap)
            ),
            events=self.events + other.events,
            seeds=self.seeds + other.seeds,
            zeta_shifts=self.zeta_shifts + other.zeta_shifts,
            xi_shifts=self.xi_shifts + other.xi_shifts,
            violation_log=(self.violation_log + other.violation_log)[:50],
        )

    def to_json(self) -> dict:
        return {
            "violations": self.violations,
            "events": self.events,
            "max_partial_sum_gap": self.max_partial_sum_gap,
            "seeds": self.seeds,
        }


def _null_rates(proc: LatticeBirthProcess, lo: int, hi: int):
    """Rejected-mark rate ``1 - b(x)`` at the free window sites in ``[lo, hi]``."""
    i0 = int(np.searchsorted(proc.free_pos, lo, side="left"))
    i1 = int(np.searchsorted(proc.free_pos, hi, side="right"))
    pos = proc.free_pos[i0:i1]
    w = 1.0 - np.minimum(proc.free_S[i0:i1], 1.0)
    return pos, w


def simulate_coupled_xi_zeta(
    alpha: float,
    depth: int,
    n_events: int,
    rng: np.random.Generator,
    seed: Optional[int] = None,
) -> DominationReport:
    """Drive ``xi`` (``eta`` seen from its left tip) and ``zeta`` from the same clocks.

    ``zeta`` starts from all ones, shifts by one (adding a particle at 0)
    whenever the clock at ``tip(eta_{t-}) - 1`` rings, and otherwise grows at
    site ``j`` whenever the clock at ``tip(eta_{t-}) + j`` rings.  ``xi`` is read
    off ``eta`` exactly.  After every clock tick the prefix sums
    ``sum_{i<=k} xi(i) <= sum_{i<=k} zeta(i)`` are checked for ``k <= depth``.
    ``n_events`` counts clock ticks (births of ``eta`` plus null ticks).
    """
    proc = LatticeBirthProcess(alpha, rng)
    zeta = np.ones(depth + 1, dtype=np.int64)
    report = DominationReport(seeds=[] if seed is None else [seed])

    def check(context):
        xi = proc.profile_from_tip(depth)
        gap = np.cumsum(xi) - np.cumsum(zeta)
        worst = int(gap.max())
        report.max_partial_sum_gap = max(report.max_partial_sum_gap, worst)
        if worst > 0 or xi[0] < 1 or zeta[0] < 1:
            report.violations += 1
            if len(report.violation_log) < 50:
                report.violation_log.append(
                    dict(context, xi=xi.tolist()[:16], zeta=zeta.tolist()[:16], gap=worst)
                )

    report.max_partial_sum_gap = -(10**9)
    check({"t": 0.0, "kind": "initial"})
    for _ in range(n_events):
        tip0 = proc.left_tip
        proc.ensure_covers(tip0 - 1, tip0 + depth)
        null_pos, null_w = _null_rates(proc, tip0 - 1, tip0 + depth)
        r_null = float(null_w.sum())
        parts = proc.rate_parts()
        # superpose the null ticks: total rate = birth rate + null rate
        r_birth = parts[0] + float(parts[1].sum()) + parts[2]
        dt = rng.exponential(1.0 / (r_birth + r_null))
        proc.time += dt
        u = rng.random() * (r_birth + r_null)
        if u < r_null:
            cw = np.cumsum(null_w)
            x = int(null_pos[min(int(np.searchsorted(cw, u, side="right")), cw.size - 1)])
            born = False
        else:
            x = proc.sample_site(u - r_null, parts)
            proc.apply_birth(x)
            proc.n_events += 1
            born = True
        rel = x - tip0
        if rel == -1:
            zeta[1:] = zeta[:-1].copy()
            zeta[0] = 1
            report.zeta_shifts += 1
            if not born:
                report.violations += 1
                report.violation_log.append({"t": proc.time, "kind": "zeta shift without xi shift"})
        elif 0 <= rel <= depth:
            zeta[rel] += 1
        if born and rel < 0:
            report.xi_shifts += 1
        report.events += 1
        check({"t": proc.time, "site": x, "tip_before": tip0, "born": born})
    return report


@dataclass
class GammaCouplingReport:
    checkpoints: list[float]
    violations: int
    gamma_only_births: int
    events: int


def simulate_coupled_gamma_eta(
    alpha: float,
    horizon: float,
    rng: np.random.Generator,
    n_checkpoints: int = 20,
) -> GammaCouplingReport:
    """Run ``gamma`` (rate ``1{gamma(x) + gamma(x-1) > 0}``) and ``eta`` on shared clocks.

    A clock tick at ``x`` that ``eta`` accepts is a ``gamma`` birth iff
    ``gamma``'s rate at ``x`` is 1 (its rates are 0/1, so the mark is
    irrelevant).  Ticks accepted by ``gamma`` but rejected by ``eta`` are
    superposed explicitly at rate ``sum_x (1 - b(x, eta))`` over ``gamma``'s
    active sites; they can only occur once ``gamma <= eta`` is already broken.
    ``gamma <= eta`` is checked sitewise at ``n_checkpoints`` equally spaced times.
    """
    proc = LatticeBirthProcess(alpha, rng)
    gamma = np.zeros(64, dtype=np.int64)
    gamma[0] = 1
    g_right = 0
    checkpoints = [float(c) for c in np.linspace(horizon / n_checkpoints, horizon, n_checkpoints)]
    ci = 0
    violations = 0
    gamma_only = 0
    events = 0

    def ordered() -> bool:
        proc.ensure_covers(0, g_right)
        eta = proc.counts[-proc.lo : -proc.lo + g_right + 1]
        return bool(np.all(gamma[: g_right + 1] <= eta))

    def gamma_birth(x):
        nonlocal gamma, g_right
        if x >= gamma.size:
            gamma = np.concatenate([gamma, np.zeros(gamma.size, dtype=np.int64)])
        gamma[x] += 1
        g_right = max(g_right, x)

    def gamma_active(x) -> bool:
        return 0 <= x <= g_right + 1 and (gamma[x] > 0 or (x >= 1 and gamma[x - 1] > 0))

    while ci < len(checkpoints):
        proc.ensure_covers(0, g_right + 1)
        act_pos, act_w = _null_rates(proc, 0, g_right + 1)
        keep = np.array([gamma_active(int(p)) for p in act_pos], dtype=bool) if act_pos.size else act_pos
        act_pos, act_w = act_pos[keep], act_w[keep]
        r_extra = float(act_w.sum())
        parts = proc.rate_parts()
        r_birth = parts[0] + float(parts[1].sum()) + parts[2]
        t_next = proc.time + rng.exponential(1.0 / (r_birth + r_extra))
        while ci < len(checkpoints) and checkpoints[ci] < t_next:
            if not ordered():
                violations += 1
            ci += 1
        if ci >= len(checkpoints):
            break
        proc.time = t_next
        u = rng.random() * (r_birth + r_extra)
        if u < r_extra:
            cw = np.cumsum(act_w)
            x = int(act_pos[min(int(np.searchsorted(cw, u, side="right")), cw.size - 1)])
            gamma_birth(x)
            gamma_only += 1
        else:
            x = proc.sample_site(u - r_extra, parts)
            if gamma_active(x):
                gamma_birth(x)
            proc.apply_birth(x)
            proc.n_events += 1
        events += 1
    return GammaCouplingReport(checkpoints, violations, gamma_only, events)

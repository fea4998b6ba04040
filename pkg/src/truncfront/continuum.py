"""Continuous-space truncated birth process and its binning onto the lattice.

Births happen at rate ``min(1, S(x))`` per unit length with
``S(x) = sum_y a(x - y)``.  Two exact thinning drivers are provided.

``driver="hull"`` (default) proposes at rate 1 per unit length on an interval
``[A, B]`` containing the particles with a margin ``D >= (n c_alpha)^(1/(2 alpha))``,
so that ``S <= 1`` outside it.  A proposal at ``x`` inside is kept with
probability ``min(1, S(x))``; outside the clamp never binds, so births there are
generated directly as long jumps from a parent, conditioned to leave ``[A, B]``.

``driver="mixture"`` proposes from the intensity ``S`` itself (rate ``n``,
uniform parent plus a kernel displacement) and keeps a proposal with
probability ``min(1, S)/S``.  It wastes most proposals once the bulk is
saturated and serves as an independent cross-check of the hull driver.

Either way ``S(x)`` is never computed in full: particles are added from the
nearest outward until the accept/reject decision is certain, using the bound
``(particles left) * a(distance to the nearest one left)`` on the remainder.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .kernel import (
    KernelSpec,
    _check_alpha,
    kernel_cdf,
    kernel_continuous,
    kernel_tail_integral,
    normalization_constant,
    round_half_down,
    sample_displacement,
    sample_tail_displacement,
)
from .lattice.process import LatticeConfig, simulate as simulate_lattice
from .trajectory import TipTrajectory

DRIVERS = ("hull", "mixture")


class ContinuumEvent(NamedTuple):
    t: float
    x: float
    accepted: bool


@dataclass
class PointState:
    """Sorted particle positions on the line."""

    positions: np.ndarray = field(default_factory=lambda: np.zeros(1))
    time: float = 0.0

    def __post_init__(self):
        self.positions = np.sort(np.asarray(self.positions, dtype=float))

    @property
    def n(self) -> int:
        return int(self.positions.size)

    def insert(self, x: float) -> None:
        i = int(np.searchsorted(self.positions, x))
        self.positions = np.insert(self.positions, i, x)

    def intensity(self, x, alpha: float):
        """Full ``S(x)``, no shortcuts."""
        x = np.asarray(x, dtype=float)
        out = kernel_continuous(x[..., None] - self.positions, alpha).sum(axis=-1)
        return float(out) if out.ndim == 0 else out


def intensity_exceeds(positions: np.ndarray, x: float, alpha: float, threshold: float) -> bool:
    """Decide ``S(x) >= threshold`` summing only as many particles as needed."""
    n = positions.size
    i = int(np.searchsorted(positions, x))
    width = 8
    while True:
        lo, hi = max(0, i - width), min(n, i + width)
        partial = float(kernel_continuous(x - positions[lo:hi], alpha).sum())
        if partial >= threshold:
            return True
        if lo == 0 and hi == n:
            return False
        gaps = []
        if lo > 0:
            gaps.append(x - positions[lo - 1])
        if hi < n:
            gaps.append(positions[hi] - x)
        rest = (n - (hi - lo)) * float(kernel_continuous(min(gaps), alpha))
        if partial + rest < threshold:
            return False
        width *= 4


def acceptance_probability(state: PointState, x: float, alpha: float) -> float:
    """``min(1, S(x)) / S(x)``: keep-probability of a mixture-driver proposal."""
    S = state.intensity(x, alpha)
    return min(1.0, S) / S


@dataclass
class ContinuumConfig:
    alpha: float
    horizon: float
    seed: int = 0
    sample_interval: float = 0.5
    max_events: Optional[int] = None
    driver: str = "hull"
    initial: Optional[list] = None

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.horizon >= 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon!r}")
        if not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")
        if self.driver not in DRIVERS:
            raise ValueError(f"driver must be one of {DRIVERS}")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


class ContinuumProcess:
    """One run of the continuum process with the hull or mixture driver."""

    def __init__(self, alpha: float, rng: np.random.Generator, driver: str = "hull", initial=None):
        self.alpha = _check_alpha(alpha)
        self.c_alpha = normalization_constant(self.alpha)
        self.rng = rng
        if driver not in DRIVERS:
            raise ValueError(f"driver must be one of {DRIVERS}")
        self.driver = driver
        self.state = PointState(np.zeros(1) if initial is None else initial)
        if self.state.n == 0:
            raise ValueError("initial configuration must have a particle")
        self.proposals = 0
        self.births = 0
        if driver == "hull":
            self._reset_hull()

    # -- hull bookkeeping --------------------------------------------------------

    def _margin(self) -> float:
        return max(1.0, (self.state.n * self.c_alpha) ** (1.0 / (2.0 * self.alpha)))

    def _reset_hull(self) -> None:
        pos = self.state.positions
        d = 2.0 * self._margin()
        self.A, self.B = float(pos[0]) - d, float(pos[-1]) + d
        self.out_weights = self._outside_mass(pos)
        self.out_rate = float(self.out_weights.sum())

    def _outside_mass(self, y):
        return kernel_cdf(self.A - y, self.alpha) + kernel_tail_integral(self.B - y, self.alpha)

    def _hull_ok(self) -> bool:
        pos = self.state.positions
        d = self._margin()
        return pos[0] - self.A >= d and self.B - pos[-1] >= d

    # -- dynamics ----------------------------------------------------------------

    def proposal_rate(self) -> float:
        if self.driver == "hull":
            return (self.B - self.A) + self.out_rate
        return float(self.state.n)

    def _insert(self, x: float) -> None:
        i = int(np.searchsorted(self.state.positions, x))
        self.state.positions = np.insert(self.state.positions, i, x)
        if self.driver == "hull":
            if self._hull_ok():
                w = float(self._outside_mass(x))
                self.out_weights = np.insert(self.out_weights, i, w)
                self.out_rate += w
            else:
                self._reset_hull()
        self.births += 1

    def _propose_hull(self) -> tuple[float, bool]:
        rng = self.rng
        width = self.B - self.A
        u = rng.random() * (width + self.out_rate)
        if u < width:
            x = self.A + u
            return x, intensity_exceeds(self.state.positions, x, self.alpha, rng.random())
        cw = np.cumsum(self.out_weights)
        i = min(int(np.searchsorted(cw, rng.random() * cw[-1], side="right")), cw.size - 1)
        y = float(self.state.positions[i])
        left = float(kernel_cdf(self.A - y, self.alpha))
        right = float(kernel_tail_integral(self.B - y, self.alpha))
        if rng.random() * (left + right) < left:
            x = y + float(sample_tail_displacement(rng, self.alpha, self.A - y, "left"))
            x = min(x, self.A)
        else:
            x = y + float(sample_tail_displacement(rng, self.alpha, self.B - y, "right"))
            x = max(x, self.B)
        return x, True

    def _propose_mixture(self) -> tuple[float, bool]:
        rng = self.rng
        pos = self.state.positions
        y = pos[int(rng.integers(pos.size))]
        x = float(y + sample_displacement(rng, self.alpha))
        # keep iff u <= 1/S, i.e. iff S(x) does not exceed 1/u
        u = rng.random()
        if u == 0.0:
            return x, True
        return x, not intensity_exceeds(pos, x, self.alpha, 1.0 / u)

    def step(self) -> ContinuumEvent:
        """Advance to the next proposal epoch; insert the point if it is kept."""
        self.state.time += self.rng.exponential(1.0 / self.proposal_rate())
        return self.resolve()

    def resolve(self) -> ContinuumEvent:
        self.proposals += 1
        if self.driver == "hull":
            x, keep = self._propose_hull()
        else:
            x, keep = self._propose_mixture()
        if keep:
            self._insert(x)
        return ContinuumEvent(self.state.time, x, keep)


def step_continuum(proc: ContinuumProcess) -> ContinuumEvent:
    return proc.step()


def simulate_continuum(config: ContinuumConfig, rng: Optional[np.random.Generator] = None) -> TipTrajectory:
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    proc = ContinuumProcess(config.alpha, rng, config.driver, config.initial)
    traj = TipTrajectory(seed=config.seed, config_digest=config.digest())
    dt = config.sample_interval
    k = 0
    st = proc.state
    while True:
        t_next = st.time + rng.exponential(1.0 / proc.proposal_rate())
        while k * dt <= config.horizon and k * dt < t_next:
            traj.append(k * dt, float(st.positions[0]), float(st.positions[-1]), st.n)
            k += 1
        if t_next > config.horizon:
            break
        if config.max_events is not None and proc.births >= config.max_events:
            traj.truncated = True
            break
        st.time = t_next
        proc.resolve()
    return traj


def run_to(config: ContinuumConfig, times, rng: Optional[np.random.Generator] = None):
    """Binned snapshots ``{t: (positions, counts_lo, counts)}`` at the requested times."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    proc = ContinuumProcess(config.alpha, rng, config.driver, config.initial)
    st = proc.state
    out = {}
    pending = sorted(times)
    while pending:
        t_next = st.time + rng.exponential(1.0 / proc.proposal_rate())
        while pending and pending[0] < t_next:
            out[pending.pop(0)] = st.positions.copy()
        if not pending:
            break
        st.time = t_next
        proc.resolve()
    return out


def discretize(positions) -> dict[int, int]:
    """Bin ``k`` receives the particles in ``(k - 1/2, k + 1/2]``."""
    pos = np.asarray(positions, dtype=float)
    if pos.size == 0:
        return {}
    ks, cnt = np.unique(round_half_down(pos), return_counts=True)
    return {int(k): int(c) for k, c in zip(ks, cnt)}


# -- distributional comparison with sped-up / slowed lattice runs ---------------

QUANTILES = (0.25, 0.5, 0.75, 0.9)


@dataclass
class QuantileReport:
    alpha: float
    t: float
    quantiles: tuple
    continuum_tip: list
    upper_tip: list
    lower_tip: list
    continuum_count: list
    upper_count: list
    lower_count: list
    upper_scale: float
    lower_scale: float
    seeds: int

    @property
    def upper_dominates(self) -> bool:
        return all(u >= c for u, c in zip(self.upper_tip, self.continuum_tip))

    @property
    def lower_dominated(self) -> bool:
        return all(l <= c for l, c in zip(self.lower_tip, self.continuum_tip))

    def to_json(self) -> dict:
        d = asdict(self)
        d["upper_dominates"] = self.upper_dominates
        d["lower_dominated"] = self.lower_dominated
        return d


def _lattice_at(alpha, t, seed, scale):
    cfg = LatticeConfig(alpha, t, seed=seed, sample_interval=t if t > 0 else 1.0, rate_scale=scale, record_q=False)
    s = simulate_lattice(cfg).samples[-1]
    return -s.left_tip, s.n_particles


def domination_statistics(alpha: float, t: float, seeds, driver: str = "hull") -> QuantileReport:
    """Quantiles of ``|tip|`` and particle count at time ``t`` for three arms.

    The arms are the binned continuum process and the lattice process run at
    rate multipliers ``C_upper = max(c 2^alpha, 2)`` and ``C_lower = min(c 4^-alpha, 1/2)``.
    Each arm uses every seed in ``seeds`` (at least 16).
    """
    seeds = list(seeds)
    if len(seeds) < 16:
        raise ValueError("need at least 16 samples per arm")
    spec = KernelSpec(alpha)
    up, lo = spec.upper_coupling_constant, spec.lower_coupling_constant
    c_tip, c_n, u_tip, u_n, l_tip, l_n = [], [], [], [], [], []
    for s in seeds:
        pos = run_to(ContinuumConfig(alpha, t, seed=s, driver=driver), [t])[t]
        c_tip.append(-min(discretize(pos)))
        c_n.append(pos.size)
        a, b = _lattice_at(alpha, t, s, up)
        u_tip.append(a)
        u_n.append(b)
        a, b = _lattice_at(alpha, t, s, lo)
        l_tip.append(a)
        l_n.append(b)

    def q(v):
        return [float(x) for x in np.quantile(np.asarray(v, dtype=float), QUANTILES)]

    return QuantileReport(
        alpha, t, QUANTILES, q(c_tip), q(u_tip), q(l_tip), q(c_n), q(u_n), q(l_n), up, lo, len(seeds)
    )

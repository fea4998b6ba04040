"""Exact event-driven simulation of the truncated lattice birth process.

A birth at ``x`` happens at rate ``min(1, S(x))`` with
``S(x) = sum_y eta(y) a_d(x - y)``.  Sites are split in three groups:

* occupied sites: rate exactly 1 (``a_d(0) = 1``),
* free sites inside a finite window around the occupied hull: rate
  ``min(1, S)``, with ``S`` maintained incrementally and exactly,
* everything outside the window.

The window keeps at least ``n**(1/(2 alpha))`` free sites on each side of
the hull, so ``S < 1`` outside it and the clamp never binds there.  Births
outside the window are therefore plain long jumps: a parent ``y`` weighted by
``eta(y) * (mass of a_d beyond the window edge)``, then an exactly sampled jump
length.  Nothing is truncated.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import signal, special

from ..kernel import _check_alpha, kernel_lattice, sample_lattice_jump
from ..trajectory import TipTrajectory

log = logging.getLogger(__name__)


class BirthEvent(NamedTuple):
    t: float
    site: int


class WindowLimitError(RuntimeError):
    """The simulation window would exceed the configured memory cap."""

    def __init__(self, message: str, trajectory: Optional[TipTrajectory] = None):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass
class LatticeConfig:
    alpha: float
    horizon: float
    seed: int = 0
    sample_interval: float = 0.5
    max_events: Optional[int] = None
    pad_fraction: float = 0.1
    max_window: int = 20_000_000
    rate_scale: float = 1.0
    record_q: bool = True

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.horizon >= 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon!r}")
        if not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")
        if not self.rate_scale > 0:
            raise ValueError("rate_scale must be positive")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


class LatticeBirthProcess:
    """State and dynamics of one lattice run (``eta_0 = 1{0}`` by default)."""

    def __init__(
        self,
        alpha: float,
        rng: np.random.Generator,
        *,
        rate_scale: float = 1.0,
        pad_fraction: float = 0.1,
        max_window: int = 20_000_000,
        initial: Optional[dict[int, int]] = None,
    ):
        self.alpha = _check_alpha(alpha)
        self.s = 2.0 * self.alpha
        self.rng = rng
        self.rate_scale = float(rate_scale)
        self.pad_fraction = float(pad_fraction)
        self.max_window = int(max_window)
        self.time = 0.0
        self.n_events = 0
        self._kern = None

        initial = dict(initial or {0: 1})
        sites = sorted(k for k, v in initial.items() if v > 0)
        if not sites:
            raise ValueError("initial configuration must have a particle")
        self.left_tip, self.right_tip = sites[0], sites[-1]
        self.n_particles = int(sum(initial.values()))
        pad = self._required_pad()
        self.lo = self.left_tip - 2 * pad
        self.hi = self.right_tip + 2 * pad
        self.counts = np.zeros(self.hi - self.lo + 1, dtype=np.int64)
        for k, v in initial.items():
            self.counts[k - self.lo] += v
        self._rebuild()

    # -- bookkeeping -----------------------------------------------------------

    def _required_pad(self) -> int:
        # S(x) <= n * d^(-2 alpha) <= 1 once d >= n^(1/(2 alpha)).
        d_clamp = math.ceil(self.n_particles ** (1.0 / self.s)) + 1
        width = self.right_tip - self.left_tip
        return max(d_clamp, math.ceil(self.pad_fraction * width), 2)

    def _edge_tail(self, y: np.ndarray) -> np.ndarray:
        """Mass of ``a_d(. - y)`` outside ``[lo, hi]``."""
        y = np.asarray(y, dtype=float)
        return special.zeta(self.s, y - self.lo + 1.0) + special.zeta(self.s, self.hi + 1.0 - y)

    def _rebuild(self) -> None:
        w = self.counts.size
        if w > self.max_window:
            raise WindowLimitError(f"window of {w} sites exceeds max_window={self.max_window}")
        if getattr(self, "_kern", None) is None or self._kern.size < w + 1:
            self._kern = kernel_lattice(np.arange(2 * w + 2), self.alpha)
        occ_idx = np.flatnonzero(self.counts)
        self.occ_pos = occ_idx + self.lo
        self._occ_list = self.occ_pos.tolist()
        free_idx = np.flatnonzero(self.counts == 0)
        self.free_pos = free_idx + self.lo
        self.free_S = self._intensity_from_scratch()[free_idx]
        self.occ_tail = self._edge_tail(self.occ_pos)
        self.out_rate = float(np.dot(self.counts[occ_idx], self.occ_tail))
        self._occ_tail_by_site = dict(zip(self._occ_list, self.occ_tail.tolist()))

    def _intensity_from_scratch(self) -> np.ndarray:
        """``S`` over the whole window, recomputed without incremental state."""
        w = self.counts.size
        kern = kernel_lattice(np.arange(-(w - 1), w), self.alpha)
        c = self.counts.astype(float)
        if w < 2048:
            full = np.convolve(c, kern)
        else:
            full = signal.fftconvolve(c, kern)
        return np.maximum(full[w - 1 : 2 * w - 1], 0.0)

    def _extend(self, new_lo: int, new_hi: int) -> None:
        new_lo, new_hi = min(new_lo, self.lo), max(new_hi, self.hi)
        if new_hi - new_lo + 1 > self.max_window:
            raise WindowLimitError(
                f"window [{new_lo}, {new_hi}] exceeds max_window={self.max_window}"
            )
        counts = np.zeros(new_hi - new_lo + 1, dtype=np.int64)
        counts[self.lo - new_lo : self.lo - new_lo + self.counts.size] = self.counts
        self.lo, self.hi, self.counts = new_lo, new_hi, counts
        self._rebuild()

    def _maybe_extend(self) -> None:
        pad = self._required_pad()
        if self.left_tip - self.lo < pad or self.hi - self.right_tip < pad:
            self._extend(self.left_tip - 2 * pad, self.right_tip + 2 * pad)

    def ensure_covers(self, lo: int, hi: int) -> None:
        if lo < self.lo or hi > self.hi:
            self._extend(min(lo, self.lo), max(hi, self.hi))

    # -- rates -----------------------------------------------------------------

    def rate_parts(self) -> tuple[float, np.ndarray, float]:
        """Unscaled ``(occupied rate, clamped free rates, outside rate)``."""
        return float(len(self._occ_list)), np.minimum(self.free_S, 1.0), self.out_rate

    @property
    def total_rate(self) -> float:
        r_occ, clamped, r_out = self.rate_parts()
        return self.rate_scale * (r_occ + float(clamped.sum()) + r_out)

    def recomputed_total_rate(self) -> float:
        """Total rate rebuilt from ``counts`` alone (audit of the incremental state)."""
        S = self._intensity_from_scratch()
        clamped = np.where(self.counts > 0, 1.0, np.minimum(S, 1.0))
        occ = np.flatnonzero(self.counts)
        out = float(np.dot(self.counts[occ], self._edge_tail(occ + self.lo)))
        return self.rate_scale * (float(clamped.sum()) + out)

    def birth_rate(self, x: int) -> float:
        """Unscaled ``b(x, eta) = min(1, S(x))`` at any site."""
        if self.lo <= x <= self.hi:
            if self.counts[x - self.lo] > 0:
                return 1.0
            i = int(np.searchsorted(self.free_pos, x))
            return min(1.0, float(self.free_S[i]))
        S = float(np.dot(self.counts[self.occ_pos - self.lo], kernel_lattice(x - self.occ_pos, self.alpha)))
        return min(1.0, S)

    @property
    def intensity(self) -> np.ndarray:
        return self._intensity_from_scratch()

    @property
    def clamped_rate(self) -> np.ndarray:
        return np.where(self.counts > 0, 1.0, np.minimum(self.intensity, 1.0))

    def count(self, x: int) -> int:
        if self.lo <= x <= self.hi:
            return int(self.counts[x - self.lo])
        return 0

    def profile_from_tip(self, depth: Optional[int] = None) -> np.ndarray:
        """``xi(k) = eta(tip + k)`` for ``k = 0..depth`` (whole occupied span if ``None``)."""
        start = self.left_tip - self.lo
        stop = self.right_tip - self.lo + 1 if depth is None else start + depth + 1
        out = np.zeros(stop - start, dtype=np.int64)
        avail = self.counts[start : min(stop, self.counts.size)]
        out[: avail.size] = avail
        return out

    # -- dynamics --------------------------------------------------------------

    def sample_site(self, u: float, parts=None) -> int:
        """Map ``u`` uniform on ``[0, unscaled total)`` to a birth site."""
        r_occ, clamped, r_out = parts if parts is not None else self.rate_parts()
        if u < r_occ:
            return self._occ_list[int(u)]
        u -= r_occ
        cw = np.cumsum(clamped)
        if cw.size and u < cw[-1]:
            return int(self.free_pos[min(int(np.searchsorted(cw, u, side="right")), cw.size - 1)])
        return self._sample_outside()

    def _sample_outside(self) -> int:
        rng = self.rng
        weights = self.counts[self.occ_pos - self.lo] * self.occ_tail
        cw = np.cumsum(weights)
        i = min(int(np.searchsorted(cw, rng.random() * cw[-1], side="right")), cw.size - 1)
        y = int(self.occ_pos[i])
        left = special.zeta(self.s, y - self.lo + 1.0)
        right = special.zeta(self.s, self.hi + 1.0 - y)
        if rng.random() * (left + right) < left:
            return y - sample_lattice_jump(rng, y - self.lo + 1, self.alpha)
        return y + sample_lattice_jump(rng, self.hi + 1 - y, self.alpha)

    def apply_birth(self, x: int) -> None:
        if x < self.lo or x > self.hi:
            pad = self._required_pad()
            self._extend(min(x, self.left_tip) - 2 * pad, max(x, self.right_tip) + 2 * pad)
        idx = x - self.lo
        was_free = self.counts[idx] == 0
        self.counts[idx] += 1
        self.n_particles += 1
        if was_free:
            j = int(np.searchsorted(self.free_pos, x))
            self.free_pos = np.delete(self.free_pos, j)
            self.free_S = np.delete(self.free_S, j)
            tail = float(self._edge_tail(x))
            self._occ_list.append(x)
            self.occ_pos = np.append(self.occ_pos, x)
            self.occ_tail = np.append(self.occ_tail, tail)
            self._occ_tail_by_site[x] = tail
        self.free_S += self._kern[np.abs(self.free_pos - x)]
        self.out_rate += self._occ_tail_by_site[x]
        if x < self.left_tip:
            self.left_tip = x
        elif x > self.right_tip:
            self.right_tip = x
        self._maybe_extend()

    def step(self) -> BirthEvent:
        parts = self.rate_parts()
        r_occ, clamped, r_out = parts
        total = r_occ + float(clamped.sum()) + r_out
        self.time += self.rng.exponential(1.0 / (self.rate_scale * total))
        x = self.sample_site(self.rng.random() * total, parts)
        self.apply_birth(x)
        self.n_events += 1
        return BirthEvent(self.time, x)

    def next_event_time(self) -> tuple[float, tuple]:
        """Draw the next event epoch without applying it."""
        parts = self.rate_parts()
        total = parts[0] + float(parts[1].sum()) + parts[2]
        return self.time + self.rng.exponential(1.0 / (self.rate_scale * total)), parts

    def fire(self, t_next: float, parts) -> BirthEvent:
        total = parts[0] + float(parts[1].sum()) + parts[2]
        self.time = t_next
        x = self.sample_site(self.rng.random() * total, parts)
        self.apply_birth(x)
        self.n_events += 1
        return BirthEvent(t_next, x)


def tip(state: LatticeBirthProcess) -> int:
    """Leftmost occupied site, rescanned from the counts."""
    occ = np.flatnonzero(state.counts)
    if occ.size == 0:
        raise AssertionError("empty configuration has no tip")
    return int(occ[0] + state.lo)


def q_integrand(xi, alpha: float) -> float:
    """``sum_{m>=1} m * min(1, sum_k xi(k) (m+k)^(-2 alpha))`` for a profile seen from its tip.

    Exact: for ``m > n^(1/(2 alpha))`` the clamp cannot bind and the remaining
    double series is summed in closed form with Hurwitz zeta functions.  Infinite
    for ``alpha <= 1``.
    """
    alpha = _check_alpha(alpha)
    xi = np.asarray(xi, dtype=float)
    if alpha <= 1.0:
        return math.inf
    s = 2.0 * alpha
    n = xi.sum()
    m0 = max(1, math.ceil(n ** (1.0 / s)))
    ks = np.flatnonzero(xi)
    w = xi[ks]
    kf = ks.astype(float)
    total = 0.0
    ms = np.arange(1, m0 + 1, dtype=float)
    chunk = max(1, 4_000_000 // max(1, ks.size))
    for i in range(0, ms.size, chunk):
        mm = ms[i : i + chunk]
        S = ((mm[:, None] + kf[None, :]) ** (-s)) @ w
        total += float(np.dot(mm, np.minimum(S, 1.0)))
    q = m0 + 1.0 + kf
    total += float(np.dot(w, special.zeta(s - 1.0, q) - kf * special.zeta(s, q)))
    return total


def q_m_decomposition(history, alpha: float, rate_scale: float = 1.0):
    """Split the spread ``X_t`` into drift ``Q_t`` and remainder ``M_t = X_t - Q_t``.

    ``history`` yields ``(t, X_t, xi_t)`` snapshots in increasing time order,
    starting at ``t = 0``.  ``Q`` is the trapezoid integral of
    ``rate_scale * q_integrand(xi_t)`` over the snapshot times.
    """
    alpha = _check_alpha(alpha)
    if alpha <= 2.0:
        log.warning("alpha=%s <= 2: the drift integrand is heavy tailed", alpha)
    out = []
    q_acc = 0.0
    prev = None
    for t, x, xi in history:
        f = rate_scale * q_integrand(xi, alpha)
        if prev is not None:
            t0, f0 = prev
            if not t > t0:
                raise ValueError("snapshot times must increase")
            q_acc += 0.5 * (f0 + f) * (t - t0)
        prev = (t, f)
        out.append((float(t), q_acc, float(x) - q_acc))
    return out


def q_m_from_trajectory(traj: TipTrajectory):
    """``(t, Q_t, M_t)`` read off a trajectory recorded with ``record_q``."""
    return [(s.t, s.q_estimate, -s.left_tip - s.q_estimate) for s in traj.samples]


def simulate(config: LatticeConfig, rng: Optional[np.random.Generator] = None) -> TipTrajectory:
    """Run from ``eta_0 = 1{0}`` to ``config.horizon`` (or the event budget).

    Samples are taken every ``sample_interval``; ``q_estimate`` is the
    trapezoid-rule integral of :func:`q_integrand` over those samples.
    """
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    proc = LatticeBirthProcess(
        config.alpha,
        rng,
        rate_scale=config.rate_scale,
        pad_fraction=config.pad_fraction,
        max_window=config.max_window,
    )
    traj = TipTrajectory(seed=config.seed, config_digest=config.digest())
    record_q = config.record_q
    if record_q and config.alpha <= 2.0:
        log.warning("alpha=%s <= 2: the drift integrand is heavy tailed", config.alpha)
    dt = config.sample_interval
    q_prev_f = None
    q_acc = 0.0
    k_sample = 0

    def record(t_s):
        nonlocal q_prev_f, q_acc
        q = math.nan
        if record_q:
            f = config.rate_scale * q_integrand(proc.profile_from_tip(), config.alpha)
            if q_prev_f is not None:
                q_acc += 0.5 * (q_prev_f + f) * dt
            q_prev_f = f
            q = q_acc
        traj.append(t_s, proc.left_tip, proc.right_tip, proc.n_particles, q)

    try:
        while True:
            t_next, parts = proc.next_event_time()
            while k_sample * dt <= config.horizon and k_sample * dt < t_next:
                record(k_sample * dt)
                k_sample += 1
            if t_next > config.horizon:
                break
            if config.max_events is not None and proc.n_events >= config.max_events:
                traj.truncated = True
                break
            proc.fire(t_next, parts)
    except WindowLimitError as exc:
        traj.truncated = True
        exc.trajectory = traj
        raise
    return traj

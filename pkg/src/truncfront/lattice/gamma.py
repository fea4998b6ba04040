"""Nearest-neighbour comparison process.

Birth rate ``1`` at ``x`` if ``gamma(x) + gamma(x-1) > 0`` and ``0`` otherwise,
started from ``gamma_0 = 1{0}``.  The occupied set is always ``{0, ..., R}``:
every occupied site and the site ``R + 1`` fire at rate one, so ``R`` is a
unit-rate Poisson process.  Between two jumps of ``R`` the counts on
``{0, ..., R}`` receive independent Poisson increments, which is how the
process is sampled here (no per-birth loop).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..trajectory import TipTrajectory


@dataclass
class GammaRun:
    trajectory: TipTrajectory
    profiles: dict[float, np.ndarray] = field(default_factory=dict)
    right_jumps: int = 0

    @property
    def final_profile(self) -> np.ndarray:
        return self.profiles[max(self.profiles)]


def simulate_gamma(
    horizon: float,
    rng: np.random.Generator,
    sample_interval: float = 1.0,
    profile_times: Optional[list[float]] = None,
    seed: Optional[int] = None,
) -> GammaRun:
    if not horizon >= 0:
        raise ValueError("horizon must be >= 0")
    jump_times = []
    t = 0.0
    while True:
        t += rng.exponential(1.0)
        if t > horizon:
            break
        jump_times.append(t)
    n_samples = int(math.floor(horizon / sample_interval + 1e-9)) + 1
    sample_times = [k * sample_interval for k in range(n_samples)]
    profile_times = sorted(set(profile_times or [horizon]))

    # tag 0 = right-tip jump, 1 = trajectory sample, 2 = profile snapshot
    marks = sorted(
        [(tj, 0) for tj in jump_times]
        + [(ts, 1) for ts in sample_times]
        + [(tp, 2) for tp in profile_times]
    )
    counts = np.zeros(len(jump_times) + 1, dtype=np.int64)
    counts[0] = 1
    right = 0
    t_prev = 0.0
    traj = TipTrajectory(seed=seed)
    profiles = {}
    for tm, kind in marks:
        dt = tm - t_prev
        if dt > 0:
            counts[: right + 1] += rng.poisson(dt, size=right + 1)
            t_prev = tm
        if kind == 0:
            right += 1
            counts[right] = 1
        elif kind == 1:
            traj.append(tm, 0, right, int(counts[: right + 1].sum()))
        else:
            profiles[tm] = counts[: right + 1].copy()
    return GammaRun(traj, profiles, len(jump_times))


def rectangle_holds(profile: np.ndarray, t: float) -> bool:
    """``profile(x) >= t/10`` for every integer ``x`` in ``[0, t/4]``."""
    n = int(math.floor(t / 4.0)) + 1
    if profile.size < n:
        return False
    return bool(np.all(profile[:n] >= t / 10.0))

"""Grid solver for ``du/dt = min(a * u, 1)``.

The convolution uses cell-averaged kernel weights ``w_k = int_{(k-1/2)h}^{(k+1/2)h} a``
over the full stencil, evaluated as a circular FFT convolution of length
``2 n``, which equals the linear one on the ``n`` output cells.  Mass coming
from outside the grid is handled by the closures: ``"zero"`` (nothing there)
or ``"plateau"`` (the boundary cell value continues forever, contributing
``u_boundary * tail(distance to the edge)``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import fft

from ..kernel import _check_alpha, kernel_tail_integral

CLOSURES = ("zero", "plateau")


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    n_cells: int
    left_closure: str = "zero"
    right_closure: str = "zero"

    def __post_init__(self):
        n = self.n_cells
        if n < 2 or n & (n - 1):
            raise ValueError(f"n_cells must be a power of two >= 2, got {n}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        for c in (self.left_closure, self.right_closure):
            if c not in CLOSURES:
                raise ValueError(f"closure must be one of {CLOSURES}, got {c!r}")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def x(self) -> np.ndarray:
        """Cell centres."""
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.h

    def index_of(self, x: float) -> int:
        return int(math.floor((x - self.x_min) / self.h))


def domain_for_front(alpha: float, horizon: float, case: int, eps: float = 0.1, margin: float = 0.2) -> float:
    """Half-width reaching past the predicted front ``exp((1+eps) T / p)`` by ``margin``.

    ``p = 2 alpha`` for integrable data (case 1) and ``2 alpha - 1`` for data
    with mass at minus infinity (case 2).
    """
    alpha = _check_alpha(alpha)
    p = 2.0 * alpha if case == 1 else 2.0 * alpha - 1.0
    return (1.0 + margin) * math.exp((1.0 + eps) * horizon / p)


@dataclass
class MesoField:
    grid: GridSpec
    u: np.ndarray
    t: float = 0.0

    def copy(self) -> "MesoField":
        return MesoField(self.grid, self.u.copy(), self.t)

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "u"])
            for xi, ui in zip(self.grid.x.tolist(), self.u.tolist()):
                w.writerow([repr(xi), repr(ui)])
        return path


@dataclass
class FrontTrace:
    level: float
    records: list = field(default_factory=list)  # (t, x_right, x_left)

    def append(self, t, x_right, x_left) -> None:
        self.records.append((t, x_right, x_left))

    def defined(self, side: str = "right"):
        col = 1 if side == "right" else 2
        return [(r[0], r[col]) for r in self.records if r[col] is not None]

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "level", "x_left", "x_right"])
            for t, xr, xl in self.records:
                w.writerow([repr(t), repr(self.level), "" if xl is None else repr(xl), "" if xr is None else repr(xr)])
        return path


class MesoAbort(FloatingPointError):
    """Non-finite or negative values appeared; the offending field is attached."""

    def __init__(self, message: str, field: MesoField):
        super().__init__(message)
        self.field = field


def cell_weights(alpha: float, h: float, n: int) -> np.ndarray:
    """``w_k`` for ``k = 0..n-1`` (the stencil is symmetric)."""
    edges = (np.arange(n + 1) - 0.5) * h
    tails = kernel_tail_integral(edges, alpha)
    w = tails[:-1] - tails[1:]
    w[0] = 1.0 - 2.0 * kernel_tail_integral(0.5 * h, alpha)
    return w


class Convolver:
    """``(a * u)(x_i)`` on a fixed grid, with closures, clipped at 0."""

    def __init__(self, grid: GridSpec, alpha: float, max_tail_deficit: float = 1e-2):
        self.grid = grid
        self.alpha = _check_alpha(alpha)
        n, h = grid.n_cells, grid.h
        w = cell_weights(self.alpha, h, n)
        # kernel mass farther than the whole grid can never be seen by any cell
        self.tail_deficit = 2.0 * kernel_tail_integral((n - 0.5) * h, self.alpha)
        if self.tail_deficit > max_tail_deficit:
            raise ValueError(
                f"grid too narrow: kernel mass {self.tail_deficit:.3g} lies beyond its width"
            )
        circ = np.zeros(2 * n)
        circ[:n] = w
        circ[n + 1 :] = w[1:][::-1]
        self.kernel_hat = fft.rfft(circ)
        i = np.arange(n)
        self.left_tail = kernel_tail_integral((i + 0.5) * h, self.alpha)
        self.right_tail = self.left_tail[::-1].copy()

    def __call__(self, u: np.ndarray) -> np.ndarray:
        n = self.grid.n_cells
        full = fft.irfft(fft.rfft(u, 2 * n) * self.kernel_hat, 2 * n)[:n]
        if self.grid.left_closure == "plateau":
            full += u[0] * self.left_tail
        if self.grid.right_closure == "plateau":
            full += u[-1] * self.right_tail
        return np.maximum(full, 0.0)


def convolve(field: MesoField, alpha: float) -> np.ndarray:
    return Convolver(field.grid, alpha)(field.u)


def rhs(u: np.ndarray, conv: Convolver) -> np.ndarray:
    return np.minimum(conv(u), 1.0)


def _guard(field: MesoField) -> None:
    u = field.u
    if not np.all(np.isfinite(u)) or u.min() < 0.0:
        raise MesoAbort(f"invalid values at t={field.t}", field)


def step_meso(field: MesoField, dt: float, conv: Convolver) -> MesoField:
    """One Heun step, the clamp applied inside both stages."""
    if not 0 < dt <= 0.5:
        raise ValueError("dt must lie in (0, 0.5]")
    k1 = rhs(field.u, conv)
    k2 = rhs(field.u + dt * k1, conv)
    out = MesoField(field.grid, field.u + 0.5 * dt * (k1 + k2), field.t + dt)
    _guard(out)
    return out


def front_position(field: MesoField, level: float, side: str = "right") -> Optional[float]:
    """Outermost crossing of ``u = level``, found from the boundary inward.

    Returns ``None`` when no cell reaches ``level`` or when the boundary cell
    itself is above it (the crossing lies off the grid).
    """
    u, x = field.u, field.grid.x
    above = np.flatnonzero(u >= level)
    if above.size == 0:
        return None
    if side == "right":
        i = int(above[-1])
        if i == u.size - 1:
            return None
        j = i + 1
    elif side == "left":
        i = int(above[0])
        if i == 0:
            return None
        j = i - 1
    else:
        raise ValueError("side must be 'left' or 'right'")
    frac = (u[i] - level) / (u[i] - u[j])
    return float(x[i] + frac * (x[j] - x[i]))


@dataclass
class SolveResult:
    field: MesoField
    frames: list
    traces: dict
    steps: int = 0


def solve(
    field: MesoField,
    horizon: float,
    alpha: float,
    dt: float = 0.1,
    levels=(),
    frame_every: Optional[float] = None,
    conv: Optional[Convolver] = None,
    callback: Optional[Callable[[MesoField], None]] = None,
) -> SolveResult:
    """Heun integration to ``field.t + horizon``.

    Fronts for every level are recorded after each step; fields are stored
    every ``frame_every`` time units (and at the start and end).  Each stored
    frame is checked to be pointwise no smaller than the previous one.
    """
    conv = conv if conv is not None else Convolver(field.grid, alpha)
    t_end = field.t + horizon
    n_steps = int(math.ceil(horizon / dt - 1e-9))
    dt = horizon / n_steps if n_steps else dt
    traces = {lv: FrontTrace(lv) for lv in levels}

    def record(f):
        for lv, tr in traces.items():
            tr.append(f.t, front_position(f, lv, "right"), front_position(f, lv, "left"))

    frames = [field.copy()]
    record(field)
    next_frame = field.t + frame_every if frame_every else math.inf
    cur = field
    for k in range(n_steps):
        cur = step_meso(cur, dt, conv)
        if k == n_steps - 1:
            cur.t = t_end
        record(cur)
        if callback is not None:
            callback(cur)
        if cur.t >= next_frame - 1e-9 or k == n_steps - 1:
            if np.any(cur.u < frames[-1].u):
                raise AssertionError(f"u decreased between frames at t={cur.t}")
            frames.append(cur.copy())
            while next_frame <= cur.t + 1e-9:
                next_frame += frame_every
    return SolveResult(cur, frames, traces, n_steps)


def picard_solve(
    field: MesoField,
    horizon: float,
    alpha: float,
    delta: float = 0.5,
    inner_nodes: int = 201,
    tol: float = 1e-10,
    max_iter: int = 200,
    conv: Optional[Convolver] = None,
) -> tuple[MesoField, list]:
    """Fixed point of ``v -> w + int_0^t min(1, a * v) ds`` on windows of length ``delta``.

    The time integral is the composite trapezoid rule on ``inner_nodes``
    equally spaced nodes per window.  Returns the final field and the number
    of iterations used on each window.
    """
    if not 0 < delta:
        raise ValueError("delta must be positive")
    conv = conv if conv is not None else Convolver(field.grid, alpha)
    n_win = max(1, int(math.ceil(horizon / delta - 1e-9)))
    win = horizon / n_win
    w = field.u.copy()
    iters = []
    for _ in range(n_win):
        tau = win / (inner_nodes - 1)
        v = np.repeat(w[None, :], inner_nodes, axis=0)
        dists = []
        for it in range(1, max_iter + 1):
            f = np.stack([rhs(row, conv) for row in v])
            integral = np.zeros_like(v)
            integral[1:] = np.cumsum(0.5 * tau * (f[1:] + f[:-1]), axis=0)
            new = w[None, :] + integral
            d = float(np.max(np.abs(new - v)))
            v = new
            dists.append(d)
            if d < tol:
                break
            if len(dists) >= 4 and dists[-1] > dists[-2] > dists[-3] > dists[-4]:
                raise ValueError(f"Picard iteration is not contracting (delta={delta})")
        else:
            raise ValueError("Picard iteration did not reach the tolerance")
        iters.append(it)
        w = v[-1].copy()
    return MesoField(field.grid, w, field.t + horizon), iters

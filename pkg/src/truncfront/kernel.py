"""Dispersion kernels.

Two shapes are used throughout the package:

* the continuous density ``a(z) = c_alpha / (1 + z**2)**alpha`` on the real line,
* the lattice weights ``a_d(k) = 1 / max(1, k**2)**alpha`` on the integers
  (unnormalised: ``a_d(-1) = a_d(0) = a_d(1) = 1``).

``a`` is the law of ``T / sqrt(nu)`` with ``T`` Student-t with ``nu = 2*alpha - 1``
degrees of freedom.  That identity gives the CDF, tails and an exact sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate, special


class KernelVariant(str, Enum):
    CONTINUOUS = "continuous"
    LATTICE = "lattice"


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 0.5:
        raise ValueError(f"alpha must exceed 1/2 (integral diverges), got {alpha!r}")
    return alpha


@lru_cache(maxsize=256)
def normalization_constant(alpha: float) -> float:
    """Return ``c_alpha`` with ``int c_alpha (1+z^2)^-alpha dz = 1``.

    Computed by adaptive quadrature; the Gamma-function closed form
    ``Gamma(alpha) / (sqrt(pi) Gamma(alpha - 1/2))`` is only used as a sanity
    check.
    """
    alpha = _check_alpha(alpha)
    f = lambda z: (1.0 + z * z) ** (-alpha)  # noqa: E731
    # On [1, inf) substitute z = 1/s so the heavy tail becomes a finite-range,
    # integrable endpoint singularity s^(2 alpha - 2).
    g = lambda s: s ** (2.0 * alpha - 2.0) * (1.0 + s * s) ** (-alpha)  # noqa: E731
    head, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    tail, _ = integrate.quad(g, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    c = 1.0 / (2.0 * (head + tail))
    closed = closed_form_constant(alpha)
    if abs(c - closed) > 1e-9 * closed:
        raise ArithmeticError(
            f"quadrature c_alpha={c!r} disagrees with closed form {closed!r} at alpha={alpha}"
        )
    return c


def closed_form_constant(alpha: float) -> float:
    alpha = _check_alpha(alpha)
    return math.exp(special.gammaln(alpha) - special.gammaln(alpha - 0.5)) / math.sqrt(math.pi)


def kernel_continuous(z, alpha: float):
    """``c_alpha / (1 + z^2)^alpha``; accepts scalars or arrays."""
    c = normalization_constant(alpha)
    z = np.asarray(z, dtype=float)
    out = c * (1.0 + z * z) ** (-alpha)
    return float(out) if out.ndim == 0 else out


def kernel_lattice(k, alpha: float):
    """``1 / max(1, k^2)^alpha`` for integer ``k``."""
    alpha = _check_alpha(alpha)
    k = np.abs(np.asarray(k, dtype=float))
    out = np.maximum(k, 1.0) ** (-2.0 * alpha)
    return float(out) if out.ndim == 0 else out


def _dof(alpha: float) -> float:
    return 2.0 * alpha - 1.0


def kernel_cdf(x, alpha: float):
    """``int_{-inf}^x a(y) dy``."""
    alpha = _check_alpha(alpha)
    nu = _dof(alpha)
    out = special.stdtr(nu, np.asarray(x, dtype=float) * math.sqrt(nu))
    return float(out) if np.ndim(out) == 0 else out


def kernel_tail_integral(x, alpha: float):
    """``int_x^inf a(y) dy``; equals 1/2 at ``x = 0`` and decays like ``x^(1-2 alpha)``."""
    alpha = _check_alpha(alpha)
    nu = _dof(alpha)
    out = special.stdtr(nu, -np.asarray(x, dtype=float) * math.sqrt(nu))
    return float(out) if np.ndim(out) == 0 else out


def kernel_quantile(p, alpha: float):
    """Inverse of :func:`kernel_cdf`."""
    alpha = _check_alpha(alpha)
    nu = _dof(alpha)
    out = special.stdtrit(nu, np.asarray(p, dtype=float)) / math.sqrt(nu)
    return float(out) if np.ndim(out) == 0 else out


def sample_displacement(rng: np.random.Generator, alpha: float, size=None, method: str = "t"):
    """Draw displacements with density ``a``.

    ``method="t"`` rescales a Student-t variate; ``method="inverse"`` inverts
    the CDF of a uniform draw.
    """
    alpha = _check_alpha(alpha)
    nu = _dof(alpha)
    if method == "t":
        return rng.standard_t(nu, size=size) / math.sqrt(nu)
    if method == "inverse":
        return kernel_quantile(rng.random(size=size), alpha)
    raise ValueError(f"unknown sampling method {method!r}")


def sample_tail_displacement(rng: np.random.Generator, alpha: float, bound, side: str):
    """Draw ``Z ~ a`` conditioned on ``Z > bound`` (side="right") or ``Z < bound`` (side="left")."""
    u = rng.random(size=np.shape(bound) or None)
    if side == "right":
        mass = kernel_tail_integral(bound, alpha)
        return -kernel_quantile(u * mass, alpha)
    if side == "left":
        mass = kernel_cdf(bound, alpha)
        return kernel_quantile(u * mass, alpha)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


# -- lattice sums ---------------------------------------------------------------


def lattice_tail_sum(m, alpha: float):
    """``sum_{k >= m} k^(-2 alpha)`` for integer ``m >= 1`` (Hurwitz zeta)."""
    alpha = _check_alpha(alpha)
    out = special.zeta(2.0 * alpha, np.asarray(m, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def lattice_tail_bound(m: int, alpha: float) -> float:
    """Upper bound ``m^(-2a) + int_m^inf y^(-2a) dy`` for :func:`lattice_tail_sum`."""
    alpha = _check_alpha(alpha)
    s = 2.0 * alpha
    return m ** (-s) + m ** (1.0 - s) / (s - 1.0)


def lattice_kernel_mass(alpha: float) -> float:
    """``sum_k a_d(k) = 3 + 2 sum_{k>=2} k^(-2 alpha)``."""
    return 3.0 + 2.0 * lattice_tail_sum(2, alpha)


def sample_lattice_jump(rng: np.random.Generator, m: int, alpha: float) -> int:
    """Draw ``k >= m`` (``m >= 2``) with probability proportional to ``k^(-2 alpha)``.

    The first few values are enumerated; beyond them ``k = ceil(Y)`` with ``Y``
    Pareto on ``[k0 - 1, inf)`` is accepted with probability
    ``k^-s / int_{k-1}^k y^-s dy``, which is exact.
    """
    alpha = _check_alpha(alpha)
    m = int(m)
    if m < 2:
        raise ValueError("m must be >= 2")
    s = 2.0 * alpha
    k0 = m
    head_len = int(math.ceil(8.0 * s)) if m < 8.0 * s else 0
    if head_len:
        ks = np.arange(m, m + head_len, dtype=float)
        w = ks ** (-s)
        rest = lattice_tail_sum(m + head_len, alpha)
        u = rng.random() * (w.sum() + rest)
        cw = np.cumsum(w)
        if u < cw[-1]:
            return int(ks[int(np.searchsorted(cw, u, side="right"))])
        k0 = m + head_len
    lo = float(k0 - 1)
    while True:
        y = lo * rng.random() ** (-1.0 / (s - 1.0))
        k = max(int(math.ceil(y)), k0)
        envelope = ((k - 1.0) ** (1.0 - s) - k ** (1.0 - s)) / (s - 1.0)
        if rng.random() * envelope <= k ** (-s):
            return k


def round_half_down(x):
    """Nearest integer with ties going down, so ``x`` lands in bin ``(k - 1/2, k + 1/2]``."""
    out = np.ceil(np.asarray(x, dtype=float) - 0.5)
    return int(out) if np.ndim(out) == 0 else out.astype(np.int64)


@dataclass(frozen=True)
class KernelSpec:
    """Immutable description of a dispersion kernel."""

    alpha: float
    variant: KernelVariant = KernelVariant.CONTINUOUS
    c_alpha: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        object.__setattr__(self, "variant", KernelVariant(self.variant))
        object.__setattr__(self, "c_alpha", normalization_constant(self.alpha))

    def __call__(self, z):
        if self.variant is KernelVariant.LATTICE:
            return kernel_lattice(z, self.alpha)
        return kernel_continuous(z, self.alpha)

    def tail(self, x):
        return kernel_tail_integral(x, self.alpha)

    def cdf(self, x):
        return kernel_cdf(x, self.alpha)

    def total_mass(self) -> float:
        if self.variant is KernelVariant.LATTICE:
            return lattice_kernel_mass(self.alpha)
        return 1.0

    def sample(self, rng: np.random.Generator, size=None):
        if self.variant is KernelVariant.LATTICE:
            raise NotImplementedError("lattice weights are not a probability mass function")
        return sample_displacement(rng, self.alpha, size=size)

    @property
    def upper_coupling_constant(self) -> float:
        """Rate multiplier making the lattice process dominate the binned continuum one."""
        return max(self.c_alpha * 2.0**self.alpha, 2.0)

    @property
    def lower_coupling_constant(self) -> float:
        """Rate multiplier making the lattice process dominated by the binned continuum one."""
        return min(self.c_alpha * 4.0 ** (-self.alpha), 0.5)

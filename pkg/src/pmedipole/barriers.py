"""
Super- and subsolutions built from the dipole profile.

    V(x, t) = k(t) t^{-alpha} F_M((x + a) / t^beta),   t k' = -alpha (k^m - k),  k(T) = k_0 > 1
    v(x, t) = c(t) t^{-alpha} F_M((x - a) / t^beta),   t c' =  alpha (c - c^m),  c(T) = c_0 in (0, 1)

Both time factors solve a Bernoulli equation; with z = f^{1-m} it becomes
linear and the solution is

    f(t) = [1 + (f_0^{1-m} - 1) (T/t)^{(m-1)/m}]^{-1/(m-1)}

for either kind.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from pmedipole.errors import DomainError, InvalidParameter
from pmedipole.exact_solutions import XI_FLOOR, DipoleProfile

# strict inequalities delta < delta_bar are realised with this factor
SAFETY = 0.9


class Kind(str, Enum):
    SUPER = "super"
    SUB = "sub"


@dataclass(frozen=True)
class Barrier:
    kind: Kind
    profile: DipoleProfile
    a: float
    T: float
    factor0: float

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not 0.0 < self.a < 1.0:
            raise InvalidParameter(f"shift a must lie in (0, 1), got {self.a!r}")
        if not self.T > 0.0:
            raise InvalidParameter(f"start time T must be positive, got {self.T!r}")
        if self.kind is Kind.SUPER and not self.factor0 > 1.0:
            raise InvalidParameter(f"k_0 must exceed 1, got {self.factor0!r}")
        if self.kind is Kind.SUB and not 0.0 < self.factor0 < 1.0:
            raise InvalidParameter(f"c_0 must lie in (0, 1), got {self.factor0!r}")

    @property
    def sign(self) -> float:
        """+1 for the supersolution (shift x + a), -1 for the subsolution (x - a)."""
        return 1.0 if self.kind is Kind.SUPER else -1.0

    def xi(self, x, t):
        return (np.asarray(x, dtype=float) + self.sign * self.a) / np.asarray(t, dtype=float) ** self.profile.exponents.beta

    def factor(self, t):
        return barrier_factor(self, t)

    def __call__(self, x, t):
        return barrier_eval(self, x, t)


@dataclass(frozen=True)
class Region:
    """{(x, t): t >= T, a < x < delta t^beta}; a = 0 gives A_{delta,T}."""

    delta: float
    T: float
    beta: float
    a: float = 0.0

    def contains(self, x, t):
        x = np.asarray(x, dtype=float)
        return (t >= self.T) & (x > self.a) & (x < self.delta * t**self.beta)

    def upper(self, t: float) -> float:
        return self.delta * t**self.beta


def _check_time(b: Barrier, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < b.T):
        raise DomainError(f"barrier defined for t >= T = {b.T}, got {t.min()!r}")
    return t


def barrier_factor(b: Barrier, t):
    """Closed-form k(t) (super) or c(t) (sub)."""
    t = _check_time(b, t)
    m = b.profile.m
    z0 = b.factor0 ** (1.0 - m)
    out = (1.0 + (z0 - 1.0) * (b.T / t) ** ((m - 1.0) / m)) ** (-1.0 / (m - 1.0))
    return out if np.ndim(out) else float(out)


def barrier_eval(b: Barrier, x, t):
    """V(x, t) or v(x, t); the subsolution is 0 for x <= a."""
    t = _check_time(b, t)
    e = b.profile.exponents
    out = barrier_factor(b, t) * t ** (-e.alpha) * b.profile.F(b.xi(x, t))
    return out if np.ndim(out) else float(out)


def barrier_residual(b: Barrier, x: float, t: float) -> float:
    """Closed-form value of V_t - (V^m)_xx (or the same for v) at (x, t).

    The residual is t^{-alpha-1} (f^m - f) beta xi F_M'(xi) for both kinds;
    it is >= 0 for the supersolution (f > 1) and <= 0 for the subsolution
    (f < 1) wherever F_M' > 0.  xi is clamped below at 1e-12.
    """
    _check_time(b, t)
    p = b.profile
    xi = float(b.xi(x, t))
    if not 0.0 < xi < p.xi_M:
        raise DomainError(f"similarity variable {xi} outside (0, {p.xi_M})")
    xi = max(xi, XI_FLOOR)
    e = p.exponents
    f = barrier_factor(b, t)
    return t ** (-e.alpha - 1.0) * (f**p.m - f) * e.beta * xi * p.dF(xi)


def barrier_residual_fd(b: Barrier, x: float, t: float, h: float) -> float:
    """Finite-difference V_t - (V^m)_xx with step h in both variables."""
    m = b.profile.m
    vt = (barrier_eval(b, x, t + h) - barrier_eval(b, x, t - h)) / (2.0 * h)
    w = [barrier_eval(b, x + s * h, t) ** m for s in (-1.0, 0.0, 1.0)]
    return vt - (w[2] - 2.0 * w[1] + w[0]) / (h * h)


def region_params(p: DipoleProfile) -> tuple[float, float]:
    """(delta_bar, T_bar): width below half the monotone range, and 1/delta_bar^{1/beta}."""
    delta_bar = SAFETY * p.peak_xi / 2.0
    T_bar = (1.0 / delta_bar) ** (1.0 / p.exponents.beta)
    return delta_bar, T_bar


def c_delta(p: DipoleProfile, delta: float) -> float:
    """Matching constant C_delta = 1/F_M(delta)."""
    delta_bar, _ = region_params(p)
    if not 0.0 < delta < delta_bar:
        raise DomainError(f"delta must lie in (0, {delta_bar}), got {delta!r}")
    return 1.0 / p.F(delta)


def shift_bound(p: DipoleProfile, a: float) -> float:
    """Bound m K_M a^{1/m} on the weighted effect of shifting the profile by a.

    K_M = K M^{(m+1)/(2m^2)} is the constant of xi F_M'(xi) <= K_M xi^{1/m},
    valid for xi < xi_hat M^{(m-1)/(2m)}.
    """
    K_M = p.K_bound * p.M ** ((p.m + 1.0) / (2.0 * p.m**2))
    return p.m * K_M * a ** (1.0 / p.m)


def make_pair(p: DipoleProfile, *, T: float, a: float, k0: float, c0: float) -> tuple[Barrier, Barrier]:
    return Barrier(Kind.SUPER, p, a, T, k0), Barrier(Kind.SUB, p, a, T, c0)


"""
Explicit self-similar solutions of the porous medium equation u_t = (u^m)_xx.

Two families are provided:

* the dipole solution on the half-line,
      D_M(x, t) = t^{-alpha} F_M(x / t^beta),   alpha = 1/m, beta = 1/(2m),
  whose profile F_M is compactly supported on [0, xi_M], vanishes at the
  origin and has first moment M;
* the source-type (Barenblatt) solution
      B(x, t; C) = t^{-1/(m+1)} (C - kappa_m xi^2)_+^{1/(m-1)},  xi = x / t^{1/(m+1)}.

All constants are computed once at construction; evaluators are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize

from pmedipole.errors import DomainError, InvalidParameter, NumericError

QUAD_RTOL = 1e-10
XI_FLOOR = 1e-12


def _check_m(m: float) -> None:
    if not (math.isfinite(m) and m > 1.0):
        raise InvalidParameter(f"m must exceed 1, got {m!r}")


@dataclass(frozen=True)
class SimilarityExponents:
    m: float
    alpha: float
    beta: float

    @property
    def near_field(self) -> float:
        """Decay exponent of the weighted near-field error, alpha + beta/m."""
        return self.alpha + self.beta / self.m


def similarity_exponents(m: float) -> SimilarityExponents:
    _check_m(m)
    return SimilarityExponents(m=m, alpha=1.0 / m, beta=1.0 / (2.0 * m))


def kappa(m: float) -> float:
    _check_m(m)
    return (m - 1.0) / (2.0 * m * (m + 1.0))


def amplitude_integral(m: float) -> float:
    """Adaptive quadrature of int_0^1 s^q (1 - s^q)^(1/(m-1)) ds with q = (m+1)/m."""
    _check_m(m)
    q = (m + 1.0) / m
    p = 1.0 / (m - 1.0)

    def integrand(s):
        return s**q * max(1.0 - s**q, 0.0) ** p

    # the (1 - s^q)^p factor is not smooth at s=1 for non-integer p
    value, err, info = integrate.quad(
        integrand, 0.0, 1.0, epsabs=0.0, epsrel=QUAD_RTOL, limit=500, full_output=1
    )[:3]
    if not math.isfinite(value) or err > 10 * QUAD_RTOL * abs(value):
        raise NumericError(
            f"amplitude integral did not converge for m={m}: "
            f"value={value}, error estimate={err}, evaluations={info['neval']}"
        )
    return value


class ProfileValue(NamedTuple):
    value: float
    derivative: float
    # the derivative is infinite at this point; derivative is nan then
    unbounded: bool


@dataclass(frozen=True)
class DipoleProfile:
    """Profile F_M of the dipole solution with exponent m and first moment M."""

    m: float
    M: float
    kappa_m: float
    C_m: float
    integral: float
    xi_1: float
    xi_M: float
    xi_bar: float
    xi_hat: float
    K_bound: float

    @property
    def exponents(self) -> SimilarityExponents:
        return similarity_exponents(self.m)

    @property
    def scale(self) -> float:
        """Length scale lambda = M^{(m-1)/(2m)} with F_M(xi) = M^{1/m} F_1(xi/lambda)."""
        return self.M ** ((self.m - 1.0) / (2.0 * self.m))

    @property
    def peak_xi(self) -> float:
        """Maximum point of F_M."""
        return self.xi_bar * self.scale

    def near_field_amplitude(self, moment_exponent: float | None = None) -> float:
        """Coefficient A in F_M(xi) ~ A xi^{1/m} as xi -> 0.

        The default exponent on M is (m+1)/(2m^2), which follows from the
        scaling law. Pass another exponent (e.g. 2/(m+1)) to compare.
        """
        if moment_exponent is None:
            moment_exponent = (self.m + 1.0) / (2.0 * self.m**2)
        return self.C_m ** (1.0 / (self.m - 1.0)) * self.M**moment_exponent

    # -- F_1 and its derivative, vectorised over xi -------------------------

    def _f1(self, s: np.ndarray) -> np.ndarray:
        m = self.m
        s = np.maximum(s, 0.0)
        g = np.maximum(self.C_m - self.kappa_m * s ** ((m + 1.0) / m), 0.0)
        # exact zero at and beyond the edge, regardless of rounding in g
        return np.where(s < self.xi_1, s ** (1.0 / m) * g ** (1.0 / (m - 1.0)), 0.0)

    def _df1(self, s: np.ndarray) -> np.ndarray:
        # F_1' = (1/m) s^{1/m-1} g^p - p kappa (m+1)/m s^{2/m} g^{p-1},  p = 1/(m-1)
        m = self.m
        p = 1.0 / (m - 1.0)
        s = np.asarray(s, dtype=float)
        inside = (s > 0.0) & (s < self.xi_1)
        sc = np.where(inside, s, 0.5 * self.xi_1)
        g = self.C_m - self.kappa_m * sc ** ((m + 1.0) / m)
        d = sc ** (1.0 / m - 1.0) * g**p / m - p * self.kappa_m * (m + 1.0) / m * sc ** (
            2.0 / m
        ) * g ** (p - 1.0)
        return np.where(inside, d, 0.0)

    def F(self, xi):
        """F_M(xi); zero for xi <= 0 and xi >= xi_M."""
        lam = self.scale
        out = self.M ** (1.0 / self.m) * self._f1(np.asarray(xi, dtype=float) / lam)
        return out if np.ndim(out) else float(out)

    def dF(self, xi):
        """F_M'(xi) on the open support (0, xi_M); zero outside it."""
        lam = self.scale
        out = self.M ** (1.0 / self.m) / lam * self._df1(np.asarray(xi, dtype=float) / lam)
        return out if np.ndim(out) else float(out)

    def D(self, x, t):
        """Dipole solution D_M(x, t) = t^{-alpha} F_M(x / t^beta)."""
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise InvalidParameter("dipole solution needs t > 0")
        e = self.exponents
        out = t ** (-e.alpha) * self.F(np.asarray(x, dtype=float) / t**e.beta)
        return out if np.ndim(out) else float(out)


def _xi_bar_bisect(F1_prime, xi_1: float) -> float:
    return optimize.bisect(F1_prime, XI_FLOOR, xi_1 * (1.0 - 1e-12), xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def build_profile(m: float, M: float = 1.0, *, C_scale: float = 1.0) -> DipoleProfile:
    """Compute every constant of the dipole profile.

    ``C_scale`` multiplies the amplitude constant C_m; it exists only so the
    verification suite can check that a perturbed profile is detected.
    """
    _check_m(m)
    if not (math.isfinite(M) and M > 0.0):
        raise InvalidParameter(f"M must be positive, got {M!r}")
    km = kappa(m)
    I = amplitude_integral(m)
    C = (km ** ((2.0 * m + 1.0) / (m + 1.0)) / I) ** ((m * m - 1.0) / (2.0 * m * m))
    C *= C_scale
    xi_1 = (C / km) ** (m / (m + 1.0))
    xi_M = xi_1 * M ** ((m - 1.0) / (2.0 * m))

    unit = DipoleProfile(m, 1.0, km, C, I, xi_1, xi_1, math.nan, math.nan, math.nan)
    xi_bar = _xi_bar_bisect(lambda s: float(unit._df1(np.array(s))), xi_1)

    xi_hat = 0.5 * xi_bar
    grid = np.linspace(xi_hat / 1e4, xi_hat, 10_000)
    ratio = grid * unit._df1(grid) / grid ** (1.0 / m)
    K = 1.1 * float(ratio.max())

    return DipoleProfile(m, M, km, C, I, xi_1, xi_M, xi_bar, xi_hat, K)


def profile_eval(p: DipoleProfile, xi: float) -> ProfileValue:
    """F_M(xi) and F_M'(xi), with one-sided values at the ends of the support.

    At xi = 0 the derivative is always unbounded. At xi = xi_M it is 0 for
    m < 2, the finite kink slope for m = 2, and unbounded for m > 2.
    """
    if not xi >= 0.0:
        raise DomainError(f"profile needs xi >= 0, got {xi!r}")
    value = p.F(xi)
    if xi == 0.0:
        return ProfileValue(0.0, math.nan, True)
    if xi >= p.xi_M:
        if xi > p.xi_M or p.m < 2.0:
            return ProfileValue(0.0, 0.0, False)
        if p.m > 2.0:
            return ProfileValue(0.0, math.nan, True)
        # m = 2: F_1' -> -kappa (m+1)/(m(m-1)) xi_1^{2/m} at the edge
        slope1 = -p.kappa_m * 1.5 * p.xi_1
        return ProfileValue(0.0, p.M ** 0.5 / p.scale * slope1, False)
    return ProfileValue(value, p.dF(xi), False)


def dipole_eval(p: DipoleProfile, x: float, t: float) -> float:
    if not t > 0.0:
        raise InvalidParameter(f"dipole solution needs t > 0, got {t!r}")
    if x < 0.0:
        raise DomainError(f"dipole solution lives on x >= 0, got {x!r}")
    return p.D(x, t)


def profile_moment(p: DipoleProfile) -> float:
    """Quadrature of int_0^{xi_M} xi F_M(xi) d xi."""
    # split at the peak so each piece is monotone
    pieces = [(0.0, p.peak_xi), (p.peak_xi, p.xi_M)]
    total = 0.0
    for a, b in pieces:
        val, err = integrate.quad(lambda s: s * p.F(s), a, b, epsabs=0.0, epsrel=1e-12, limit=500)
        if not math.isfinite(val):
            raise NumericError(f"moment quadrature failed on [{a}, {b}]")
        total += val
    return total


def profile_ode_residual(p: DipoleProfile, xi: float, h: float) -> float:
    """Central-difference residual of (F^m)'' + beta xi F' + alpha F at xi."""
    if not h > 0.0:
        raise InvalidParameter("h must be positive")
    if not (xi - h > 0.0 and xi + h < p.xi_M):
        raise DomainError(f"stencil [{xi - h}, {xi + h}] leaves the support (0, {p.xi_M})")
    e = p.exponents
    m = p.m
    wm, w0, wp = (p.F(s) ** m for s in (xi - h, xi, xi + h))
    second = (wp - 2.0 * w0 + wm) / (h * h)
    return second + e.beta * xi * p.dF(xi) + e.alpha * p.F(xi)


@dataclass(frozen=True)
class BarenblattSolution:
    m: float
    C: float
    x0: float = 0.0

    def __post_init__(self):
        _check_m(self.m)
        if not self.C > 0.0:
            raise InvalidParameter(f"Barenblatt amplitude C must be positive, got {self.C!r}")

    def half_width(self, t: float) -> float:
        return math.sqrt(self.C / kappa(self.m)) * t ** (1.0 / (self.m + 1.0))

    def __call__(self, x, t):
        return barenblatt_eval(self, x, t)

    def mass(self, t: float) -> float:
        w = self.half_width(t)
        val, _ = integrate.quad(lambda y: barenblatt_eval(self, y, t), self.x0 - w, self.x0 + w, epsabs=0.0, epsrel=1e-12, limit=200)
        return val


def barenblatt_eval(b: BarenblattSolution, x, t: float):
    if not t > 0.0:
        raise InvalidParameter(f"Barenblatt solution needs t > 0, got {t!r}")
    m = b.m
    tau = t ** (1.0 / (m + 1.0))
    xi = (np.asarray(x, dtype=float) - b.x0) / tau
    out = np.maximum(b.C - kappa(m) * xi * xi, 0.0) ** (1.0 / (m - 1.0)) / tau
    return out if np.ndim(out) else float(out)


def dump_profile(p: DipoleProfile, path: str | Path, n: int = 401) -> Path:
    """Write ``xi,F,Fprime`` rows on a uniform grid of [0, xi_M]."""
    path = Path(path)
    xi = np.linspace(0.0, p.xi_M, n)
    F = p.F(xi)
    dF = p.dF(xi)
    # one-sided conventions at the ends of the support
    ends = [profile_eval(p, 0.0), profile_eval(p, p.xi_M)]
    dF[0] = ends[0].derivative
    dF[-1] = ends[1].derivative
    with path.open("w") as fh:
        fh.write(
            f"# m={p.m!r} M={p.M!r} kappa={p.kappa_m!r} C={p.C_m!r} "
            f"xi1={p.xi_1!r} xiM={p.xi_M!r}\n"
        )
        fh.write("xi,F,Fprime\n")
        for row in zip(xi, F, dF):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return path

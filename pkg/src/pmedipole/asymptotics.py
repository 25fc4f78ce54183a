"""
Error metrics comparing a numerical solution with the dipole solution D_M.

    far field   t^alpha sup_x |u - D_M|
    near field  t^{alpha + beta/m} sup_x |u - D_M| / (1 + x)^{1/m}

plus the front position, the retention property (t^{1/(m-1)} u nondecreasing)
and the two-sided barrier estimates of the matching argument.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from pmedipole.barriers import Barrier, Kind, Region, barrier_eval, c_delta
from pmedipole.errors import DomainError, InvalidParameter
from pmedipole.exact_solutions import DipoleProfile
from pmedipole.solver import SolverState, observables

SERIES_FIELDS = ("t", "e_far", "e_near", "e_signed_sup", "e_signed_inf", "front_dev", "mass", "moment", "umax")


def _check_covers(state: SolverState, p: DipoleProfile) -> None:
    # beyond both supports u - D_M vanishes, so node-wise sups are exact only
    # when the grid holds both supports
    edge = p.xi_M * state.t ** p.exponents.beta
    if edge >= state.grid.L or state.u[-2] != 0.0:
        raise DomainError(
            f"grid of length {state.grid.L} does not contain both supports at t={state.t} "
            f"(dipole edge {edge:.6g})"
        )


def _difference(state: SolverState, p: DipoleProfile) -> np.ndarray:
    if not state.t > 0:
        raise DomainError("error metrics need t > 0")
    _check_covers(state, p)
    return state.u - p.D(state.grid.x, state.t)


def far_field_error(state: SolverState, p: DipoleProfile) -> float:
    diff = _difference(state, p)
    return state.t ** p.exponents.alpha * float(np.max(np.abs(diff)))


class NearFieldError(NamedTuple):
    e_near: float
    e_signed_sup: float
    e_signed_inf: float


def near_field_error(state: SolverState, p: DipoleProfile) -> NearFieldError:
    e = p.exponents
    x = state.grid.x
    weighted = state.t**e.near_field * _difference(state, p) / (1.0 + x) ** (1.0 / p.m)
    hi = float(weighted.max())
    lo = float(weighted.min())
    return NearFieldError(max(abs(hi), abs(lo)), hi, lo)


def near_field_profile_error(
    state: SolverState, p: DipoleProfile, K: float, moment_exponent: float | None = None
) -> float:
    """sup_{x <= K} |t^{alpha+beta/m} u - A x^{1/m}| with A from DipoleProfile.near_field_amplitude."""
    if not 0 < K <= state.grid.L:
        raise DomainError(f"K must lie in (0, {state.grid.L}], got {K!r}")
    x = state.grid.x
    sel = x <= K
    A = p.near_field_amplitude(moment_exponent)
    scaled = state.t**p.exponents.near_field * state.u[sel]
    return float(np.max(np.abs(scaled - A * x[sel] ** (1.0 / p.m))))


def front_deviation(state: SolverState, p: DipoleProfile) -> float:
    """s(t)/t^beta - xi_M for the discrete front s(t)."""
    front = observables(state).front
    if front <= 0.0:
        raise DomainError("the solution vanishes identically; its front is undefined")
    return front / state.t ** p.exponents.beta - p.xi_M


def retention_check(states: Sequence[SolverState], m: float) -> float:
    """Worst decrease of t^{1/(m-1)} u_i between consecutive states (>= 0 means none)."""
    if len(states) < 2:
        return 0.0
    worst = math.inf
    power = 1.0 / (m - 1.0)
    for a, b in zip(states, states[1:]):
        if a.grid != b.grid:
            raise DomainError("retention check needs states on the same grid")
        if not b.t > a.t:
            raise DomainError("states must be strictly time ordered")
        gap = b.t**power * b.u - a.t**power * a.u
        worst = min(worst, float(gap.min()))
    return worst


@dataclass
class SandwichReport:
    eps: float
    C_delta: float
    slack: float
    # worst of t^alpha ((1 + C eps) V - u) and t^alpha (u - (1 - C eps) v)
    upper_margin: float = math.inf
    lower_margin: float = math.inf
    nodes: int = 0
    violations: int = 0
    checked_times: list = field(default_factory=list)
    skipped_times: list = field(default_factory=list)

    @property
    def violation_fraction(self) -> float:
        return self.violations / self.nodes if self.nodes else 0.0

    @property
    def passed(self) -> bool:
        return self.nodes > 0 and self.violations == 0

    def as_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["violation_fraction"] = self.violation_fraction
        d["passed"] = self.passed
        return d


def barrier_sandwich_check(
    states: Sequence[SolverState],
    upper: Barrier,
    lower: Barrier,
    region: Region,
    eps: float,
    slack: float = 0.0,
) -> SandwichReport:
    """Check (1 - C eps) v <= u <= (1 + C eps) V on the region nodes of each state.

    Margins and ``slack`` are measured after scaling by t^alpha, the
    normalisation of the far-field error.
    """
    if upper.kind is not Kind.SUPER or lower.kind is not Kind.SUB:
        raise InvalidParameter("need a supersolution and a subsolution, in that order")
    p = upper.profile
    C = c_delta(p, region.delta)
    if not 0.0 < eps < p.F(region.delta):
        raise InvalidParameter(f"eps must lie in (0, F_M(delta) = {p.F(region.delta):.6g}), got {eps!r}")
    report = SandwichReport(eps=eps, C_delta=C, slack=slack)
    alpha = p.exponents.alpha
    for st in states:
        if st.t < region.T or st.t < upper.T or st.t < lower.T:
            raise DomainError(f"state at t={st.t} precedes the region start {region.T}")
        x = st.grid.x
        inside = region.contains(x, st.t)
        if not inside.any():
            report.skipped_times.append(st.t)
            continue
        report.checked_times.append(st.t)
        scale = st.t**alpha
        xs, us = x[inside], st.u[inside]
        up = scale * ((1.0 + C * eps) * barrier_eval(upper, xs, st.t) - us)
        low_sel = xs > lower.a
        low = scale * (us[low_sel] - (1.0 - C * eps) * barrier_eval(lower, xs[low_sel], st.t))
        report.upper_margin = min(report.upper_margin, float(up.min()))
        if low.size:
            report.lower_margin = min(report.lower_margin, float(low.min()))
        bad = up < -slack
        bad[low_sel] |= low < -slack
        report.nodes += int(inside.sum())
        report.violations += int(bad.sum())
    return report


@dataclass
class ErrorSeries:
    t: list = field(default_factory=list)
    e_far: list = field(default_factory=list)
    e_near: list = field(default_factory=list)
    e_signed_sup: list = field(default_factory=list)
    e_signed_inf: list = field(default_factory=list)
    front_dev: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    moment: list = field(default_factory=list)
    umax: list = field(default_factory=list)

    def __len__(self):
        return len(self.t)

    def append(self, state: SolverState, p: DipoleProfile) -> None:
        if self.t and not state.t > self.t[-1]:
            raise DomainError("checkpoint times must increase strictly")
        obs = observables(state)
        nf = near_field_error(state, p)
        self.t.append(state.t)
        self.e_far.append(far_field_error(state, p))
        self.e_near.append(nf.e_near)
        self.e_signed_sup.append(nf.e_signed_sup)
        self.e_signed_inf.append(nf.e_signed_inf)
        self.front_dev.append(front_deviation(state, p) if obs.front > 0 else math.nan)
        self.mass.append(obs.mass)
        self.moment.append(obs.moment)
        self.umax.append(obs.umax)

    def column(self, name: str) -> np.ndarray:
        if name not in SERIES_FIELDS:
            raise KeyError(f"unknown column {name!r}; expected one of {', '.join(SERIES_FIELDS)}")
        return np.asarray(getattr(self, name), dtype=float)

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SERIES_FIELDS)
            for row in zip(*(getattr(self, f) for f in SERIES_FIELDS)):
                w.writerow([f"{v:.17g}" for v in row])
        return path

    @classmethod
    def from_csv(cls, path: str | Path) -> "ErrorSeries":
        with Path(path).open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        out = cls()
        for r in rows:
            for f in SERIES_FIELDS:
                getattr(out, f).append(float(r[f]))
        return out


class RateFit(NamedTuple):
    slope: float
    intercept: float
    residual: float


def fit_rate(series: ErrorSeries, name: str) -> RateFit:
    """Least-squares line through (log t_j, log e_j)."""
    t = series.column("t")
    e = series.column(name)
    if e.size < 3:
        raise DomainError(f"rate fit needs at least 3 samples, got {e.size}")
    if np.any(~(e > 0)) or np.any(~(t > 0)):
        raise DomainError(f"rate fit needs strictly positive samples of {name!r}")
    X = np.log(t)
    Y = np.log(e)
    (slope, intercept), res, *_ = np.polyfit(X, Y, 1, full=True)
    return RateFit(float(slope), float(intercept), float(res[0]) if res.size else 0.0)

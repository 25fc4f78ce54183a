"""
The verification suite behind ``pmedipole verify``.

Each numbered criterion returns a list of named checks with the measured
value and the tolerance it was held to.  Wall times are reported apart from
the checks so that the pass/fail report is deterministic.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from pmedipole.asymptotics import front_deviation
from pmedipole.barriers import (
    Barrier,
    Kind,
    barrier_factor,
    barrier_residual,
    barrier_residual_fd,
    region_params,
)
from pmedipole.config import ExperimentConfig, config_from_dict
from pmedipole.exact_solutions import (
    BarenblattSolution,
    build_profile,
    kappa,
    profile_moment,
    profile_ode_residual,
)
from pmedipole.experiment import ExperimentResult, run_sweep
from pmedipole.solver import observables

# wall-time budgets in seconds, per criterion
RUNTIME_LIMITS = {1: 1.0, 2: 1.0, 3: 1.0, 4: 5.0, 5: 60.0, 6: 30.0, 7: 300.0}

DIPOLE_RUN = {
    "m": 2.0,
    "initial": {"dipole": {"M": 1.0, "t0": 1.0}},
    "t_end": 16.0,
    "dx": 1 / 200,
    "checkpoints": {"first": 2.0, "ratio": 2.0},
}

BOX_RUN = {
    "m": 2.0,
    "initial": {"box": {"h": 1.0, "x1": 1.0, "x2": 2.0}},
    "t0": 0.0,
    "t_end": 640.0,
    "dx": 1 / 100,
    "checkpoints": {"first": 10.0, "ratio": 4.0},
    "sandwich": {"delta_fraction": 0.5, "eps": 0.1, "a": 0.01, "k0": 2.0, "c0": 0.5},
}

BARENBLATT_RUN = {
    "m": 2.0,
    "initial": {"barenblatt": {"C": 0.05, "x0": 3.0, "t0": 1.0}},
    "t_end": 128.0,
    "dx": 1 / 100,
    "L": 12.0,
    "checkpoints": {"first": 2.0, "ratio": 2.0},
}


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


def _check(criterion, name, value, tolerance, ok, detail="") -> Check:
    return Check(criterion, name, bool(ok), float(value), float(tolerance), detail)


def rk4_log_time(f0: np.ndarray, m: np.ndarray, s_end: float, ds: float):
    """Classical RK4 for t f' = -alpha (f^m - f) in s = ln(t/T).

    Both barrier factors obey this equation: t c' = alpha (c - c^m) is the
    same law started below 1 instead of above.  The step is ds, shortened
    to 0.01/|J| while the Jacobian J is large (the fast initial transient
    for k_0 >> 1).  Returns the s nodes and the solution, one column per
    problem.
    """
    alpha = 1.0 / m

    def rhs(f):
        return -alpha * (f**m - f)

    f = f0.astype(float).copy()
    s = 0.0
    nodes, values = [0.0], [f.copy()]
    while s < s_end:
        jac = float(np.max(alpha * np.abs(m * f ** (m - 1) - 1.0)))
        h = min(ds, 0.01 / jac, s_end - s)
        k1 = rhs(f)
        k2 = rhs(f + 0.5 * h * k1)
        k3 = rhs(f + 0.5 * h * k2)
        k4 = rhs(f + h * k3)
        f = f + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        s = s + h if s_end - s > h else s_end
        nodes.append(s)
        values.append(f.copy())
    return np.array(nodes), np.array(values)


@dataclass
class Suite:
    """Acceptance checks; the long solver runs are shared and computed once."""

    box: ExperimentConfig = field(default_factory=lambda: config_from_dict(BOX_RUN))
    c_scale: float = 1.0
    timings: dict = field(default_factory=dict)

    @cached_property
    def _runs(self) -> dict[str, ExperimentResult]:
        fine = dict(DIPOLE_RUN, dx=DIPOLE_RUN["dx"] / 2)
        names = ["dipole", "dipole_fine", "barenblatt", "box"]
        cfgs = [config_from_dict(DIPOLE_RUN), config_from_dict(fine), config_from_dict(BARENBLATT_RUN), self.box]
        return dict(zip(names, run_sweep(cfgs)))

    def run(self, name: str) -> ExperimentResult:
        return self._runs[name]

    # -- exact solutions --------------------------------------------------

    def criterion_1(self) -> list[Check]:
        p = build_profile(2.0, 1.0, C_scale=self.c_scale)
        moment = profile_moment(p)
        loop = p.C_m**2 * p.xi_1 / p.kappa_m * (2 / 5 - 1 / 4)
        return [
            _check(1, "kappa_2", p.kappa_m, 0.0, p.kappa_m == kappa(2.0) and abs(p.kappa_m - 1 / 12) < 1e-16),
            _check(1, "moment_check", abs(moment - 1.0), 1e-8, abs(moment - 1.0) <= 1e-8),
            _check(1, "C_2", p.C_m, 5e-5, abs(p.C_m - 0.4310) <= 5e-5),
            _check(1, "moment_identity_closed_form", abs(loop - 1.0), 1e-12, abs(loop - 1.0) <= 1e-12),
        ]

    def criterion_2(self) -> list[Check]:
        checks = []
        for m in (1.5, 2.0, 3.0):
            p = build_profile(m, 1.0)
            xs = np.linspace(0.1 * p.xi_M, 0.9 * p.xi_M, 201)

            def worst(h):
                return max(abs(profile_ode_residual(p, x, h)) for x in xs)

            r = worst(1e-4)
            # order measured where truncation, not rounding, dominates
            order = math.log2(worst(1e-2) / worst(5e-3))
            checks.append(_check(2, f"ode_residual_m{m:g}", r, 1e-4, r <= 1e-4))
            checks.append(_check(2, f"ode_order_m{m:g}", order, 1.9, order >= 1.9))
        return checks

    # -- barriers ------------------------------------------------------------

    def criterion_3(self) -> list[Check]:
        p_cache = {m: build_profile(m, 1.0) for m in (1.5, 2.0, 3.0, 5.0)}
        cases = [(m, Kind.SUPER, f) for m in p_cache for f in (1.5, 2.0, 5.0)]
        cases += [(m, Kind.SUB, f) for m in p_cache for f in (0.1, 0.5, 0.9)]
        T = 1.0
        m = np.array([c[0] for c in cases])
        f0 = np.array([c[2] for c in cases])
        s, numeric = rk4_log_time(f0, m, math.log(1e4), 5e-4)
        t = T * np.exp(s)
        worst = 0.0
        for j, (mj, kind, fj) in enumerate(cases):
            b = Barrier(kind, p_cache[mj], 0.5, T, fj)
            worst = max(worst, float(np.max(np.abs(barrier_factor(b, t) - numeric[:, j]))))
        spot = barrier_factor(Barrier(Kind.SUPER, p_cache[2.0], 0.5, 1.0, 2.0), 4.0)
        return [
            _check(3, "factor_vs_rk4", worst, 1e-10, worst <= 1e-10),
            _check(3, "k_at_4", abs(spot - 4 / 3), 1e-12, abs(spot - 4 / 3) <= 1e-12),
        ]

    def criterion_4(self) -> list[Check]:
        p = build_profile(2.0, 1.0)
        delta_bar, T_bar = region_params(p)
        beta = p.exponents.beta
        a = 0.1
        sup = Barrier(Kind.SUPER, p, a, T_bar, 2.0)
        sub = Barrier(Kind.SUB, p, a, T_bar, 0.5)
        rng = np.random.default_rng(20161)
        t = T_bar * 10 ** rng.uniform(0, 3, 1000)
        top = delta_bar * t**beta
        x_sup = rng.uniform(0, 1, 1000) * top
        x_sub = a + rng.uniform(0, 1, 1000) * (top - a)
        x_sup = np.where(x_sup > 0, x_sup, top / 2)
        x_sub = np.where(x_sub > a, x_sub, a + (top - a) / 2)
        r_sup = np.array([barrier_residual(sup, x, tt) for x, tt in zip(x_sup, t)])
        r_sub = np.array([barrier_residual(sub, x, tt) for x, tt in zip(x_sub, t)])

        fd = Barrier(Kind.SUPER, p, 0.1, 1.0, 2.0)
        pts = [(0.4, 2.0), (0.2, 1.5), (0.8, 3.0), (1.2, 5.0)]
        dev = lambda h: max(abs(barrier_residual(fd, x, tt) - barrier_residual_fd(fd, x, tt, h)) for x, tt in pts)
        agree = abs(barrier_residual(fd, 0.4, 2.0) - barrier_residual_fd(fd, 0.4, 2.0, 1e-4))
        order = math.log2(dev(4e-3) / dev(2e-3))
        return [
            _check(4, "super_residual_min", r_sup.min(), 0.0, r_sup.min() >= 0.0),
            _check(4, "sub_residual_max", r_sub.max(), 0.0, r_sub.max() <= 0.0),
            _check(4, "residual_fd_agreement", agree, 1e-5, agree <= 1e-5),
            _check(4, "residual_fd_order", order, 1.9, order >= 1.9),
        ]

    # -- solver --------------------------------------------------------------

    def dipole_error(self, name: str = "dipole") -> float:
        r = self.run(name)
        return r.series.e_far[-1]

    def criterion_5(self) -> list[Check]:
        coarse, fine = self.run("dipole"), self.run("dipole_fine")
        e1, e2 = self.dipole_error("dipole"), self.dipole_error("dipole_fine")
        o0, o1 = observables(coarse.initial), observables(coarse.final)
        drift = abs(o1.moment - o0.moment) / o0.moment
        masses = [o0.mass] + list(coarse.series.mass)
        mono = max(np.diff(masses))
        return [
            _check(5, "final_time", coarse.final.t, 16.0, coarse.final.t == 16.0),
            _check(5, "far_field_error_dx200", e1, 2e-2, e1 <= 2e-2),
            _check(5, "refinement_ratio", e1 / e2, 1.5, e1 / e2 >= 1.5),
            _check(5, "moment_drift", drift, 1e-10, drift <= 1e-10),
            _check(5, "mass_increase_max", mono, 0.0, mono <= 0.0),
        ]

    def criterion_6(self) -> list[Check]:
        b = BarenblattSolution(2.0, 0.05, 0.0)
        m1, m4 = b.mass(1.0), b.mass(4.0)
        run = self.run("barenblatt")
        o0 = observables(run.initial)
        drifts = []
        touched = None
        for st in run.states:
            if st.u[1] > 0:
                touched = st.t
                break
            drifts.append(abs(observables(st).mass - o0.mass) / o0.mass)
        final_loss = o0.mass - observables(run.final).mass
        return [
            _check(6, "quadrature_mass_t1_t4", abs(m1 - m4), 1e-8, abs(m1 - m4) <= 1e-8),
            _check(6, "solver_mass_drift_before_contact", max(drifts), 1e-10, len(drifts) >= 3 and max(drifts) <= 1e-10,
                   f"{len(drifts)} checkpoints before contact at t={touched}"),
            _check(6, "mass_lost_after_contact", final_loss, 0.0, touched is not None and final_loss > 0),
        ]

    # -- long-time behaviour on the shared box run ---------------------------

    def criterion_7(self) -> list[Check]:
        s = self.run("box").series
        e_far, e_near = np.array(s.e_far), np.array(s.e_near)
        sup, inf = np.array(s.e_signed_sup), np.array(s.e_signed_inf)
        straddle = bool(np.all((sup >= 0) & (inf <= 0)))
        spread = np.maximum(np.abs(sup), np.abs(inf))
        shrink = bool(np.all(np.diff(spread) < 0))
        ratio = e_near[-1] / e_near[0]
        return [
            _check(7, "e_far_decreasing", np.max(np.diff(e_far)), 0.0, np.all(np.diff(e_far) < 0)),
            _check(7, "e_near_decreasing", np.max(np.diff(e_near)), 0.0, np.all(np.diff(e_near) < 0)),
            _check(7, "e_near_ratio", ratio, 0.5, ratio <= 0.5),
            _check(7, "signed_extrema", spread[-1], spread[0], straddle or shrink,
                   f"straddle={straddle} shrink={shrink}"),
        ]

    def criterion_8(self) -> list[Check]:
        run = self.run("box")
        p = run.profile
        beta = p.exponents.beta
        dx = run.initial.grid.dx
        rel = abs(front_deviation(run.final, p)) / p.xi_M
        lag = min(observables(st).front - p.xi_M * st.t**beta for st in run.states[-2:])
        return [
            _check(8, "front_relative_deviation", rel, 0.05, rel <= 0.05),
            _check(8, "front_lower_bound", lag, -dx, lag >= -dx),
        ]

    def criterion_9(self) -> list[Check]:
        slack = 2.0 * self.dipole_error("dipole")
        rep = self.run("box").sandwich(slack=slack)
        worst = min(rep.upper_margin, rep.lower_margin)
        return [
            _check(9, "sandwich_violations", rep.violations, 0, rep.passed,
                   f"nodes={rep.nodes} times={rep.checked_times} slack={slack:.3e}"),
            _check(9, "sandwich_worst_margin", worst, -slack, worst >= -slack),
        ]

    def criterion_10(self) -> list[Check]:
        worst = self.run("box").retention()
        return [_check(10, "retention_worst", worst, -1e-6, worst >= -1e-6)]

    def criterion_11(self) -> list[Check]:
        run = self.run("box")
        main = np.array(run.near_profile)
        alt = np.array(run.near_profile_alt)
        return [
            _check(11, "near_profile_decreasing", np.max(np.diff(main)), 0.0, np.all(np.diff(main) < 0)),
            _check(11, "amplitude_exponent", main[-1], alt[-1], main[-1] < alt[-1],
                   "exponent (m+1)/(2m^2) against 2/(m+1)"),
        ]

    def criterion(self, k: int) -> list[Check]:
        if k >= 5:
            self._runs  # shared runs are timed separately through their wall_time
        tic = time.perf_counter()
        checks = getattr(self, f"criterion_{k}")()
        elapsed = time.perf_counter() - tic
        if k == 5:
            elapsed += self.run("dipole").wall_time + self.run("dipole_fine").wall_time
        elif k == 6:
            elapsed += self.run("barenblatt").wall_time
        elif k == 7:
            elapsed += self.run("box").wall_time
        self.timings[k] = elapsed
        return checks

    def run_all(self) -> list[Check]:
        return [c for k in range(1, 12) for c in self.criterion(k)]


def report(checks: list[Check], timings: dict | None = None) -> dict:
    out = {"passed": all(c.passed for c in checks), "checks": [asdict(c) for c in checks]}
    if timings is not None:
        out["seconds"] = {str(k): v for k, v in sorted(timings.items())}
    return out

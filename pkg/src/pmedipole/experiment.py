from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from pmedipole.asymptotics import (
    ErrorSeries,
    SandwichReport,
    barrier_sandwich_check,
    near_field_profile_error,
    retention_check,
)
from pmedipole.barriers import Region, make_pair, region_params
from pmedipole.config import ExperimentConfig
from pmedipole.errors import PMEError
from pmedipole.exact_solutions import DipoleProfile, build_profile
from pmedipole.solver import Grid1D, SolverState, init_state, observables, run_to, write_snapshot

log = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    profile: DipoleProfile
    initial: SolverState
    states: list[SolverState] = field(default_factory=list)
    series: ErrorSeries = field(default_factory=ErrorSeries)
    near_profile: list[float] = field(default_factory=list)
    # same, with the alternative moment exponent 2/(m+1)
    near_profile_alt: list[float] = field(default_factory=list)
    wall_time: float = 0.0
    error: str | None = None

    @property
    def final(self) -> SolverState:
        return self.states[-1] if self.states else self.initial

    def retention(self) -> float:
        return retention_check(self.states, self.config.m)

    def sandwich(self, slack: float | None = None) -> SandwichReport:
        s = self.config.sandwich
        p = self.profile
        delta_bar, T_bar = region_params(p)
        T = s.T if s.T is not None else T_bar
        upper, lower = make_pair(p, T=T, a=s.a, k0=s.k0, c0=s.c0)
        region = Region(delta=s.delta_fraction * delta_bar, T=T, beta=p.exponents.beta)
        states = [st for st in self.states if st.t >= s.start_factor * T]
        return barrier_sandwich_check(
            states, upper, lower, region, s.eps, s.slack if slack is None else slack
        )

    def summary(self) -> dict:
        o0 = observables(self.initial)
        o1 = observables(self.final)
        out = {
            "m": self.config.m,
            "M": self.profile.M,
            "dx": self.initial.grid.dx,
            "n": self.initial.grid.n,
            "L": self.initial.grid.L,
            "t0": self.initial.t,
            "t_final": self.final.t,
            "steps": self.final.steps,
            "min_dt": self.final.min_dt if math.isfinite(self.final.min_dt) else None,
            "wall_time": self.wall_time,
            "initial_mass": o0.mass,
            "initial_moment": o0.moment,
            "final_mass": o1.mass,
            "final_moment": o1.moment,
            "moment_drift": (o1.moment - o0.moment) / o0.moment if o0.moment else 0.0,
            "checkpoints": list(self.series.t),
            "near_field_profile_error": self.near_profile,
            "near_field_profile_error_alt": self.near_profile_alt,
            "error": self.error,
        }
        if len(self.states) >= 2:
            out["retention_worst"] = self.retention()
        try:
            out["sandwich"] = self.sandwich().as_dict()
        except PMEError as exc:
            out["sandwich"] = {"error": str(exc)}
        return out


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> ExperimentResult:
    """Run the solver through every checkpoint, collecting the error series.

    With ``out_dir`` each checkpoint snapshot and the series are written as
    soon as they are computed, so a failing run keeps its partial output.
    """
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    m = cfg.m
    data = cfg.initial_data
    solver_cfg = cfg.solver_config()
    grid = Grid1D.covering(solver_cfg.domain_length(data), cfg.dx)
    state = init_state(grid, data, cfg.start_time, m=m)
    profile = build_profile(m, data.moment(m))
    res = ExperimentResult(cfg, profile, state)
    K = min(cfg.near_field_K, grid.L)
    alt = 2.0 / (m + 1.0)

    tic = time.perf_counter()
    try:
        for j, t in enumerate(cfg.checkpoint_times):
            state = run_to(state, solver_cfg, t)
            res.states.append(state)
            res.series.append(state, profile)
            res.near_profile.append(near_field_profile_error(state, profile, K))
            res.near_profile_alt.append(near_field_profile_error(state, profile, K, alt))
            log.info("t=%g steps=%d e_far=%.3e e_near=%.3e", t, state.steps, res.series.e_far[-1], res.series.e_near[-1])
            if out is not None:
                write_snapshot(state, out / f"snapshot_{j:03d}.csv", m)
                res.series.to_csv(out / "series.csv")
    except PMEError as exc:
        res.error = str(exc)
        raise
    finally:
        res.wall_time = time.perf_counter() - tic
        if out is not None:
            (out / "summary.json").write_text(json.dumps(res.summary(), indent=2))
    return res


def max_threads() -> int:
    try:
        n = int(os.environ.get("PME_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def run_sweep(configs, out_dirs=None) -> list[ExperimentResult]:
    """Run independent experiments, at most PME_THREADS at a time."""
    configs = list(configs)
    dirs = list(out_dirs) if out_dirs is not None else [None] * len(configs)
    with ThreadPoolExecutor(max_workers=min(max_threads(), len(configs) or 1)) as pool:
        return list(pool.map(run_experiment, configs, dirs))

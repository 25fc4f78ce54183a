"""
Explicit finite differences for u_t = (u^m)_xx on the half-line, u(0, t) = 0.

The update on a uniform grid x_i = i dx is

    u_i <- u_i + dt/dx^2 (w_{i+1} - 2 w_i + w_{i-1}),   w = u^m,

with dt = sigma dx^2 / (2 m max(u)^{m-1}).  Under this restriction the map is
monotone and positivity preserving, and because x_0 = 0 the discrete first
moment sum(x_i u_i dx) is conserved exactly while the support stays off the
far end of the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numba
import numpy as np

from pmedipole.errors import (
    ConfigError,
    DomainError,
    InvalidParameter,
    NumericError,
    ResizeError,
    StepLimitError,
)
from pmedipole.exact_solutions import BarenblattSolution, build_profile, similarity_exponents


@dataclass(frozen=True)
class Grid1D:
    dx: float
    n: int

    def __post_init__(self):
        if not self.dx > 0.0:
            raise InvalidParameter(f"dx must be positive, got {self.dx!r}")
        if self.n < 3:
            raise InvalidParameter(f"grid needs at least 3 nodes, got {self.n}")

    @classmethod
    def covering(cls, L: float, dx: float) -> "Grid1D":
        return cls(dx, int(math.ceil(L / dx - 1e-9)) + 1)

    @property
    def L(self) -> float:
        return (self.n - 1) * self.dx

    @property
    def x(self) -> np.ndarray:
        return self.dx * np.arange(self.n)


@dataclass(frozen=True)
class InitialData:
    """Nonnegative compactly supported initial profile.

    ``kind`` is one of box, hat, samples, dipole, barenblatt; ``params``
    holds the keyword arguments of the matching constructor.
    """

    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def box(cls, h: float, x1: float, x2: float) -> "InitialData":
        if not (h >= 0 and 0 <= x1 < x2):
            raise InvalidParameter(f"box needs h >= 0 and 0 <= x1 < x2, got {h}, [{x1}, {x2}]")
        return cls("box", {"h": h, "x1": x1, "x2": x2})

    @classmethod
    def hat(cls, peak: float, x1: float, x2: float) -> "InitialData":
        if not (peak >= 0 and 0 <= x1 < x2):
            raise InvalidParameter(f"hat needs peak >= 0 and 0 <= x1 < x2, got {peak}, [{x1}, {x2}]")
        return cls("hat", {"peak": peak, "x1": x1, "x2": x2})

    @classmethod
    def samples(cls, x, u) -> "InitialData":
        x = [float(v) for v in x]
        u = [float(v) for v in u]
        if len(x) != len(u) or len(x) < 2:
            raise InvalidParameter("samples need matching x and u lists of length >= 2")
        if any(b <= a for a, b in zip(x, x[1:])) or x[0] < 0:
            raise InvalidParameter("sample abscissae must be nonnegative and increasing")
        if any(v < 0 or not math.isfinite(v) for v in u):
            raise InvalidParameter("initial data must be nonnegative")
        return cls("samples", {"x": x, "u": u})

    @classmethod
    def dipole(cls, M: float, t0: float) -> "InitialData":
        if not (M > 0 and t0 > 0):
            raise InvalidParameter("dipole data needs M > 0 and t0 > 0")
        return cls("dipole", {"M": M, "t0": t0})

    @classmethod
    def barenblatt(cls, C: float, x0: float, t0: float) -> "InitialData":
        if not (C > 0 and t0 > 0):
            raise InvalidParameter("Barenblatt data needs C > 0 and t0 > 0")
        return cls("barenblatt", {"C": C, "x0": x0, "t0": t0})

    def support(self, m: float) -> tuple[float, float]:
        p = self.params
        if self.kind in ("box", "hat"):
            return p["x1"], p["x2"]
        if self.kind == "samples":
            xs = [x for x, u in zip(p["x"], p["u"]) if u > 0]
            return (xs[0], xs[-1]) if xs else (0.0, 0.0)
        if self.kind == "dipole":
            prof = build_profile(m, p["M"])
            return 0.0, prof.xi_M * p["t0"] ** similarity_exponents(m).beta
        w = BarenblattSolution(m, p["C"], p["x0"]).half_width(p["t0"])
        return p["x0"] - w, p["x0"] + w

    def moment(self, m: float) -> float:
        """Exact first moment int x u_0(x) dx of the continuous data."""
        p = self.params
        if self.kind == "box":
            return p["h"] * (p["x2"] ** 2 - p["x1"] ** 2) / 2.0
        if self.kind == "hat":
            # triangle: area times centroid
            return p["peak"] * (p["x2"] - p["x1"]) / 2.0 * (p["x1"] + p["x2"]) / 2.0
        if self.kind == "samples":
            x = np.asarray(p["x"])
            return float(np.trapezoid(x * np.asarray(p["u"]), x))
        if self.kind == "dipole":
            return p["M"]
        b = BarenblattSolution(m, p["C"], p["x0"])
        return p["x0"] * b.mass(p["t0"])

    @property
    def t0(self) -> float | None:
        return self.params.get("t0")

    def sample(self, grid: Grid1D, m: float) -> np.ndarray:
        p = self.params
        x = grid.x
        if self.kind == "box":
            # cell averages over [x_i - dx/2, x_i + dx/2]
            lo = np.maximum(x - grid.dx / 2, p["x1"])
            hi = np.minimum(x + grid.dx / 2, p["x2"])
            return p["h"] * np.clip(hi - lo, 0.0, None) / grid.dx
        if self.kind == "hat":
            mid = 0.5 * (p["x1"] + p["x2"])
            half = 0.5 * (p["x2"] - p["x1"])
            return p["peak"] * np.clip(1.0 - np.abs(x - mid) / half, 0.0, None)
        if self.kind == "samples":
            return np.interp(x, p["x"], p["u"], left=0.0, right=0.0)
        if self.kind == "dipole":
            return build_profile(m, p["M"]).D(x, p["t0"])
        return BarenblattSolution(m, p["C"], p["x0"])(x, p["t0"])


@dataclass(frozen=True)
class SolverConfig:
    m: float
    cfl_safety: float = 0.9
    t_end: float = 1.0
    max_steps: int = 50_000_000
    # None selects L = margin * xi_M * t_end^beta
    L: float | None = None
    margin: float = 1.5
    debug: bool = False

    def __post_init__(self):
        if not self.m > 1.0:
            raise ConfigError("m must exceed 1")
        if not 0.0 < self.cfl_safety < 1.0:
            raise ConfigError(f"cfl_safety must lie in (0, 1), got {self.cfl_safety!r}")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be positive")
        if self.L is not None and not self.L > 0:
            raise ConfigError("L must be positive")

    def domain_length(self, data: InitialData) -> float:
        if self.L is not None:
            return self.L
        M = data.moment(self.m)
        prof = build_profile(self.m, M)
        L = self.margin * prof.xi_M * self.t_end ** similarity_exponents(self.m).beta
        return max(L, self.margin * data.support(self.m)[1])


@dataclass
class SolverState:
    grid: Grid1D
    t: float
    u: np.ndarray
    steps: int = 0
    min_dt: float = math.inf

    def copy(self) -> "SolverState":
        return replace(self, u=self.u.copy())


class Observables(NamedTuple):
    mass: float
    moment: float
    front: float
    umax: float


def init_state(grid: Grid1D, data: InitialData, t0: float = 0.0, *, m: float) -> SolverState:
    if t0 < 0:
        raise InvalidParameter("t0 must be nonnegative")
    u = np.asarray(data.sample(grid, m), dtype=float).copy()
    if np.any(u < 0) or not np.all(np.isfinite(u)):
        raise InvalidParameter("initial data must be finite and nonnegative")
    u[0] = 0.0
    if u[-1] != 0.0 or u[-2] != 0.0:
        raise ConfigError(
            f"initial support reaches the far end of the grid (L={grid.L}); enlarge the domain"
        )
    return SolverState(grid, float(t0), u)


# kernel status codes
_OK, _MAX_STEPS, _RESIZE, _NEGATIVE, _UNDERFLOW = 0, 1, 2, 3, 4


@numba.njit(cache=True, nogil=True)
def _advance(u, t, t_target, dx, m, sigma, max_steps, check):
    n = u.shape[0]
    hi = 0
    for i in range(n):
        if u[i] > 0.0:
            hi = i
    w = np.empty(n)
    # integer exponents use repeated products instead of pow
    k = int(m) if m == int(m) and m <= 8 else 0
    steps = 0
    min_dt = np.inf
    while t < t_target:
        if steps >= max_steps:
            return t, steps, min_dt, _MAX_STEPS
        umax = 0.0
        for i in range(1, hi + 1):
            if u[i] > umax:
                umax = u[i]
        if umax == 0.0:
            return t_target, steps, min_dt, _OK
        dt = sigma * dx * dx / (2.0 * m * umax ** (m - 1.0))
        if t > 0.0 and dt > 0.1 * t:
            dt = 0.1 * t
        if dt < min_dt:
            min_dt = dt
        last = t + dt >= t_target
        if last:
            dt = t_target - t
        elif t + dt == t:
            return t, steps, min_dt, _UNDERFLOW
        r = dt / (dx * dx)
        top = hi + 1
        if k > 0:
            for i in range(0, top + 2):
                v = u[i]
                wi = v
                for _ in range(k - 1):
                    wi *= v
                w[i] = wi
        else:
            for i in range(0, top + 2):
                w[i] = u[i] ** m
        for i in range(1, top + 1):
            u[i] += r * (w[i + 1] - 2.0 * w[i] + w[i - 1])
        if u[top] > 0.0:
            hi = top
        t = t_target if last else t + dt
        steps += 1
        if u[n - 2] > 0.0:
            return t, steps, min_dt, _RESIZE
        if check:
            for i in range(1, top + 1):
                if u[i] < 0.0:
                    return t, steps, min_dt, _NEGATIVE
    return t, steps, min_dt, _OK


def _run(state: SolverState, cfg: SolverConfig, t_target: float, max_steps: int) -> tuple[SolverState, int]:
    if state.u[-2] != 0.0:
        raise ResizeError("support already touches the sentinel nodes", state)
    u = state.u.copy()
    t, steps, min_dt, status = _advance(
        u, float(state.t), float(t_target), state.grid.dx, float(cfg.m),
        float(cfg.cfl_safety), int(max_steps), bool(cfg.debug),
    )
    new = SolverState(state.grid, t, u, state.steps + steps, min(state.min_dt, min_dt))
    if status == _RESIZE:
        raise ResizeError(
            f"support reached the far end of the grid at t={t:.6g} (L={state.grid.L}); enlarge the domain",
            new,
        )
    if status == _NEGATIVE:
        raise NumericError(f"negative value produced at t={t:.6g}")
    if status == _UNDERFLOW:
        raise NumericError(f"time step underflow at t={t:.6g}; max u = {u.max():.6g}")
    return new, status


def step(state: SolverState, cfg: SolverConfig, t_cap: float = math.inf) -> SolverState:
    """One explicit step, shortened if needed so that t does not pass t_cap."""
    if t_cap <= state.t:
        return state.copy()
    if not np.any(state.u > 0) and not math.isfinite(t_cap):
        return state.copy()
    new, _ = _run(state, cfg, t_cap, 1)
    return new


def run_to(state: SolverState, cfg: SolverConfig, t_target: float) -> SolverState:
    """Step repeatedly, landing exactly on t_target."""
    if t_target < state.t:
        raise DomainError(f"t_target={t_target} precedes the state time {state.t}")
    if t_target == state.t:
        return state.copy()
    budget = cfg.max_steps - state.steps
    if budget <= 0:
        raise StepLimitError(f"step budget of {cfg.max_steps} exhausted", state)
    new, status = _run(state, cfg, t_target, budget)
    if status == _MAX_STEPS:
        raise StepLimitError(
            f"max_steps={cfg.max_steps} reached at t={new.t:.6g} before t={t_target}", new
        )
    return new


def observables(state: SolverState) -> Observables:
    u = state.u
    dx = state.grid.dx
    x = state.grid.x
    pos = np.flatnonzero(u > 0)
    front = float(x[pos[-1]]) if pos.size else 0.0
    return Observables(
        mass=math.fsum(u) * dx,
        moment=math.fsum(x * u) * dx,
        front=front,
        umax=float(u.max()) if u.size else 0.0,
    )


def interpolate(state: SolverState, x):
    L = state.grid.L
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(xa > L):
        raise DomainError(f"x must lie in [0, {L}]")
    out = np.interp(xa, state.grid.x, state.u)
    return out if np.ndim(out) else float(out)


def write_snapshot(state: SolverState, path: str | Path, m: float) -> Path:
    path = Path(path)
    obs = observables(state)
    with path.open("w") as fh:
        fh.write(f"# t={state.t:.17g}\n# m={m:.17g}\n# dx={state.grid.dx:.17g}\n")
        fh.write(f"# mass={obs.mass:.17g}\n# moment={obs.moment:.17g}\n")
        fh.write("x,u\n")
        for xi, ui in zip(state.grid.x, state.u):
            fh.write(f"{xi:.17g},{ui:.17g}\n")
    return path


def read_snapshot(path: str | Path) -> tuple[SolverState, dict]:
    """Inverse of write_snapshot; returns the state and the header fields."""
    header = {}
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                header[key.strip()] = float(val)
            elif line[0].isalpha():
                continue
            else:
                rows.append(line.split(","))
    data = np.array(rows, dtype=float)
    grid = Grid1D(header["dx"], len(data))
    return SolverState(grid, header["t"], data[:, 1].copy()), header

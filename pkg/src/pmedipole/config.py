"""JSON experiment configuration: parsing, validation, defaults, serialisation."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from pmedipole.errors import ConfigError, InvalidParameter
from pmedipole.solver import InitialData, SolverConfig

INITIAL_KINDS = {
    "box": ("h", "x1", "x2"),
    "hat": ("peak", "x1", "x2"),
    "samples": ("x", "u"),
    "dipole": ("M", "t0"),
    "barenblatt": ("C", "x0", "t0"),
}


@dataclass(frozen=True)
class Checkpoints:
    ratio: float = 4.0
    # None means 10 * t0, or 10 when the data start at t0 = 0
    first: float | None = None
    count: int | None = None

    def times(self, t0: float, t_end: float) -> list[float]:
        first = self.first if self.first is not None else (10.0 * t0 if t0 > 0 else 10.0)
        out = []
        t = first
        while t <= t_end * (1 + 1e-12) and (self.count is None or len(out) < self.count):
            if t > t0:
                out.append(min(t, t_end))
            t *= self.ratio
        if self.count is None and (not out or out[-1] < t_end):
            out.append(t_end)
        return out


@dataclass(frozen=True)
class Sandwich:
    delta_fraction: float = 0.5
    eps: float = 0.1
    a: float = 0.01
    k0: float = 2.0
    c0: float = 0.5
    # barrier start time; None means T_bar
    T: float | None = None
    # checks run at checkpoints t >= start_factor * T
    start_factor: float = 4.0
    # allowed violation, in units of t^alpha u
    slack: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    m: float
    initial: dict
    t_end: float
    dx: float = 0.01
    cfl_safety: float = 0.9
    t0: float | None = None
    L: float | None = None
    margin: float = 1.5
    max_steps: int = 50_000_000
    checkpoints: Checkpoints = field(default_factory=Checkpoints)
    sandwich: Sandwich = field(default_factory=Sandwich)
    near_field_K: float = 1.0
    output: str | None = None

    @property
    def initial_data(self) -> InitialData:
        (kind, params), = self.initial.items()
        return getattr(InitialData, kind)(**params)

    @property
    def start_time(self) -> float:
        if self.t0 is not None:
            return self.t0
        return self.initial_data.t0 or 0.0

    @property
    def checkpoint_times(self) -> list[float]:
        return self.checkpoints.times(self.start_time, self.t_end)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            m=self.m, cfl_safety=self.cfl_safety, t_end=self.t_end,
            max_steps=self.max_steps, L=self.L, margin=self.margin,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _number(d: dict, key: str, where: str, *, integer: bool = False):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}{key} must be a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{where}{key} must be finite")
    if integer:
        if int(v) != v:
            raise ConfigError(f"{where}{key} must be an integer, got {v!r}")
        return int(v)
    return float(v)


def _reject_unknown(d: dict, allowed, where: str) -> None:
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where or 'config'}: {', '.join(extra)}")


def _section(d: dict, cls, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    names = [f for f in cls.__dataclass_fields__]
    _reject_unknown(d, names, where)
    kwargs = {}
    for k, v in d.items():
        if v is None:
            kwargs[k] = None
        else:
            kwargs[k] = _number(d, k, f"{where}.", integer=(k == "count"))
    return cls(**kwargs)


def _initial(d) -> dict:
    if not isinstance(d, dict) or len(d) != 1:
        raise ConfigError("initial must be an object with exactly one of: " + ", ".join(INITIAL_KINDS))
    (kind, params), = d.items()
    if kind not in INITIAL_KINDS:
        raise ConfigError(f"initial: unknown kind {kind!r}; expected one of {', '.join(INITIAL_KINDS)}")
    if not isinstance(params, dict):
        raise ConfigError(f"initial.{kind} must be an object")
    _reject_unknown(params, INITIAL_KINDS[kind], f"initial.{kind}")
    missing = [k for k in INITIAL_KINDS[kind] if k not in params]
    if missing:
        raise ConfigError(f"initial.{kind} is missing {', '.join(missing)}")
    if kind == "samples":
        clean = {k: [float(v) for v in params[k]] for k in ("x", "u")}
    else:
        clean = {k: _number(params, k, f"initial.{kind}.") for k in INITIAL_KINDS[kind]}
    try:
        getattr(InitialData, kind)(**clean)
    except InvalidParameter as exc:
        raise ConfigError(f"initial.{kind}: {exc}") from exc
    return {kind: clean}


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    allowed = ExperimentConfig.__dataclass_fields__
    _reject_unknown(raw, allowed, "")
    for key in ("m", "initial", "t_end"):
        if key not in raw:
            raise ConfigError(f"missing required field {key!r}")

    kw: dict = {}
    kw["m"] = _number(raw, "m", "")
    if not kw["m"] > 1:
        raise ConfigError("m must exceed 1")
    kw["initial"] = _initial(raw["initial"])
    for key in ("t_end", "dx", "cfl_safety", "margin", "near_field_K"):
        if key in raw:
            kw[key] = _number(raw, key, "")
    for key in ("t0", "L"):
        if raw.get(key) is not None:
            kw[key] = _number(raw, key, "")
    if "max_steps" in raw:
        kw["max_steps"] = _number(raw, "max_steps", "", integer=True)
    if raw.get("output") is not None:
        if not isinstance(raw["output"], str):
            raise ConfigError("output must be a string path")
        kw["output"] = raw["output"]
    if "checkpoints" in raw:
        kw["checkpoints"] = _section(raw["checkpoints"], Checkpoints, "checkpoints")
    if "sandwich" in raw:
        kw["sandwich"] = _section(raw["sandwich"], Sandwich, "sandwich")

    cfg = ExperimentConfig(**kw)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if not 0.0 < cfg.cfl_safety < 1.0:
        raise ConfigError(f"cfl_safety must lie in (0, 1), got {cfg.cfl_safety}")
    if not cfg.dx > 0:
        raise ConfigError("dx must be positive")
    if cfg.t0 is not None and cfg.t0 < 0:
        raise ConfigError("t0 must be nonnegative")
    if not cfg.t_end > cfg.start_time:
        raise ConfigError(f"t_end must exceed the start time {cfg.start_time}")
    if cfg.L is not None and not cfg.L > 0:
        raise ConfigError("L must be positive")
    if not cfg.margin > 1.0:
        raise ConfigError("margin must exceed 1")
    if cfg.max_steps < 1:
        raise ConfigError("max_steps must be positive")
    if not cfg.near_field_K > 0:
        raise ConfigError("near_field_K must be positive")
    c = cfg.checkpoints
    if not c.ratio > 1:
        raise ConfigError("checkpoints.ratio must exceed 1")
    if c.first is not None and not c.first > 0:
        raise ConfigError("checkpoints.first must be positive")
    if c.count is not None and c.count < 1:
        raise ConfigError("checkpoints.count must be positive")
    s = cfg.sandwich
    if not 0 < s.delta_fraction < 1:
        raise ConfigError("sandwich.delta_fraction must lie in (0, 1)")
    if not s.eps > 0:
        raise ConfigError("sandwich.eps must be positive")
    if not 0 < s.a < 1:
        raise ConfigError("sandwich.a must lie in (0, 1)")
    if not s.k0 > 1:
        raise ConfigError("sandwich.k0 must exceed 1")
    if not 0 < s.c0 < 1:
        raise ConfigError("sandwich.c0 must lie in (0, 1)")
    if s.T is not None and not s.T > 0:
        raise ConfigError("sandwich.T must be positive")
    if not s.start_factor >= 1:
        raise ConfigError("sandwich.start_factor must be at least 1")
    if not s.slack >= 0:
        raise ConfigError("sandwich.slack must be nonnegative")

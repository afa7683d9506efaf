"""Scenario configuration (flat ``key = value`` files) and run manifests.

Example::

    # ten banks, y = 1
    n = 10
    steps = 500
    maturity = 30
    risky_asset = uniform(0.5, 2.5)
    base_rate = uniform(0, 0.08)
    policies = notax, tobin, srt

Every key can be overridden from the environment as ``SRTLAB_<KEY>``
(e.g. ``SRTLAB_SEED=7``); explicit command-line overrides win over both.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .contracts import BeliefMode

ENV_PREFIX = "SRTLAB_"
POLICIES = ("notax", "tobin", "srt")

_UNIFORM = re.compile(r"^uniform\(\s*([^,]+?)\s*,\s*([^)]+?)\s*\)$")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise ConfigError(f"bad bounds uniform({self.lo}, {self.hi})")

    def __str__(self):
        return f"uniform({self.lo!r}, {self.hi!r})"

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size)


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 10
    steps: int = 500
    maturity: int = 30
    loan_size: float = 1.0
    shock_prob: float = 1.0
    external_liability: float = 0.5
    risky_asset: Uniform = Uniform(0.5, 2.5)
    base_rate: Uniform = Uniform(0.0, 0.08)
    hazard_rate: Uniform = Uniform(0.0, 0.0009)
    reservation_rate: float = 0.09
    policies: tuple[str, ...] = POLICIES
    kappa: float = 0.03
    belief: BeliefMode = BeliefMode.NAIVE
    common_prior_q: float = 0.0
    epsilon: float = 1e-6
    zeta: float | None = None          # None: scaled from the market each period
    seed: int = 0
    stats_bins: int = 20

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if self.steps < 1:
            raise ConfigError("steps must be at least 1")
        if self.maturity < 1:
            raise ConfigError("maturity must be at least 1")
        if not 0.0 <= self.shock_prob <= 1.0:
            raise ConfigError("shock_prob must lie in [0, 1]")
        if not 0.0 <= self.common_prior_q <= 1.0:
            raise ConfigError("common_prior_q must lie in [0, 1]")
        if self.hazard_rate.lo < 0:
            raise ConfigError("hazard rates must be nonnegative")
        for name in ("loan_size", "external_liability", "reservation_rate", "kappa",
                     "epsilon"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigError(f"{name} must be finite")
        if self.loan_size <= 0 or self.epsilon <= 0:
            raise ConfigError("loan_size and epsilon must be positive")
        if self.kappa < 0:
            raise ConfigError("kappa must be nonnegative")
        if self.zeta is not None and (not math.isfinite(self.zeta) or self.zeta < 0):
            raise ConfigError("zeta must be a nonnegative number or 'auto'")
        if self.stats_bins < 1:
            raise ConfigError("stats_bins must be at least 1")
        bad = [p for p in self.policies if p not in POLICIES]
        if bad or not self.policies:
            raise ConfigError(f"unknown policies {bad}; choose from {POLICIES}")

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)

    def render(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {_render_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {f.name: _render_value(getattr(self, f.name))
                for f in dataclasses.fields(self)}


def _render_value(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, BeliefMode):
        return v.value
    if isinstance(v, tuple):
        return ", ".join(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def _coerce(key: str, text: str):
    text = text.strip()
    kind = _FIELDS[key].type
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "float | None":
            return None if text.lower() in ("auto", "none", "") else float(text)
        if kind == "Uniform":
            m = _UNIFORM.match(text)
            if not m:
                raise ConfigError(f"{key}: expected uniform(lo, hi), got {text!r}")
            return Uniform(float(m.group(1)), float(m.group(2)))
        if kind == "BeliefMode":
            return BeliefMode(text.lower())
        if kind == "tuple[str, ...]":
            parts = [p.strip().lower() for p in text.split(",") if p.strip()]
            if parts == ["all"]:
                return POLICIES
            return tuple(parts)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} ({exc})") from None
    raise ConfigError(f"{key}: unsupported field type {kind}")


def parse_config(text: str, source: str = "<string>") -> dict:
    """Parse ``key = value`` lines into a dict of typed values."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    return values


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for key in _FIELDS:
        name = ENV_PREFIX + key.upper()
        if name in environ:
            out[key] = _coerce(key, environ[name])
    return out


def load_config(path=None, overrides: dict | None = None, environ=None) -> ScenarioConfig:
    values = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        values.update(parse_config(p.read_text(), str(p)))
    values.update(env_overrides(environ))
    for key, v in (overrides or {}).items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _coerce(key, v) if isinstance(v, str) else v
    try:
        return ScenarioConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class RunManifest:
    config_path: str | None
    config: ScenarioConfig
    output_dir: str
    tool_version: str
    seed: int
    timestamp: str
    outputs: tuple[str, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    def render(self) -> str:
        doc = {
            "config_path": self.config_path,
            "config": self.config.to_dict(),
            "output_dir": self.output_dir,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "timestamp": self.timestamp,
            "outputs": list(self.outputs),
            "diagnostics": self.diagnostics,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def parse(cls, text: str) -> RunManifest:
        doc = json.loads(text)
        cfg = {k: _coerce(k, v) for k, v in doc["config"].items()}
        return cls(doc["config_path"], ScenarioConfig(**cfg), doc["output_dir"],
                   doc["tool_version"], int(doc["seed"]), doc["timestamp"],
                   tuple(doc.get("outputs", ())), doc.get("diagnostics", {}))

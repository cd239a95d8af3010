"""Experiment configuration: flat ``key = value`` files merged with CLI overrides.

Precedence, lowest first: built-in defaults, the config file, command-line
flags.  Lists are comma separated.  Lines starting with ``#`` are comments.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from garchboot.core import GarchSpec, InnovationDistribution
from garchboot.qmle import FitConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_key_values"]


class ConfigError(ValueError):
    pass


def parse_key_values(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.split("#", 1)[0].strip()
    return out


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(float(v)) for v in s.split(",") if v.strip())


def _strs(s: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in s.split(",") if v.strip())


def _int(s: str) -> int:
    # accepts 1e6 style counts
    v = float(s)
    if v != int(v):
        raise ValueError(f"not an integer: {s}")
    return int(v)


def _bool(s: str) -> bool:
    s = s.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s}")


_PARSERS = {
    "omega": float,
    "alpha": _floats,
    "beta": _floats,
    "dist": str,
    "n": _int,
    "n_grid": _ints,
    "r": _int,
    "b": _int,
    "big_n": _int,
    "burn_in": _int,
    "scheme": str,
    "methods": _strs,
    "dists": _strs,
    "levels": _floats,
    "ci_level": float,
    "ci_method": str,
    "kappa_mode": str,
    "omega_grid": _floats,
    "alpha_grid": _floats,
    "master_seed": _int,
    "threads": _int,
    "output_dir": str,
    "plots": _bool,
}
# "n" is the sample size and "N" the simulation length for J, so "N" is matched case-sensitively
_KEY_ALIASES = {"N": "big_n", "seed": "master_seed", "out": "output_dir", "reps": "r", "j_n": "big_n"}
_FIT_KEYS = {f.name for f in fields(FitConfig)} - {"p", "q"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment needs; the truth is ``GarchSpec(omega, alpha, beta)``."""

    omega: float = 1.0
    alpha: tuple[float, ...] = (0.5,)
    beta: tuple[float, ...] = ()
    dist: str = "gaussian"
    n: int = 1000
    n_grid: tuple[int, ...] | None = None
    R: int = 1000
    B: int = 100
    N: int = 1_000_000
    burn_in: int = 1000
    scheme: str = "multinomial"
    methods: tuple[str, ...] | None = None
    dists: tuple[str, ...] = ("gaussian", "t5", "t3")
    levels: tuple[float, ...] = (0.95, 0.99)
    ci_level: float = 0.95
    ci_method: str = "percentile"
    kappa_mode: str = "oracle"
    omega_grid: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0)
    alpha_grid: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7)
    master_seed: int = 0
    threads: int = 1
    output_dir: str = "out"
    plots: bool = True
    fit_options: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        for name in ("n", "R", "N"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.B < 1:
            raise ConfigError("B must be positive")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be nonnegative")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.kappa_mode not in ("oracle", "data"):
            raise ConfigError("kappa_mode must be 'oracle' or 'data'")
        if self.ci_method not in ("percentile", "basic"):
            raise ConfigError("ci_method must be 'percentile' or 'basic'")
        try:
            self.spec
            self.innovations
            self.fit
        except ValueError as err:
            raise ConfigError(str(err)) from err

    @property
    def spec(self) -> GarchSpec:
        return GarchSpec(self.omega, self.alpha, self.beta)

    @property
    def innovations(self) -> InnovationDistribution:
        return InnovationDistribution.parse(self.dist)

    @property
    def fit(self) -> FitConfig:
        return FitConfig.from_mapping({**self.fit_options, "p": len(self.beta), "q": len(self.alpha)})

    def echo(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "fit_options"}
        out["fit"] = {f.name: getattr(self.fit, f.name) for f in fields(FitConfig)}
        return out

    def with_values(self, values: dict[str, str]) -> ExperimentConfig:
        """Apply string overrides, as read from a config file or the command line."""
        updates = {}
        fit_options = dict(self.fit_options)
        for key, raw in values.items():
            key = _KEY_ALIASES.get(key) or _KEY_ALIASES.get(key.lower(), key.lower())
            if key in _FIT_KEYS:
                fit_options[key] = raw
                continue
            if key not in _PARSERS:
                raise ConfigError(f"unknown configuration key {key!r}")
            try:
                value = _PARSERS[key](raw)
            except ValueError as err:
                raise ConfigError(f"bad value for {key}: {raw!r}") from err
            name = {"r": "R", "b": "B", "big_n": "N"}.get(key, key)
            updates[name] = value
        try:
            FitConfig.from_mapping(fit_options)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"bad optimizer setting: {err}") from err
        return replace(self, fit_options=fit_options, **updates)


def load_config(path: str | Path | None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config file {path}: {err}") from err
        cfg = cfg.with_values(parse_key_values(text))
    if overrides:
        cfg = cfg.with_values(overrides)
    return cfg

"""Experiment configuration: presets, config files and the header echo."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields

EXPERIMENTS = ("fig2a", "fig2b", "fig2c", "check-theory", "train", "gen-data")
INITS = ("warm", "random", "both")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to rerun an experiment.

    ``d`` and ``N`` are tuples so grid experiments and single runs share one type.
    ``warm_radius`` is measured in units of the teacher's smallest singular value.
    ``nu`` is the noise standard deviation.  ``N`` empty means "use ``ratios`` * d".
    """

    experiment: str
    d: tuple = (10,)
    K: int = 5
    N: tuple = ()
    ratios: tuple = ()
    eta: float = 0.5
    T: int = 1000
    grad_tol: float = 0.0
    nu: float = 0.0
    init: str = "warm"
    warm_radius: float = 0.2
    sigma_min: float = 1.0
    sigma_max: float = 2.0
    trials: int = 1
    master_seed: int = 0
    out_path: str = ""
    record_every: int = 1

    def __post_init__(self):
        for name, conv in (("d", int), ("N", int), ("ratios", float)):
            object.__setattr__(self, name, tuple(conv(v) for v in getattr(self, name)))
        for name in ("eta", "grad_tol", "nu", "warm_radius", "sigma_min", "sigma_max"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}, got {self.init!r}")
        if not self.d or any(x < 1 for x in self.d):
            raise ConfigError("d must list positive integers")
        if self.K < 2 or any(self.K > x for x in self.d):
            raise ConfigError("need 2 <= K <= d")
        if any(n < 1 for n in self.N) or any(r <= 0 for r in self.ratios):
            raise ConfigError("sample sizes and ratios must be positive")
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ConfigError("eta must be positive")
        if self.T < 1 or self.trials < 1 or self.record_every < 1:
            raise ConfigError("T, trials and record_every must be at least 1")
        if self.nu < 0 or self.warm_radius <= 0 or self.grad_tol < 0:
            raise ConfigError("nu, grad_tol must be >= 0 and warm_radius > 0")
        if not 0 < self.sigma_min <= self.sigma_max:
            raise ConfigError("need 0 < sigma_min <= sigma_max")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def sample_sizes(self, d: int) -> list:
        if self.N:
            return list(self.N)
        return [int(round(r * d)) for r in self.ratios]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_GRID = (2, 4, 6, 8, 10, 15, 20, 30, 50)

PRESETS = {
    "fig2a": dict(d=(10,), K=5, N=(5000,), eta=0.5, T=1000, nu=0.0, init="both", trials=1),
    "fig2b": dict(d=(20, 50, 100), K=5, ratios=_GRID, eta=0.5, T=3000, grad_tol=1e-10,
                  nu=0.0, init="random", trials=10),
    "fig2c": dict(d=(10, 25, 50), K=5, ratios=(20, 40, 80, 160, 320), eta=0.5, T=1000,
                  nu=math.sqrt(0.1), init="warm", trials=10),
    "check-theory": dict(d=(10,), K=5, N=(100_000,), nu=math.sqrt(0.1), warm_radius=0.1,
                         trials=20),
    "train": dict(d=(10,), K=5, N=(5000,), eta=0.5, T=1000, init="warm"),
    "gen-data": dict(d=(10,), K=5, N=(5000,)),
}


def _field_types():
    return {f.name: f.type for f in fields(ExperimentConfig)}


def parse_value(name: str, text: str):
    """Convert the text form of one field back into its value."""
    kind = _field_types().get(name)
    if kind is None:
        raise ConfigError(f"unknown config key {name!r}")
    text = text.strip()
    try:
        if kind == "tuple":
            items = [t for t in text.replace(" ", "").split(",") if t]
            conv = float if name == "ratios" else int
            return tuple(conv(t) for t in items)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc
    return text


def format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            out[key] = parse_value(key, value)
    return out


def build_config(experiment: str, file_values=None, overrides=None) -> ExperimentConfig:
    """Preset, then config-file values, then explicit overrides."""
    values = dict(PRESETS[experiment])
    for source in (file_values or {}, overrides or {}):
        source = {k: v for k, v in source.items() if v is not None and k != "experiment"}
        if "ratios" in source and "N" not in source:
            values["N"] = ()
        values.update(source)
    try:
        return ExperimentConfig(experiment=experiment, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_lines(cfg: ExperimentConfig) -> list:
    return [f"config.{f.name} = {format_value(getattr(cfg, f.name))}" for f in fields(cfg)]


def config_from_lines(lines) -> ExperimentConfig:
    """Rebuild a config from the ``config.*`` lines of an output preamble."""
    values = {}
    for line in lines:
        line = line.lstrip("#").strip()
        if not line.startswith("config."):
            continue
        key, value = line[len("config."):].split("=", 1)
        key = key.strip()
        value = value.strip()
        values[key] = parse_value(key, value)
    return ExperimentConfig(**values)

"""Experiment configuration: INI-style files with per-command sections.

Example::

    [experiment]
    class = polynomial
    alpha = 1
    gamma = 1
    L = 1
    epsilon = dyadic:1e-1:1e-5

    [mc-validate]
    epsilon = 0.1, 0.05
    replicates = 20000

Keys in ``[experiment]`` apply to every command; a section named after the
command overrides them. ``epsilon`` accepts a comma list, ``dyadic:START:STOP``
(halving from START, STOP appended) or ``geom:START:STOP:COUNT``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping, Optional

from .errors import ConfigError
from .model import SEED_LIMIT, Ellipsoid, ExponentialEllipsoid, PolynomialEllipsoid

DEFAULT_SEED = 20240229
COMMON_SECTION = "experiment"


def dyadic_grid(start: float, stop: float) -> tuple[float, ...]:
    """``start, start/2, start/4, ...`` down to ``stop`` (appended if missed)."""
    if not 0 < stop <= start:
        raise ConfigError(f"dyadic grid needs 0 < stop <= start, got {start}, {stop}")
    out = []
    e = start
    while e > stop * (1 + 1e-12):
        out.append(e)
        e /= 2
    out.append(stop)
    return tuple(out)


def parse_float_list(text: str) -> tuple[float, ...]:
    text = text.strip()
    try:
        if text.startswith("dyadic:"):
            _, a, b = text.split(":")
            return dyadic_grid(float(a), float(b))
        if text.startswith("geom:"):
            _, a, b, n = text.split(":")
            a, b, count = float(a), float(b), int(n)
            if count < 2:
                return (a,)
            ratio = (b / a) ** (1.0 / (count - 1))
            return tuple(a * ratio**k for k in range(count - 1)) + (b,)
        if not text:
            return ()
        return tuple(float(tok) for tok in text.replace(";", ",").split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {text!r}: {exc}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    family: str = "polynomial"
    alpha: float = 1.0
    beta: float = 1.0
    r: float = 1.0
    L: float = 1.0
    gamma: float = 1.0
    epsilons: tuple[float, ...] = (0.1, 0.01, 0.001, 0.0001)
    replicates: int = 20000
    seed: int = DEFAULT_SEED
    threads: int = 1
    tolerance: Optional[float] = None
    signal_path: Optional[str] = None
    resolution: int = 32
    window_min: Optional[float] = None
    window_max: Optional[float] = None
    z_max: float = 4.0
    # lemma-check parameters
    lemma: str = "both"
    lemma_a: float = 1.0
    lemma_b: float = 1.0
    lemma_r: float = 1.0
    lemma_s: float = 1.0
    lemma_n: tuple[float, ...] = (5.0, 10.0, 20.0)
    lemma_v: tuple[float, ...] = (10.0, 20.0, 30.0)
    out: Optional[str] = None
    format: str = "csv"

    def ellipsoid(self) -> Ellipsoid:
        try:
            if self.family == "polynomial":
                return PolynomialEllipsoid(self.alpha, self.L)
            return ExponentialEllipsoid(self.beta, self.r, self.L)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def params(self, command: str) -> dict[str, Any]:
        """Parameters echoed in the JSON summary (never thread counts or paths)."""
        out: dict[str, Any] = {"class": self.family, "gamma": self.gamma, "L": self.L}
        if self.family == "polynomial":
            out["alpha"] = self.alpha
        else:
            out.update(beta=self.beta, r=self.r)
        out["epsilon"] = list(self.epsilons)
        if command == "mc-validate":
            out.update(replicates=self.replicates, seed=self.seed, z_max=self.z_max)
            out["signal"] = self.signal_path or "least-favorable"
        if command == "grid-check":
            out["resolution"] = self.resolution
        if command == "lemma-check":
            out = {"lemma": self.lemma, "a": self.lemma_a, "b": self.lemma_b,
                   "r": self.lemma_r, "s": self.lemma_s,
                   "N": [int(n) for n in self.lemma_n], "v": list(self.lemma_v)}
        if self.tolerance is not None:
            out["tolerance"] = self.tolerance
        return out

    def validate(self, command: str) -> "ExperimentConfig":
        if self.family not in ("polynomial", "exponential"):
            raise ConfigError(f"class must be polynomial or exponential, got {self.family!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if not 0 <= self.seed < SEED_LIMIT:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.gamma < 0 or not math.isfinite(self.gamma):
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if command != "lemma-check":
            self.ellipsoid()
            if not self.epsilons:
                raise ConfigError("epsilon list is empty")
            bad = [e for e in self.epsilons if not 0 < e < 1]
            if bad:
                raise ConfigError(f"epsilon values must lie in (0, 1): {bad}")
        if command == "mc-validate" and self.replicates < 100:
            raise ConfigError("replicates must be >= 100")
        if command == "lemma-check" and self.lemma not in ("sum", "integral", "both"):
            raise ConfigError(f"lemma must be sum, integral or both, got {self.lemma!r}")
        return self


_KEYS = {
    "class": ("family", str),
    "family": ("family", str),
    "alpha": ("alpha", float),
    "beta": ("beta", float),
    "r": ("r", float),
    "l": ("L", float),
    "gamma": ("gamma", float),
    "epsilon": ("epsilons", parse_float_list),
    "replicates": ("replicates", int),
    "seed": ("seed", int),
    "threads": ("threads", int),
    "tolerance": ("tolerance", float),
    "signal": ("signal_path", str),
    "resolution": ("resolution", int),
    "window_min": ("window_min", float),
    "window_max": ("window_max", float),
    "z_max": ("z_max", float),
    "lemma": ("lemma", str),
    "a": ("lemma_a", float),
    "b": ("lemma_b", float),
    "lemma_r": ("lemma_r", float),
    "s": ("lemma_s", float),
    "n": ("lemma_n", parse_float_list),
    "v": ("lemma_v", parse_float_list),
    "out": ("out", str),
    "format": ("format", str),
}


def apply_overrides(cfg: ExperimentConfig, values: Mapping[str, str]) -> ExperimentConfig:
    """Return ``cfg`` with string-valued ``key -> value`` overrides applied."""
    changes: dict[str, Any] = {}
    for raw_key, raw in values.items():
        key = raw_key.strip().lower().replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"unknown configuration key {raw_key!r}")
        name, conv = _KEYS[key]
        try:
            changes[name] = conv(raw.strip()) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {raw_key}: {raw!r} ({exc})") from None
    return replace(cfg, **changes)


def load_config(path: Optional[str | Path], command: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    merged: dict[str, str] = {}
    for section in (COMMON_SECTION, command):
        if parser.has_section(section):
            merged.update(parser.items(section, raw=True))
    return apply_overrides(cfg, merged)


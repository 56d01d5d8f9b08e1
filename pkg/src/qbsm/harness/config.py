"""Experiment configuration: JSON files merged with command-line flags.

A config file is a JSON object whose keys are the long flag names with
dashes replaced by underscores, e.g.::

    {"seed": 7, "scale": {"n": 5, "q": 2}, "checks": ["B1", "C1"], "count": 50,
     "tol": 1e-8, "out": "report.json", "format": "json"}

Flags given on the command line override the file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

from ..theorems import Scale

U64_MAX = (1 << 64) - 1


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to exit status 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    subcommand: str
    seed: int | None = None
    scale: Scale = field(default_factory=Scale)
    tol: float | None = None
    out: str | None = None
    format: str = "json"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.seed is not None and not 0 <= self.seed <= U64_MAX:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.tol is not None and not (self.tol >= 0 and math.isfinite(self.tol)):
            raise ConfigError(f"tolerance must be a finite non-negative number, got {self.tol}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format!r}")

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError(f"{self.subcommand} is randomized and needs --seed")
        return self.seed

    def echo(self) -> dict:
        """JSON-friendly copy for embedding in reports."""
        return {
            "subcommand": self.subcommand,
            "seed": self.seed,
            "scale": {f.name: getattr(self.scale, f.name) for f in fields(Scale)},
            "tol": self.tol,
            "format": self.format,
            "params": self.params,
        }


@dataclass(frozen=True)
class PlannerParams:
    """Inputs of the parameter planner.

    ``k`` may be omitted when both rates are given; it is then
    ``(alpha - beta) n``.  ``constants`` holds the values chosen for the
    unspecified big-O constants.
    """

    n: int
    m: int = 1
    eps: float = 2.0 ** -10
    k: float | None = None
    d: int = 0
    alpha: float | None = None
    beta: float | None = None
    L: int = 1
    constants: dict = field(default_factory=lambda: {"C": 1.0})

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.L < 1 or self.d < 0:
            raise ConfigError("planner needs n, m, L >= 1 and d >= 0")
        if not 0 < self.eps < 1:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if (self.alpha is None) != (self.beta is None):
            raise ConfigError("give both alpha and beta, or neither")
        if self.alpha is not None and not 1 >= self.alpha > self.beta > 0:
            raise ConfigError(f"rates need 1 >= alpha > beta > 0, got alpha={self.alpha}, beta={self.beta}")
        for name, c in self.constants.items():
            if not (c >= 0 and math.isfinite(c)):
                raise ConfigError(f"constant {name} must be a finite non-negative number")

    @property
    def effective_k(self) -> float | None:
        if self.k is not None:
            return self.k
        if self.alpha is not None:
            return (self.alpha - self.beta) * self.n
        return None


def parse_scale(text: str | dict | None, base: Scale | None = None) -> Scale:
    """Parse ``"n=5,q=2"`` (or a dict) on top of ``base``."""
    base = Scale() if base is None else base
    if text is None:
        return base
    if isinstance(text, dict):
        items = text
    else:
        items = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            if "=" not in part:
                raise ConfigError(f"scale entries look like name=value, got {part!r}")
            key, val = part.split("=", 1)
            items[key.strip()] = val
    known = {f.name for f in fields(Scale)}
    values = {f.name: getattr(base, f.name) for f in fields(Scale)}
    for key, val in items.items():
        if key not in known:
            raise ConfigError(f"unknown scale cap {key!r}; known: {sorted(known)}")
        try:
            values[key] = int(val)
        except (TypeError, ValueError):
            raise ConfigError(f"scale cap {key} must be an integer, got {val!r}") from None
    try:
        return Scale(**values)
    except ValueError as ex:
        raise ConfigError(str(ex)) from None


def load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as ex:
        raise ConfigError(f"cannot read config {path}: {ex}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data

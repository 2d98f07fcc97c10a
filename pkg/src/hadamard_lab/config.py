"""Tolerances and run configuration."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    pass


# (max resolution h = mean edge length * sqrt(-delta), relative discretisation tolerance)
DEFAULT_TIERS = ((0.02, 0.01), (0.08, 0.02), (0.2, 0.05), (float("inf"), 0.10))


@dataclass
class Tolerances:
    disc_tiers: tuple = DEFAULT_TIERS
    rig_tol: float = 0.03
    sphere_fit_tol: float = 1e-2
    barycenter_tol: float = 1e-10
    solver_tol: float = 1e-10
    coarse_h: float = 0.25  # resolution above which a report is flagged as under-resolved

    def __post_init__(self):
        self.disc_tiers = tuple((float(h), float(t)) for h, t in self.disc_tiers)
        hs = [h for h, _ in self.disc_tiers]
        if not self.disc_tiers or hs != sorted(hs) or hs[-1] != float("inf"):
            raise ConfigError("disc_tiers must be sorted by h and end with an infinite bound")
        for name in ("rig_tol", "sphere_fit_tol", "barycenter_tol", "solver_tol", "coarse_h"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if any(t <= 0 for _, t in self.disc_tiers):
            raise ConfigError("disc_tiers tolerances must be positive")

    def disc_tol(self, h: float) -> float:
        for hmax, tol in self.disc_tiers:
            if h <= hmax:
                return tol
        return self.disc_tiers[-1][1]


@dataclass
class Config:
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: str | None = None
    format: str = "json"
    seed: int = 0

    def __post_init__(self):
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be 'json' or 'csv', got {self.format!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "Config":
        _reject_unknown(doc, cls, "config")
        doc = dict(doc)
        if "tolerances" in doc:
            tol = doc["tolerances"]
            _reject_unknown(tol, Tolerances, "tolerances")
            if "disc_tiers" in tol:
                tol = dict(tol)
                tol["disc_tiers"] = [(np.inf if h is None or h == "inf" else h, t) for h, t in tol["disc_tiers"]]
            doc["tolerances"] = Tolerances(**tol)
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "Config":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tolerances"]["disc_tiers"] = [[None if np.isinf(h) else h, t] for h, t in self.tolerances.disc_tiers]
        return d


def _reject_unknown(doc, cls, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(sorted(unknown))}")

"""Experiment configuration: a single strict JSON document.

Unknown keys are errors, not warnings — a silently ignored typo in ``mu`` or
``eta`` is the costliest failure mode this tool has.  Every numeric range is
validated before any computation starts.

Schema (see README for the full description)::

    {
      "potential": {"name": str, "d": int, "lambda": float, "params": {...}},
      "smoothing": {"mu": float, "n": int, "p": float},
      "lmc": {"eta": float | "auto", "steps": int, "chains": int,
              "init": {"kind": "point", "value": ...} |
                      {"kind": "gaussian", "mean": ..., "scale": ...},
              "seed": int},
      "report": {"thinning": int | "auto", "resamples": int,
                 "csv": str, "json": str}
    }

"eta": "auto" resolves to 0.9 * (2 / (M + 2 lam)) once the potential and
smoothing parameters are known.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .lmc import InitSpec, LmcConfig
from .pgg import PggSpec
from .potentials import RegularizedPotential, get_potential, max_step_size, regularize
from .smoothing import SmoothingConfig

__all__ = ["ExperimentConfig", "ReportConfig", "load_config"]


def _require_mapping(doc, path):
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected an object, got {type(doc).__name__}")


def _check_keys(doc, path, required, optional=()):
    _require_mapping(doc, path)
    allowed = set(required) | set(optional)
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {unknown}; allowed: {sorted(allowed)}")
    missing = sorted(set(required) - set(doc))
    if missing:
        raise ConfigError(f"{path}: missing required key(s) {missing}")


def _number(doc, path, key, *, integer=False, minimum=None, strict_min=None):
    val = doc[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {val!r}")
    if integer and int(val) != val:
        raise ConfigError(f"{path}.{key}: expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}, got {val}")
    if strict_min is not None and val <= strict_min:
        raise ConfigError(f"{path}.{key}: must be > {strict_min}, got {val}")
    return int(val) if integer else float(val)


@dataclass(frozen=True)
class ReportConfig:
    thinning: int | str = "auto"
    resamples: int = 5
    csv: str = "samples.csv"
    json_path: str = "report.json"


@dataclass(frozen=True)
class ExperimentConfig:
    potential_name: str
    d: int
    lam: float
    potential_params: dict = field(default_factory=dict)
    mu: float = 0.1
    n: int = 1
    p: float = 2.0
    eta: float | str = "auto"
    steps: int = 1
    chains: int = 1
    init: InitSpec = field(default_factory=InitSpec)
    seed: int = 0
    report: ReportConfig = field(default_factory=ReportConfig)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        _check_keys(doc, "config", required=("potential", "smoothing", "lmc"),
                    optional=("report",))

        pot = doc["potential"]
        _check_keys(pot, "potential", required=("name", "d", "lambda"), optional=("params",))
        if not isinstance(pot["name"], str):
            raise ConfigError(f"potential.name: expected a string, got {pot['name']!r}")
        d = _number(pot, "potential", "d", integer=True, minimum=1)
        lam = _number(pot, "potential", "lambda", strict_min=0.0)
        params = pot.get("params", {})
        _require_mapping(params, "potential.params")

        sm = doc["smoothing"]
        _check_keys(sm, "smoothing", required=("mu", "n", "p"))
        mu = _number(sm, "smoothing", "mu", strict_min=0.0)
        n = _number(sm, "smoothing", "n", integer=True, minimum=1)
        p = _number(sm, "smoothing", "p")
        if not (1.0 <= p <= 2.0):
            raise ConfigError(f"smoothing.p: must lie in [1, 2], got {p}")

        lmc = doc["lmc"]
        _check_keys(lmc, "lmc", required=("eta", "steps", "chains", "seed"), optional=("init",))
        eta = lmc["eta"]
        if eta == "auto":
            pass
        elif isinstance(eta, bool) or not isinstance(eta, (int, float)) or not eta > 0:
            raise ConfigError(f'lmc.eta: expected a positive number or "auto", got {eta!r}')
        else:
            eta = float(eta)
        steps = _number(lmc, "lmc", "steps", integer=True, minimum=0)
        chains = _number(lmc, "lmc", "chains", integer=True, minimum=1)
        seed = _number(lmc, "lmc", "seed", integer=True, minimum=0)
        init = cls._parse_init(lmc.get("init", {"kind": "point", "value": 0.0}))

        rep = doc.get("report", {})
        _check_keys(rep, "report", required=(), optional=("thinning", "resamples", "csv", "json"))
        thinning = rep.get("thinning", "auto")
        if thinning != "auto":
            if isinstance(thinning, bool) or not isinstance(thinning, int) or thinning < 1:
                raise ConfigError(f'report.thinning: expected a positive integer or "auto", '
                                  f"got {thinning!r}")
        resamples = rep.get("resamples", 5)
        if isinstance(resamples, bool) or not isinstance(resamples, int) or resamples < 1:
            raise ConfigError(f"report.resamples: expected a positive integer, got {resamples!r}")
        for key in ("csv", "json"):
            if key in rep and not isinstance(rep[key], str):
                raise ConfigError(f"report.{key}: expected a string, got {rep[key]!r}")
        report = ReportConfig(thinning=thinning, resamples=resamples,
                              csv=rep.get("csv", "samples.csv"),
                              json_path=rep.get("json", "report.json"))

        return cls(potential_name=pot["name"], d=d, lam=lam, potential_params=dict(params),
                   mu=mu, n=n, p=p, eta=eta, steps=steps, chains=chains, init=init,
                   seed=seed, report=report)

    @staticmethod
    def _parse_init(doc) -> InitSpec:
        _require_mapping(doc, "lmc.init")
        kind = doc.get("kind")
        if kind == "point":
            _check_keys(doc, "lmc.init", required=("kind",), optional=("value",))
            return InitSpec(kind="point", point=doc.get("value", 0.0))
        if kind == "gaussian":
            _check_keys(doc, "lmc.init", required=("kind",), optional=("mean", "scale"))
            scale = doc.get("scale", 1.0)
            if isinstance(scale, bool) or not isinstance(scale, (int, float)) or not scale > 0:
                raise ConfigError(f"lmc.init.scale: expected a positive number, got {scale!r}")
            return InitSpec(kind="gaussian", mean=doc.get("mean", 0.0), scale=float(scale))
        raise ConfigError(f"lmc.init.kind: expected 'point' or 'gaussian', got {kind!r}")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
                              f"{exc.msg}") from exc
        return cls.from_dict(doc)

    # -- builders -----------------------------------------------------------

    def build_potential(self) -> RegularizedPotential:
        try:
            base = get_potential(self.potential_name, self.d, **self.potential_params)
        except TypeError as exc:
            raise ConfigError(f"potential.params: {exc}") from exc
        return regularize(base, self.lam)

    def build_smoothing(self) -> SmoothingConfig:
        return SmoothingConfig(mu=self.mu, n=self.n, pgg=PggSpec(p=self.p, d=self.d))

    def resolve_eta(self, pot: RegularizedPotential) -> float:
        if self.eta == "auto":
            return 0.9 * max_step_size(pot, self.mu, self.p)
        return float(self.eta)

    def build_lmc(self, pot: RegularizedPotential, seed_override: int | None = None) -> LmcConfig:
        return LmcConfig(eta=self.resolve_eta(pot), steps=self.steps, chains=self.chains,
                         init=self.init, seed=self.seed if seed_override is None else seed_override)

    def resolve_thinning(self) -> int | None:
        return None if self.report.thinning == "auto" else int(self.report.thinning)

    def echo(self) -> dict:
        """Lossless round-trip of every input parameter, in schema shape."""
        init = {"kind": self.init.kind}
        if self.init.kind == "point":
            init["value"] = self.init.point
        else:
            init["mean"] = self.init.mean
            init["scale"] = self.init.scale
        return {
            "potential": {"name": self.potential_name, "d": self.d, "lambda": self.lam,
                          "params": dict(self.potential_params)},
            "smoothing": {"mu": self.mu, "n": self.n, "p": self.p},
            "lmc": {"eta": self.eta, "steps": self.steps, "chains": self.chains,
                    "init": init, "seed": self.seed},
            "report": {"thinning": self.report.thinning, "resamples": self.report.resamples,
                       "csv": self.report.csv, "json": self.report.json_path},
        }


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_file(path)

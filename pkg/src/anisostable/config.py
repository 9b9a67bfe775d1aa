"""Experiment configuration: TOML schema, strict validation, field builders.

Configs are structured key-value text files (TOML).  Validation is strict:
unknown keys are rejected by name before any computation runs, and schema
errors carry a distinct exception type so the CLI can exit with a status
different from a verdict failure.
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from .driver import AlphaSpec
from .fields import (DiagonalCoefficientField, constant_field,
                     oscillation_field, sine_field, zero_field)

EXPERIMENTS = ("simulate", "density", "resolvent", "generator", "multiplier",
               "transience", "martingale", "uniqueness", "maximal")

_TOP_KEYS = {"experiment", "seed", "output_dir", "problem", "numerics"}
_PROBLEM_KEYS = {"d", "alphas", "x0", "field"}
_FIELD_KEYS = {
    "constant": {"kind", "coeffs"},
    "zero": {"kind"},
    "sine": {"kind", "base", "amplitude", "wavevector"},
    "oscillation": {"kind", "eta", "wavevector"},
}
_NUMERIC_KEYS = {
    "T", "dt", "npaths", "levels", "reference_level", "coarse_level",
    "lambdas", "eps", "H", "grid_extent", "grid_points", "p", "deltas",
    "times", "t", "n_time", "tail_target", "radius", "refinement_levels",
    "n_points", "windows", "scales", "csv_paths",
}


class ConfigError(ValueError):
    """Schema violation; carries the offending key."""

    def __init__(self, message: str, key: str = ""):
        super().__init__(message)
        self.key = key


def _check_keys(table: dict, allowed: set, where: str) -> None:
    for k in table:
        if k not in allowed:
            raise ConfigError(f"unknown key '{k}' in {where}", key=k)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    output_dir: str | None
    problem: dict
    numerics: dict
    name: str
    sha256: str
    raw: dict = field(repr=False, default_factory=dict)

    def numeric(self, key: str, default=None):
        return self.numerics.get(key, default)

    def alphas(self) -> AlphaSpec:
        return AlphaSpec.of(*self.problem["alphas"])

    def x0(self) -> np.ndarray:
        return np.asarray(self.problem.get("x0", [0.0] * self.problem["d"]),
                          dtype=float)

    def build_field(self) -> DiagonalCoefficientField:
        return build_field(self.problem)


def build_field(problem: dict) -> DiagonalCoefficientField:
    spec = problem.get("field", {"kind": "constant",
                                 "coeffs": [1.0] * problem["d"]})
    kind = spec.get("kind")
    if kind not in _FIELD_KEYS:
        raise ConfigError(f"unknown field kind '{kind}'", key="field.kind")
    _check_keys(spec, _FIELD_KEYS[kind], f"field ({kind})")
    d = problem["d"]
    if kind == "constant":
        coeffs = spec.get("coeffs", [1.0] * d)
        if len(coeffs) != d:
            raise ConfigError("field.coeffs length must equal d", key="field.coeffs")
        return constant_field(coeffs)
    if kind == "zero":
        return zero_field(d)
    if kind == "sine":
        base = spec["base"]
        amp = spec["amplitude"]
        if len(base) != d or len(amp) != d:
            raise ConfigError("field.base/amplitude length must equal d",
                              key="field.base")
        return sine_field(base, amp, spec.get("wavevector"))
    alphas = AlphaSpec.of(*problem["alphas"])
    return oscillation_field(alphas, spec["eta"], spec.get("wavevector"))


def validate(doc: dict, name: str, sha: str) -> ExperimentConfig:
    _check_keys(doc, _TOP_KEYS, "config")
    exp = doc.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(
            f"experiment must be one of {EXPERIMENTS}, got '{exp}'",
            key="experiment")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer", key="seed")
    problem = doc.get("problem", {})
    _check_keys(problem, _PROBLEM_KEYS, "problem")
    if "d" not in problem or "alphas" not in problem:
        raise ConfigError("problem requires 'd' and 'alphas'", key="problem")
    d = problem["d"]
    alphas = problem["alphas"]
    if not isinstance(d, int) or d < 1:
        raise ConfigError("problem.d must be a positive integer", key="problem.d")
    if len(alphas) != d:
        raise ConfigError("problem.alphas length must equal problem.d",
                          key="problem.alphas")
    for a in alphas:
        if not (0.0 < float(a) < 2.0):
            raise ConfigError(f"stability index {a} outside (0, 2)",
                              key="problem.alphas")
    x0 = problem.get("x0")
    if x0 is not None and len(x0) != d:
        raise ConfigError("problem.x0 length must equal problem.d",
                          key="problem.x0")
    numerics = doc.get("numerics", {})
    _check_keys(numerics, _NUMERIC_KEYS, "numerics")
    cfg = ExperimentConfig(
        experiment=exp, seed=seed, output_dir=doc.get("output_dir"),
        problem=problem, numerics=numerics, name=name, sha256=sha, raw=doc)
    cfg.build_field()   # field spec validated eagerly
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    raw = path.read_bytes()
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
    sha = hashlib.sha256(raw).hexdigest()
    return validate(doc, name=path.stem, sha=sha)

"""Scenario file parsing, validation, and report emission.

Scenarios are JSON: a ``resource`` budget, a list of named groups each with a
``kind``-tagged distribution object, and optional ``defaults`` (epsilon,
alpha, seed, samples) picked up by the CLI. Unknown keys are rejected and
errors carry the JSON path of the offending field. Reports embed the tool
version and a digest of the input so any report can be reproduced.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional

from . import __version__
from .distributions import (
    Binomial,
    Constant,
    DemandDistribution,
    DistributionError,
    Empirical,
    Exponential,
    Normal,
    Poisson,
    TwoPoint,
)
from .metrics import Group, Scenario, availability

TOOL_NAME = "fairalloc"


class ScenarioError(ValueError):
    """Malformed or invalid scenario input, with the JSON path of the fault."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def _require_mapping(obj, path):
    if not isinstance(obj, dict):
        raise ScenarioError(path, f"expected an object, got {type(obj).__name__}")


def _reject_unknown(obj: dict, allowed, path: str):
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ScenarioError(path, f"unknown key {sorted(unknown)[0]!r}")


def _number(obj: dict, key: str, path: str):
    if key not in obj:
        raise ScenarioError(path, f"missing required key {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{path}.{key}", f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ScenarioError(f"{path}.{key}", f"expected a finite number, got {value!r}")
    return value


_DIST_KEYS = {
    "constant": ("c",),
    "two_point": ("k",),
    "binomial": ("n", "p"),
    "poisson": ("lambda",),
    "normal": ("mu", "sigma"),
    "exponential": ("mean",),
    "empirical": ("values", "probabilities"),
}


def distribution_from_spec(obj, path: str = "distribution") -> DemandDistribution:
    """Build a distribution from its tagged JSON object."""
    _require_mapping(obj, path)
    kind = obj.get("kind")
    if kind not in _DIST_KEYS:
        raise ScenarioError(
            f"{path}.kind",
            f"unknown distribution kind {kind!r}; expected one of {sorted(_DIST_KEYS)}",
        )
    _reject_unknown(obj, ("kind",) + _DIST_KEYS[kind], path)
    try:
        if kind == "constant":
            return Constant(_number(obj, "c", path))
        if kind == "two_point":
            return TwoPoint(_number(obj, "k", path))
        if kind == "binomial":
            n = _number(obj, "n", path)
            if not isinstance(n, int):
                raise ScenarioError(f"{path}.n", f"n must be an integer, got {n!r}")
            if n < 1:
                raise ScenarioError(f"{path}.n", f"n must be >= 1, got {n!r}")
            return Binomial(n, _number(obj, "p", path))
        if kind == "poisson":
            return Poisson(_number(obj, "lambda", path))
        if kind == "normal":
            return Normal(_number(obj, "mu", path), _number(obj, "sigma", path))
        if kind == "exponential":
            return Exponential(_number(obj, "mean", path))
        values = obj.get("values")
        probs = obj.get("probabilities")
        if not isinstance(values, list) or not isinstance(probs, list):
            raise ScenarioError(path, "empirical needs 'values' and 'probabilities' lists")
        return Empirical(tuple(values), tuple(probs))
    except DistributionError as exc:
        raise ScenarioError(path, str(exc)) from exc


@dataclass(frozen=True)
class ScenarioDefaults:
    epsilon: Optional[float] = None
    alpha: Optional[float] = None
    seed: Optional[int] = None
    samples: Optional[int] = None

    def to_dict(self) -> dict:
        out = {}
        for key in ("epsilon", "alpha", "seed", "samples"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


@dataclass(frozen=True)
class ScenarioFile:
    scenario: Scenario
    defaults: ScenarioDefaults
    digest: str


def _parse_defaults(obj, path: str) -> ScenarioDefaults:
    _require_mapping(obj, path)
    _reject_unknown(obj, ("epsilon", "alpha", "seed", "samples"), path)
    epsilon = alpha = seed = samples = None
    if "epsilon" in obj:
        epsilon = _number(obj, "epsilon", path)
        if not 0.0 < epsilon < 1.0:
            raise ScenarioError(f"{path}.epsilon", f"epsilon must be in (0, 1), got {epsilon!r}")
    if "alpha" in obj:
        alpha = _number(obj, "alpha", path)
        if alpha < 0.0:
            raise ScenarioError(f"{path}.alpha", f"alpha must be >= 0, got {alpha!r}")
    if "seed" in obj:
        seed = _number(obj, "seed", path)
        if not isinstance(seed, int):
            raise ScenarioError(f"{path}.seed", f"seed must be an integer, got {seed!r}")
    if "samples" in obj:
        samples = _number(obj, "samples", path)
        if not isinstance(samples, int) or samples < 100:
            raise ScenarioError(f"{path}.samples", f"samples must be an integer >= 100, got {samples!r}")
    return ScenarioDefaults(epsilon=epsilon, alpha=alpha, seed=seed, samples=samples)


def load_scenario_file(text: str) -> ScenarioFile:
    """Parse scenario JSON text into a validated scenario plus defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    _require_mapping(raw, "")
    _reject_unknown(raw, ("resource", "groups", "defaults"), "")
    resource = _number(raw, "resource", "")
    if resource < 0.0:
        raise ScenarioError(".resource", f"resource must be >= 0, got {resource!r}")
    groups_raw = raw.get("groups")
    if not isinstance(groups_raw, list) or not groups_raw:
        raise ScenarioError(".groups", "expected a nonempty list of groups")
    groups = []
    for i, entry in enumerate(groups_raw):
        path = f".groups[{i}]"
        _require_mapping(entry, path)
        _reject_unknown(entry, ("name", "distribution"), path)
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            raise ScenarioError(f"{path}.name", f"expected a nonempty string, got {name!r}")
        dist = distribution_from_spec(entry.get("distribution"), f"{path}.distribution")
        groups.append(Group(name=name, dist=dist))
    defaults = ScenarioDefaults()
    if "defaults" in raw:
        defaults = _parse_defaults(raw["defaults"], ".defaults")
    try:
        scenario = Scenario(resource=resource, groups=tuple(groups))
    except ValueError as exc:
        raise ScenarioError("", str(exc)) from exc
    return ScenarioFile(scenario=scenario, defaults=defaults, digest=input_digest(text))


def parse_scenario(text: str) -> Scenario:
    """Parse scenario JSON text; distribution invariants are enforced here."""
    return load_scenario_file(text).scenario


def load_scenario_path(path: str) -> ScenarioFile:
    with open(path, "r", encoding="utf-8") as handle:
        return load_scenario_file(handle.read())


def scenario_to_dict(scenario: Scenario, defaults: Optional[ScenarioDefaults] = None) -> dict:
    out = {
        "resource": scenario.resource,
        "groups": [
            {"name": g.name, "distribution": g.dist.to_spec()} for g in scenario.groups
        ],
    }
    if defaults is not None and defaults.to_dict():
        out["defaults"] = defaults.to_dict()
    return out


def serialize_scenario(scenario: Scenario, defaults: Optional[ScenarioDefaults] = None) -> str:
    return json.dumps(scenario_to_dict(scenario, defaults), indent=2)


def input_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def emit_availability_curve(dist: DemandDistribution, v_max: float, steps: int):
    """Rows (v, availability, expected_min) on a uniform grid over [0, v_max]."""
    if not isinstance(steps, int) or steps < 2:
        raise ValueError(f"steps must be an integer >= 2, got {steps!r}")
    if not math.isfinite(v_max) or v_max <= 0.0:
        raise ValueError(f"v_max must be a positive finite real, got {v_max!r}")
    rows = []
    span = v_max / (steps - 1)
    for i in range(steps):
        v = v_max if i == steps - 1 else i * span
        rows.append((v, availability(dist, v), dist.expected_min(v)))
    return rows


def format_value(value) -> str:
    """CSV cell formatting: 17 significant digits for floats, '.' decimal."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if value is None:
        return ""
    return str(value)


def rows_to_csv(rows, columns) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(row.get(col)) for col in columns))
    return "\n".join(lines) + "\n"


def report_envelope(command: str, settings: dict, digest: Optional[str], result: dict) -> dict:
    """Wrap a result with everything needed to reproduce it."""
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "command": command,
        "input_digest": digest,
        "settings": settings,
        "result": result,
    }

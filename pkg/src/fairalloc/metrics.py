"""Availability, utilization, and fairness metrics.

availability q(v, C) = E[min(C, v)] / E[C] is the expected served fraction of
a group's demand; utilization U sums E[min(C_i, v_i)] over groups; fairness Q
is the largest pairwise availability gap, and an allocation is alpha-fair
when Q <= alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from . import certificates
from .distributions import DemandDistribution

_Q_EQUAL_TOL = 1e-12  # availabilities closer than this count as equal


@dataclass(frozen=True)
class Group:
    name: str
    dist: DemandDistribution


@dataclass(frozen=True)
class Scenario:
    """Total resource plus the demand law of each group."""

    resource: float
    groups: tuple

    def __post_init__(self):
        resource = float(self.resource)
        if not math.isfinite(resource) or resource < 0.0:
            raise ValueError(f"resource must be a finite nonnegative real, got {resource!r}")
        groups = tuple(self.groups)
        if not groups:
            raise ValueError("scenario needs at least one group")
        names = [g.name for g in groups]
        if len(set(names)) != len(names):
            raise ValueError(f"group names must be unique, got {names}")
        object.__setattr__(self, "resource", resource)
        object.__setattr__(self, "groups", groups)

    @property
    def size(self) -> int:
        return len(self.groups)

    @property
    def means(self) -> tuple:
        return tuple(g.dist.mean() for g in self.groups)

    @property
    def total_mean(self) -> float:
        """Total expected demand Z; min(R, Z) caps achievable utilization."""
        return sum(self.means)

    @property
    def names(self) -> tuple:
        return tuple(g.name for g in self.groups)


@dataclass(frozen=True)
class Allocation:
    """Per-group resource amounts; must sum to the scenario's resource."""

    values: tuple

    def __post_init__(self):
        vals = []
        for v in self.values:
            v = float(v)
            if not math.isfinite(v) or v < -1e-9:
                raise ValueError(f"allocation entries must be finite and >= 0, got {v!r}")
            vals.append(max(v, 0.0))
        object.__setattr__(self, "values", tuple(vals))

    @property
    def total(self) -> float:
        return sum(self.values)


def check_allocation(scenario: Scenario, alloc: Allocation) -> None:
    """Reject size mismatches and sums away from R beyond numerical dust."""
    if len(alloc.values) != scenario.size:
        raise ValueError(
            f"allocation has {len(alloc.values)} entries for {scenario.size} groups"
        )
    budget = scenario.resource
    if abs(alloc.total - budget) > 1e-9 * max(budget, 1.0):
        raise ValueError(
            f"allocation sums to {alloc.total!r}, expected {budget!r}"
        )


def availability(dist: DemandDistribution, v: float) -> float:
    """Expected served fraction of demand, E[min(C, v)] / E[C].

    Clamped into [0, 1] only against <= 1e-9 numerical overshoot; genuinely
    out-of-range values (a normal model with heavy negative mass) pass
    through so the misuse stays visible.
    """
    value = dist.expected_min(v) / dist.mean()
    if -1e-9 <= value < 0.0:
        return 0.0
    if 1.0 < value <= 1.0 + 1e-9:
        return 1.0
    return value


def utilization(scenario: Scenario, alloc: Allocation) -> float:
    """Total expected amount of resource consumed."""
    check_allocation(scenario, alloc)
    return sum(g.dist.expected_min(v) for g, v in zip(scenario.groups, alloc.values))


def group_availabilities(scenario: Scenario, alloc: Allocation) -> list:
    check_allocation(scenario, alloc)
    return [availability(g.dist, v) for g, v in zip(scenario.groups, alloc.values)]


def fairness(scenario: Scenario, alloc: Allocation) -> float:
    """Largest pairwise availability gap, max_i q_i - min_i q_i."""
    qs = group_availabilities(scenario, alloc)
    gap = max(qs) - min(qs)
    return 0.0 if gap < _Q_EQUAL_TOL else gap


def is_alpha_fair(scenario: Scenario, alloc: Allocation, alpha: float) -> bool:
    if alpha < 0.0:
        raise ValueError(f"alpha must be >= 0, got {alpha!r}")
    return fairness(scenario, alloc) <= alpha + 1e-12


def negative_mass_warnings(scenario: Scenario) -> list:
    """One warning per group whose model puts visible probability below zero."""
    warnings = []
    for g in scenario.groups:
        mass = g.dist.mass_below_zero()
        if mass > 1e-6:
            warnings.append(
                f"group {g.name!r}: Pr[C < 0] = {mass:.3g}; "
                "count model places visible mass on negative demand"
            )
    return warnings


@dataclass(frozen=True)
class GroupReport:
    name: str
    allocation: float
    availability: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "allocation": self.allocation,
            "availability": self.availability,
        }


@dataclass(frozen=True)
class BoundCheck:
    """Certificate-derived bounds compared against the evaluated allocation.

    The fairness/utilization guarantees are statements about the mean-weighted
    allocation; for any other allocation the comparisons are informational.
    """

    epsilon: float
    delta: float
    method: str
    fairness_bound: float
    fairness_bound_low_resource: Optional[float]
    utilization_bound: float
    utilization_bound_low_resource: Optional[float]
    pof_bound: Optional[float]
    pof_bound_small: Optional[float]
    fairness_ok: bool
    fairness_low_resource_ok: Optional[bool]
    utilization_ok: bool
    utilization_low_resource_ok: Optional[bool]

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "method": self.method,
            "fairness_bound": self.fairness_bound,
            "fairness_bound_low_resource": self.fairness_bound_low_resource,
            "utilization_bound": self.utilization_bound,
            "utilization_bound_low_resource": self.utilization_bound_low_resource,
            "pof_bound": self.pof_bound,
            "pof_bound_small": self.pof_bound_small,
            "fairness_ok": self.fairness_ok,
            "fairness_low_resource_ok": self.fairness_low_resource_ok,
            "utilization_ok": self.utilization_ok,
            "utilization_low_resource_ok": self.utilization_low_resource_ok,
        }


@dataclass(frozen=True)
class EvaluationReport:
    resource: float
    total_mean: float
    groups: tuple
    utilization: float
    fairness: float
    bounds: Optional[BoundCheck]
    warnings: tuple

    def to_dict(self) -> dict:
        return {
            "resource": self.resource,
            "total_mean": self.total_mean,
            "groups": [g.to_dict() for g in self.groups],
            "utilization": self.utilization,
            "fairness": self.fairness,
            "bounds": self.bounds.to_dict() if self.bounds is not None else None,
            "warnings": list(self.warnings),
        }

    def to_csv_rows(self) -> list:
        """One flat row per group; scenario-level columns repeat on each row."""
        rows = []
        for g in self.groups:
            row = {
                "group": g.name,
                "v": g.allocation,
                "q": g.availability,
                "utilization": self.utilization,
                "fairness": self.fairness,
            }
            if self.bounds is not None:
                row.update(
                    {
                        "epsilon": self.bounds.epsilon,
                        "delta": self.bounds.delta,
                        "fairness_bound": self.bounds.fairness_bound,
                        "utilization_bound": self.bounds.utilization_bound,
                        "fairness_ok": self.bounds.fairness_ok,
                        "utilization_ok": self.bounds.utilization_ok,
                    }
                )
            rows.append(row)
        return rows


def evaluate(
    scenario: Scenario,
    alloc: Allocation,
    *,
    epsilon: Optional[float] = None,
    method: str = certificates.EXACT_CDF,
    alpha: Optional[float] = None,
) -> EvaluationReport:
    """Score an allocation; with an epsilon, compare against certificate bounds."""
    qs = group_availabilities(scenario, alloc)
    total = utilization(scenario, alloc)
    gap = fairness(scenario, alloc)
    bounds = None
    if epsilon is not None:
        cert = certificates.scenario_certificate(scenario, epsilon, method)
        tb = certificates.theoretical_bounds(cert, scenario, alpha)
        budget = scenario.resource
        cap = min(budget, scenario.total_mean)
        util_bound = tb.utilization_fraction * cap
        util_bound_low = (
            tb.utilization_fraction_low_resource * budget
            if tb.utilization_fraction_low_resource is not None
            else None
        )
        bounds = BoundCheck(
            epsilon=tb.epsilon,
            delta=tb.delta,
            method=cert.method,
            fairness_bound=tb.fairness_bound,
            fairness_bound_low_resource=tb.fairness_bound_low_resource,
            utilization_bound=util_bound,
            utilization_bound_low_resource=util_bound_low,
            pof_bound=tb.pof_bound,
            pof_bound_small=tb.pof_bound_small,
            fairness_ok=gap <= tb.fairness_bound + 1e-12,
            fairness_low_resource_ok=(
                gap <= tb.fairness_bound_low_resource + 1e-12
                if tb.fairness_bound_low_resource is not None
                else None
            ),
            utilization_ok=total >= util_bound - 1e-9,
            utilization_low_resource_ok=(
                total >= util_bound_low - 1e-9 if util_bound_low is not None else None
            ),
        )
    group_reports = tuple(
        GroupReport(name=g.name, allocation=v, availability=q)
        for g, v, q in zip(scenario.groups, alloc.values, qs)
    )
    return EvaluationReport(
        resource=scenario.resource,
        total_mean=scenario.total_mean,
        groups=group_reports,
        utilization=total,
        fairness=gap,
        bounds=bounds,
        warnings=tuple(negative_mass_warnings(scenario)),
    )

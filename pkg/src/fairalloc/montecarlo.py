"""Seeded Monte Carlo estimators.

These serve as the independent oracle for every closed-form expectation:
estimates carry a standard error, are bit-reproducible for a fixed seed, and
are chunked so the merged result does not depend on how chunks are executed.
Chunk i draws from a generator seeded with ``seed + i``; the number of chunks
is fixed by the sample count alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DemandDistribution
from .metrics import Allocation, Scenario, check_allocation

CHUNK_SIZE = 1 << 16


@dataclass(frozen=True)
class McEstimate:
    value: float
    standard_error: float
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "standard_error": self.standard_error,
            "samples": self.samples,
            "seed": self.seed,
        }


def _check_samples(samples: int) -> int:
    if not isinstance(samples, (int, np.integer)) or isinstance(samples, bool):
        raise ValueError(f"samples must be an integer, got {samples!r}")
    if samples < 100:
        raise ValueError(f"samples must be >= 100, got {samples}")
    return int(samples)


def estimate_expected_min(
    dist: DemandDistribution, v: float, samples: int, seed: int = 42
) -> McEstimate:
    """Sample mean of min(draw, v) with its standard error."""
    samples = _check_samples(samples)
    v = float(v)
    if not math.isfinite(v) or v < 0.0:
        raise ValueError(f"resource level must be a finite nonnegative real, got {v!r}")
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk_index = 0
    while done < samples:
        count = min(CHUNK_SIZE, samples - done)
        rng = np.random.default_rng(seed + chunk_index)
        clipped = np.minimum(dist.sample(rng, count), v)
        total += float(clipped.sum())
        total_sq += float((clipped * clipped).sum())
        done += count
        chunk_index += 1
    mean = total / samples
    variance = max(total_sq - samples * mean * mean, 0.0) / (samples - 1)
    return McEstimate(
        value=mean,
        standard_error=math.sqrt(variance / samples),
        samples=samples,
        seed=seed,
    )


@dataclass(frozen=True)
class McGroupReport:
    name: str
    allocation: float
    expected_min: McEstimate
    availability: McEstimate

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "allocation": self.allocation,
            "expected_min": self.expected_min.to_dict(),
            "availability": self.availability.to_dict(),
        }


@dataclass(frozen=True)
class McReport:
    """Sampled counterpart of an exact evaluation, with combined errors."""

    groups: tuple
    utilization: McEstimate
    fairness: McEstimate
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "groups": [g.to_dict() for g in self.groups],
            "utilization": self.utilization.to_dict(),
            "fairness": self.fairness.to_dict(),
            "samples": self.samples,
            "seed": self.seed,
        }


def estimate_report(
    scenario: Scenario, alloc: Allocation, samples: int, seed: int = 42
) -> McReport:
    """Per-group availability and total utilization by sampling.

    Groups use disjoint chunk-seed ranges derived from the base seed, so the
    whole report is reproducible and group estimates stay independent.
    """
    samples = _check_samples(samples)
    check_allocation(scenario, alloc)
    chunks_per_group = -(-samples // CHUNK_SIZE)
    groups = []
    for index, (group, v) in enumerate(zip(scenario.groups, alloc.values)):
        base = seed + index * chunks_per_group
        est = estimate_expected_min(group.dist, v, samples, seed=base)
        mu = group.dist.mean()
        groups.append(
            McGroupReport(
                name=group.name,
                allocation=v,
                expected_min=est,
                availability=McEstimate(
                    value=est.value / mu,
                    standard_error=est.standard_error / mu,
                    samples=samples,
                    seed=base,
                ),
            )
        )
    util_value = sum(g.expected_min.value for g in groups)
    util_se = math.sqrt(sum(g.expected_min.standard_error ** 2 for g in groups))
    qs = [g.availability for g in groups]
    top = max(qs, key=lambda e: e.value)
    bottom = min(qs, key=lambda e: e.value)
    return McReport(
        groups=tuple(groups),
        utilization=McEstimate(util_value, util_se, samples, seed),
        fairness=McEstimate(
            top.value - bottom.value,
            math.hypot(top.standard_error, bottom.standard_error),
            samples,
            seed,
        ),
        samples=samples,
        seed=seed,
    )

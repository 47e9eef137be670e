"""Allocation rules and optimizers.

``mean_weighted`` splits the resource proportionally to expected demand.
``max_utilization`` solves the unconstrained concave maximum of total
expected consumption by water-filling: it equalizes the marginal value
Pr[C_i > v_i] across groups. ``alpha_fair_optimal`` sweeps an availability
floor, converts the fairness band into per-group box constraints, and
water-fills inside the boxes. ``pof`` is the ratio of the two optima.

All optimizers are deterministic: step-discontinuity residuals are assigned
greedily by ascending group index, and grid ties resolve to the smaller
floor value.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Optional

from . import metrics
from .certificates import TailCertificate
from .distributions import DemandDistribution
from .metrics import Allocation, Scenario

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class OptimizerError(RuntimeError):
    """Optimizer failed to produce a valid allocation."""


class ConvergenceError(OptimizerError):
    """Bisection or sweep did not reach the required tolerance."""


class InfeasibleError(OptimizerError):
    """No allocation satisfies the requested constraints."""


@dataclass(frozen=True)
class OptimizerSettings:
    v_tolerance: float = 1e-9
    ell_grid: int = 512
    refine_iterations: int = 60
    max_bisection_steps: int = 200

    def __post_init__(self):
        if self.v_tolerance <= 0.0:
            raise ValueError("v_tolerance must be positive")
        if self.ell_grid < 1 or self.refine_iterations < 1 or self.max_bisection_steps < 1:
            raise ValueError("grid sizes and iteration counts must be positive")


DEFAULT_SETTINGS = OptimizerSettings()


@dataclass(frozen=True)
class PofResult:
    """Price of fairness at a given alpha, with the certified bounds attached."""

    alpha: float
    unconstrained_utilization: float
    constrained_utilization: float
    pof: float
    bound_1_over_1_minus_alpha: float
    bound_1_plus_2alpha: Optional[float]
    certificate: Optional[TailCertificate]
    max_utilization_allocation: Allocation
    alpha_fair_allocation: Allocation

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "unconstrained_utilization": self.unconstrained_utilization,
            "constrained_utilization": self.constrained_utilization,
            "pof": self.pof,
            "bound_1_over_1_minus_alpha": self.bound_1_over_1_minus_alpha,
            "bound_1_plus_2alpha": self.bound_1_plus_2alpha,
            "certificate": self.certificate.to_dict() if self.certificate else None,
            "max_utilization_allocation": list(self.max_utilization_allocation.values),
            "alpha_fair_allocation": list(self.alpha_fair_allocation.values),
        }


def mean_weighted(scenario: Scenario) -> Allocation:
    """v_i = R mu_i / Z: every group gets the same v_i / mu_i ratio R / Z."""
    z = scenario.total_mean
    r = scenario.resource
    return Allocation(tuple(r * m / z for m in scenario.means))


class _Curve:
    """Fast exact evaluator of one group's E[min(C, v)] on [0, cap].

    Atom-supported variants provide piecewise-linear knots; lookups then
    reduce to bisect + one linear step. Smooth variants fall back to their
    closed forms with numeric inversion where needed.
    """

    def __init__(self, dist: DemandDistribution, cap: float):
        self.dist = dist
        self.cap = float(cap)
        self.mu = dist.mean()
        table = dist.expected_min_knots(self.cap)
        if table is None:
            self.xs = None
        else:
            self.xs, self.cdfs, self.sfs, self.ems = table

    def em(self, v: float) -> float:
        if self.xs is None:
            return self.dist.expected_min(v)
        idx = bisect.bisect_right(self.xs, v) - 1
        if idx < 0:
            return 0.0
        return self.ems[idx] + (v - self.xs[idx]) * self.sfs[idx]

    def q(self, v: float) -> float:
        return self.em(v) / self.mu

    def cdf(self, v: float) -> float:
        if self.xs is None:
            return self.dist.cdf(v)
        idx = bisect.bisect_right(self.xs, v) - 1
        if idx < 0:
            return 0.0
        return self.cdfs[idx]

    def _quantile(self, s: float) -> float:
        if self.xs is None:
            return self.dist.quantile(s)
        idx = bisect.bisect_left(self.cdfs, s)
        if idx >= len(self.xs):
            return self.cap
        return self.xs[idx]

    def fill(self, s: float, lo: float, hi: float) -> float:
        """Water level at cdf-level s, clipped into [lo, hi].

        Bisecting the cdf level rather than the survival level keeps deep
        lower-tail levels representable (1 - s underflows to 1 there).
        """
        if s <= 0.0:
            return lo
        if s >= 1.0:
            return hi
        if self.cdf(hi) < s:
            return hi
        if self.cdf(lo) >= s:
            return lo
        return min(hi, max(lo, self._quantile(s)))

    def lowest_v_with_q_at_least(self, target: float) -> Optional[float]:
        """Smallest v in [0, cap] with q(v) >= target, or None if unreachable."""
        if target <= 0.0:
            return 0.0
        t = target * self.mu
        if self.xs is None:
            if self.em(self.cap) < t:
                return None
            a, b = 0.0, self.cap
            for _ in range(60):
                m = 0.5 * (a + b)
                if self.em(m) >= t:
                    b = m
                else:
                    a = m
            return b
        ems = self.ems
        idx = bisect.bisect_left(ems, t)
        if idx == 0:
            return 0.0
        if idx >= len(ems):
            sf = self.sfs[-1]
            if sf <= 0.0:
                return None
            v = self.xs[-1] + (t - ems[-1]) / sf
        else:
            sf = self.sfs[idx - 1]
            if sf <= 0.0:
                return self.xs[idx]
            # clamp into the segment: a denormal slope makes the division
            # overshoot even though the right knot already satisfies em >= t
            v = min(self.xs[idx - 1] + (t - ems[idx - 1]) / sf, self.xs[idx])
        if v > self.cap:
            if self.em(self.cap) >= t - 1e-12 * max(1.0, t):
                return self.cap
            return None
        return v

    def highest_v_with_q_at_most(self, target: float) -> float:
        """Largest v in [0, cap] with q(v) <= target (target >= 0)."""
        t = target * self.mu
        if self.em(self.cap) <= t:
            return self.cap
        if self.xs is None:
            a, b = 0.0, self.cap
            for _ in range(60):
                m = 0.5 * (a + b)
                if self.em(m) <= t:
                    a = m
                else:
                    b = m
            return a
        idx = bisect.bisect_right(self.ems, t) - 1
        if idx < 0:
            return 0.0
        sf = self.sfs[idx]
        if sf <= 0.0:
            return self.cap
        v = self.xs[idx] + (t - self.ems[idx]) / sf
        if idx + 1 < len(self.xs):
            v = min(v, self.xs[idx + 1])  # same denormal-slope overshoot guard
        return min(self.cap, v)


def _water_fill(curves, budget, lo, hi, settings) -> list:
    """Maximize sum of E[min(C_i, v_i)] s.t. sum v = budget, lo <= v <= hi.

    Bisects a common cdf level; any residual sitting on a survival step is
    assigned greedily by ascending group index (utilization-equivalent on
    the flat segment).
    """
    feas_tol = max(settings.v_tolerance, 1e-9 * max(budget, 1.0))
    sum_lo, sum_hi = sum(lo), sum(hi)
    if sum_lo > budget + feas_tol or sum_hi < budget - feas_tol:
        raise InfeasibleError(
            f"box constraints cannot meet the budget: sum lo {sum_lo!r}, "
            f"sum hi {sum_hi!r}, budget {budget!r}"
        )
    s_lo, s_hi = 0.0, 1.0
    v_low, v_high = list(lo), list(hi)
    for _ in range(settings.max_bisection_steps):
        if s_hi - s_lo <= 1e-18:
            break
        s_mid = 0.5 * (s_lo + s_hi)
        v_mid = [c.fill(s_mid, a, b) for c, a, b in zip(curves, lo, hi)]
        total = sum(v_mid)
        if abs(total - budget) <= settings.v_tolerance:
            v_low = v_mid
            break
        if total < budget:
            s_lo, v_low = s_mid, v_mid
        else:
            s_hi, v_high = s_mid, v_mid
    v = list(v_low)
    residual = budget - sum(v)
    if residual > 0.0:
        for i in range(len(v)):
            head = min(v_high[i], hi[i]) - v[i]
            if head <= 0.0:
                continue
            add = min(residual, head)
            v[i] += add
            residual -= add
            if residual <= 0.0:
                break
    remaining = budget - sum(v)
    if remaining != 0.0:
        # signed dust: spread by index, allowing 1e-9 box overstep but never
        # a negative allocation
        for i in range(len(v)):
            if remaining == 0.0:
                break
            moved = min(max(v[i] + remaining, max(lo[i] - 1e-9, 0.0)), hi[i] + 1e-9)
            remaining -= moved - v[i]
            v[i] = moved
    if abs(sum(v) - budget) > feas_tol:
        raise ConvergenceError(
            f"water-filling missed the budget by {sum(v) - budget!r} "
            f"after {settings.max_bisection_steps} bisection steps"
        )
    return v


def _saturating_allocation(scenario: Scenario, sups) -> Allocation:
    # All demand satisfiable: saturate every support, spread the excess in
    # mean proportions. Utilization is flat here; this choice keeps q_i = 1
    # for every group, hence 0-fairness.
    excess = scenario.resource - sum(sups)
    z = scenario.total_mean
    return Allocation(tuple(s + excess * m / z for s, m in zip(sups, scenario.means)))


def max_utilization(scenario: Scenario, settings: Optional[OptimizerSettings] = None) -> Allocation:
    """Unconstrained maximizer of total expected consumption (water-filling).

    At the optimum all interior groups with continuous demand share a common
    marginal Pr[C_i > v_i].
    """
    settings = settings or DEFAULT_SETTINGS
    budget = scenario.resource
    if budget == 0.0:
        return Allocation((0.0,) * scenario.size)
    sups = [g.dist.support_max() for g in scenario.groups]
    if all(math.isfinite(s) for s in sups) and sum(sups) <= budget:
        return _saturating_allocation(scenario, sups)
    curves = [_Curve(g.dist, budget) for g in scenario.groups]
    lo = [0.0] * scenario.size
    hi = [min(budget, s) for s in sups]
    v = _water_fill(curves, budget, lo, hi, settings)
    return Allocation(tuple(v))


def alpha_fair_optimal(
    scenario: Scenario, alpha: float, settings: Optional[OptimizerSettings] = None
) -> Allocation:
    """Approximately maximize utilization subject to fairness Q <= alpha.

    Sweeps an availability floor ell over its feasible interval; each floor
    turns the band ell <= q_i <= min(ell + alpha, 1) into box constraints
    (q_i is continuous and nondecreasing in v_i), solved by clamped
    water-filling; a golden-section pass refines around the best grid point.
    The result satisfies Q <= alpha + 1e-6 and sums to R within 1e-9 R.
    """
    settings = settings or DEFAULT_SETTINGS
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha < 0.0:
        raise ValueError(f"alpha must be >= 0, got {alpha!r}")
    if alpha >= 1.0:
        # Q <= 1 identically, so the constraint is vacuous.
        return max_utilization(scenario, settings)
    budget = scenario.resource
    if budget == 0.0:
        return Allocation((0.0,) * scenario.size)
    sups = [g.dist.support_max() for g in scenario.groups]
    if all(math.isfinite(s) for s in sups) and sum(sups) <= budget:
        return _saturating_allocation(scenario, sups)
    curves = [_Curve(g.dist, budget) for g in scenario.groups]
    feas_tol = max(settings.v_tolerance, 1e-9 * max(budget, 1.0))

    # First pass inverts the fairness band exactly. Near availability 1 the
    # inverse dv/dq blows up (survival underflows), so adjacent representable
    # floors can straddle the budget with no floor landing on it; the retry
    # widens each band by 1e-9 in availability, three orders inside the
    # Q <= alpha + 1e-6 contract, which restores feasibility there.
    try:
        best_v = _floor_sweep(curves, budget, alpha, settings, feas_tol, scenario, 0.0)
    except InfeasibleError:
        best_v = _floor_sweep(curves, budget, alpha, settings, feas_tol, scenario, 1e-9)

    alloc = Allocation(tuple(best_v))
    gap = metrics.fairness(scenario, alloc)
    if gap > alpha + 1e-6:
        raise ConvergenceError(
            f"sweep result has fairness {gap!r} exceeding alpha={alpha!r} + 1e-6"
        )
    return alloc


def _floor_sweep(curves, budget, alpha, settings, feas_tol, scenario, band_slop):
    def boxes(ell):
        lo, hi = [], []
        for c in curves:
            low = c.lowest_v_with_q_at_least(max(ell - band_slop, 0.0))
            if low is None:
                return None
            band_top = ell + alpha + band_slop
            high = budget if band_top >= 1.0 else c.highest_v_with_q_at_most(band_top)
            if high < low:
                if high < low - 1e-9:
                    return None
                high = low
            lo.append(low)
            hi.append(high)
        return lo, hi

    def solve(ell):
        bx = boxes(ell)
        if bx is None:
            return None
        lo, hi = bx
        if sum(lo) > budget + feas_tol or sum(hi) < budget - feas_tol:
            return None
        try:
            v = _water_fill(curves, budget, lo, hi, settings)
        except InfeasibleError:
            return None
        value = sum(c.em(x) for c, x in zip(curves, v))
        return value, v

    # Strict predicates: the swept interval must contain only floors whose
    # boxes genuinely bracket the budget, else grid points sit a tolerance
    # outside feasibility and the clamped fill cannot meet the budget.
    def lo_fits(ell):
        total = 0.0
        for c in curves:
            low = c.lowest_v_with_q_at_least(max(ell - band_slop, 0.0))
            if low is None:
                return False
            total += low
        return total <= budget

    def hi_reaches(ell):
        band_top = ell + alpha + band_slop
        if band_top >= 1.0:
            return True
        total = sum(c.highest_v_with_q_at_most(band_top) for c in curves)
        return total >= budget

    # The feasible floors form an interval: both predicates are monotone in ell.
    if lo_fits(1.0):
        ell_max = 1.0
    else:
        a, b = 0.0, 1.0
        for _ in range(60):
            m = 0.5 * (a + b)
            if lo_fits(m):
                a = m
            else:
                b = m
        ell_max = a
    if hi_reaches(0.0):
        ell_min = 0.0
    else:
        a, b = 0.0, 1.0
        for _ in range(60):
            m = 0.5 * (a + b)
            if hi_reaches(m):
                b = m
            else:
                a = m
        ell_min = b
    if ell_min > ell_max + 1e-9:
        raise InfeasibleError(
            f"no availability floor admits a feasible fairness band for alpha={alpha!r}"
        )
    ell_min = min(ell_min, ell_max)

    width = ell_max - ell_min
    if width <= 1e-12:
        # a float-degenerate interval can still differ in feasibility at its
        # two representable ends (e.g. the band top crossing 1.0 exactly)
        candidates = sorted({ell_min, ell_max})
    else:
        n = max(settings.ell_grid, 2)
        step = width / (n - 1)
        candidates = [ell_min + i * step for i in range(n)]
        # Seed floors implied by the mean-weighted and unconstrained optima so
        # the sweep never loses to a known-feasible allocation.
        for probe in (mean_weighted(scenario), max_utilization(scenario, settings)):
            qs = [c.q(v) for c, v in zip(curves, probe.values)]
            candidates.append(min(max(min(qs), ell_min), ell_max))
        candidates = sorted(set(candidates))

    best_value, best_v, best_ell = -math.inf, None, None
    for ell in candidates:
        result = solve(ell)
        if result is not None and result[0] > best_value:
            best_value, best_v, best_ell = result[0], result[1], ell
    if best_v is None:
        raise InfeasibleError(
            f"availability floor sweep found no feasible point in "
            f"[{ell_min!r}, {ell_max!r}] for alpha={alpha!r}"
        )

    if width > 1e-12:
        step = width / (max(settings.ell_grid, 2) - 1)
        a = max(ell_min, best_ell - step)
        b = min(ell_max, best_ell + step)

        def score(ell):
            nonlocal best_value, best_v, best_ell
            result = solve(ell)
            if result is None:
                return -math.inf
            if result[0] > best_value:
                best_value, best_v, best_ell = result[0], result[1], ell
            return result[0]

        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc, fd = score(c), score(d)
        for _ in range(settings.refine_iterations):
            if fc >= fd:
                b, d, fd = d, c, fc
                c = b - _GOLDEN * (b - a)
                fc = score(c)
            else:
                a, c, fc = c, d, fd
                d = a + _GOLDEN * (b - a)
                fd = score(d)

    return best_v


def pof(
    scenario: Scenario,
    alpha: float,
    settings: Optional[OptimizerSettings] = None,
    certificate: Optional[TailCertificate] = None,
) -> PofResult:
    """Ratio of the unconstrained utilization optimum to the alpha-fair optimum."""
    alpha = float(alpha)
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"pof requires 0 <= alpha < 1, got {alpha!r}")
    v_max = max_utilization(scenario, settings)
    u_max = metrics.utilization(scenario, v_max)
    v_fair = alpha_fair_optimal(scenario, alpha, settings)
    u_fair = metrics.utilization(scenario, v_fair)
    if u_fair <= 0.0:
        ratio = 1.0 if u_max <= 0.0 else math.inf
    else:
        ratio = u_max / u_fair
    bound_small = None
    if certificate is not None:
        tail_sum = certificate.epsilon + certificate.delta
        if tail_sum <= 0.5 and alpha >= tail_sum:
            bound_small = 1.0 + 2.0 * alpha
    return PofResult(
        alpha=alpha,
        unconstrained_utilization=u_max,
        constrained_utilization=u_fair,
        pof=ratio,
        bound_1_over_1_minus_alpha=1.0 / (1.0 - alpha),
        bound_1_plus_2alpha=bound_small,
        certificate=certificate,
        max_utilization_allocation=v_max,
        alpha_fair_allocation=v_fair,
    )

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
import strategies
from fairalloc.allocation import (
    OptimizerSettings,
    alpha_fair_optimal,
    max_utilization,
    mean_weighted,
    pof,
)
from fairalloc.certificates import TailCertificate, scenario_certificate
from fairalloc.distributions import (
    Binomial,
    Constant,
    Empirical,
    Exponential,
    Normal,
    Poisson,
    TwoPoint,
)
from fairalloc.metrics import Group, Scenario, fairness, utilization


def scenario(resource, *dists):
    return Scenario(
        resource=resource,
        groups=tuple(Group(f"g{i}", d) for i, d in enumerate(dists)),
    )


# ---------------------------------------------------------------- mean-weighted

def test_mean_weighted_examples():
    assert mean_weighted(scenario(20.0, Constant(10.0), Constant(30.0))).values == (5.0, 15.0)
    assert mean_weighted(scenario(7.5, Poisson(3.0))).values == (7.5,)
    sc = scenario(500.0, Poisson(200.0), Poisson(400.0), Poisson(400.0))
    assert mean_weighted(sc).values == (100.0, 200.0, 200.0)


@given(dists=st.lists(strategies.demand_distributions, min_size=1, max_size=5),
       budget=st.floats(0.0, 1000.0))
def test_mean_weighted_sums_to_budget_with_equal_shares(dists, budget):
    sc = scenario(budget, *dists)
    alloc = mean_weighted(sc)
    assert abs(alloc.total - budget) <= 1e-12 * max(budget, 1.0)
    shares = [v / g.dist.mean() for v, g in zip(alloc.values, sc.groups)]
    for share in shares:
        assert share == pytest.approx(budget / sc.total_mean, rel=1e-12)


# ---------------------------------------------------------------- max utilization

def test_symmetric_poisson_splits_evenly():
    sc = scenario(150.0, Poisson(100.0), Poisson(100.0))
    alloc = max_utilization(sc)
    assert alloc.values == (75.0, 75.0)


def test_constants_with_surplus_saturate_then_share_excess():
    sc = scenario(60.0, Constant(10.0), Constant(30.0))
    alloc = max_utilization(sc)
    assert utilization(sc, alloc) == pytest.approx(40.0, abs=1e-12)
    # documented choice: saturate supports, spread the excess in mean shares
    assert alloc.values == pytest.approx((15.0, 45.0), abs=1e-12)
    assert fairness(sc, alloc) == 0.0


def test_constants_below_demand_reach_full_consumption():
    sc = scenario(20.0, Constant(10.0), Constant(30.0))
    alloc = max_utilization(sc)
    assert utilization(sc, alloc) == pytest.approx(20.0, abs=1e-12)


def test_exponential_waterfilling_matches_analytic_solution():
    sc = scenario(21.0, Exponential(10.0), Exponential(25.0))
    alloc = max_utilization(sc)
    assert alloc.values[0] == pytest.approx(6.0, abs=1e-6)
    assert alloc.values[1] == pytest.approx(15.0, abs=1e-6)
    s0 = sc.groups[0].dist.survival(alloc.values[0])
    s1 = sc.groups[1].dist.survival(alloc.values[1])
    assert s0 == pytest.approx(s1, abs=1e-9)


def test_kkt_equal_marginals_for_continuous_groups():
    sc = scenario(140.0, Normal(100.0, 10.0), Exponential(30.0), Normal(60.0, 5.0))
    alloc = max_utilization(sc)
    survs = [g.dist.survival(v) for g, v in zip(sc.groups, alloc.values)
             if 0.0 < v < sc.resource]
    for a in survs:
        for b in survs:
            assert abs(a - b) <= 1e-6


def test_discrete_waterfilling_residual_goes_to_lowest_index():
    # two identical two-point groups; the level sits on a survival step
    sc = scenario(6.0, TwoPoint(10.0), TwoPoint(10.0))
    alloc = max_utilization(sc)
    assert alloc.total == pytest.approx(6.0, abs=1e-12)
    assert alloc.values[0] >= alloc.values[1] - 1e-12


def test_zero_budget():
    sc = scenario(0.0, Poisson(5.0), Constant(3.0))
    for alloc in (max_utilization(sc), alpha_fair_optimal(sc, 0.2), mean_weighted(sc)):
        assert alloc.values == (0.0, 0.0)


@given(dists=st.lists(strategies.demand_distributions, min_size=1, max_size=4),
       ratio=st.floats(0.05, 2.0))
@settings(max_examples=40)
def test_max_utilization_dominates_mean_weighted(dists, ratio):
    sc = scenario(ratio * sum(d.mean() for d in dists), *dists)
    u_best = utilization(sc, max_utilization(sc))
    u_mw = utilization(sc, mean_weighted(sc))
    assert u_best >= u_mw - 1e-9 * max(1.0, u_mw)


def test_max_utilization_deterministic():
    sc = scenario(500.0, Poisson(200.0), Poisson(400.0), Poisson(400.0))
    assert max_utilization(sc).values == max_utilization(sc).values


# ---------------------------------------------------------------- alpha-fair optimum

def test_alpha_zero_constants_recover_mean_weighted():
    for budget in (20.0, 40.0, 60.0):
        sc = scenario(budget, Constant(10.0), Constant(30.0))
        alloc = alpha_fair_optimal(sc, 0.0)
        assert utilization(sc, alloc) == pytest.approx(min(budget, 40.0), abs=1e-9)
        assert fairness(sc, alloc) <= 1e-12


def test_alpha_one_matches_unconstrained_optimum():
    sc = scenario(500.0, Poisson(200.0), Poisson(400.0), Poisson(400.0))
    u_fair = utilization(sc, alpha_fair_optimal(sc, 1.0))
    u_best = utilization(sc, max_utilization(sc))
    assert u_fair == pytest.approx(u_best, abs=1e-6)


def test_alpha_fair_respects_fairness_band():
    sc = scenario(200.0, Poisson(50.0), Poisson(200.0))
    for alpha in (0.0, 0.02, 0.1, 0.5):
        alloc = alpha_fair_optimal(sc, alpha)
        assert fairness(sc, alloc) <= alpha + 1e-6
        assert abs(alloc.total - 200.0) <= 1e-9 * 200.0


def test_alpha_fair_against_bruteforce_grid():
    budget = 200.0
    sc = scenario(budget, Poisson(50.0), Poisson(200.0))
    vals1, pmf1 = oracles.discrete_atoms(Poisson(50.0))
    vals2, pmf2 = oracles.discrete_atoms(Poisson(200.0))
    v1 = np.arange(0, int(budget * 100) + 1) / 100.0
    em1 = np.array([oracles.expected_min_brute(vals1, pmf1, v) for v in v1[:: 1]])
    # vectorized brute force for the larger grid
    em2 = np.array([oracles.expected_min_brute(vals2, pmf2, budget - v) for v in v1])
    q_gap = np.abs(em1 / 50.0 - em2 / 200.0)
    total = em1 + em2
    alpha = 0.05
    oracle_best = total[q_gap <= alpha].max()
    alloc = alpha_fair_optimal(sc, alpha)
    assert utilization(sc, alloc) >= oracle_best - 1e-3


def test_alpha_relaxation_is_monotone():
    sc = scenario(420.0, Poisson(200.0), Poisson(400.0), Binomial(500, 0.4))
    alphas = (0.01, 0.05, 0.15, 0.4)
    us = [utilization(sc, alpha_fair_optimal(sc, a)) for a in alphas]
    for lo, hi in zip(us, us[1:]):
        assert lo <= hi + 1e-6


def test_alpha_fair_rejects_negative_alpha():
    sc = scenario(10.0, Poisson(5.0))
    with pytest.raises(ValueError):
        alpha_fair_optimal(sc, -0.2)


def test_alpha_fair_deterministic():
    sc = scenario(200.0, Poisson(50.0), Poisson(200.0))
    assert alpha_fair_optimal(sc, 0.05).values == alpha_fair_optimal(sc, 0.05).values


def test_mixed_families_alpha_fair():
    sc = scenario(
        120.0,
        Poisson(60.0),
        Normal(50.0, 5.0),
        Binomial(100, 0.4),
        Constant(20.0),
        Empirical((5.0, 25.0), (0.5, 0.5)),
    )
    for alpha in (0.05, 0.3):
        alloc = alpha_fair_optimal(sc, alpha)
        assert fairness(sc, alloc) <= alpha + 1e-6
        u_mw = utilization(sc, mean_weighted(sc))
        if fairness(sc, mean_weighted(sc)) <= alpha:
            assert utilization(sc, alloc) >= u_mw - 1e-6


def test_single_group_alpha_fair_takes_everything():
    sc = scenario(7.5, Poisson(8.0))
    alloc = alpha_fair_optimal(sc, 0.0)
    assert alloc.values == pytest.approx((7.5,), abs=1e-9)
    assert fairness(sc, alloc) == 0.0


@pytest.mark.parametrize(
    "sc_alpha",
    [
        # strict zero-fairness with budgets beyond total demand but below the
        # bounded supports: availabilities pin at 1 where dv/dq blows up
        (
            scenario(
                1355.234,
                Binomial(592, 0.16797135781491773),
                TwoPoint(32.50794600588658),
                Poisson(531.1807866815133),
            ),
            0.0,
        ),
        (
            scenario(77.6950633927731, Constant(49.483317439538055), Binomial(53, 0.16177187364631782)),
            0.0,
        ),
        (
            scenario(
                933.687,
                Binomial(295, 0.5136696232179093),
                TwoPoint(18.307069896755035),
                Normal(346.1790567689092, 11.35589291532226),
                Empirical(
                    (4.412, 15.916, 33.699, 39.375, 54.012),
                    (0.2695794754987251, 0.05756861935926043, 0.08221943863408866,
                     0.23470047565278962, 0.35593199085513627),
                ),
            ),
            0.0,
        ),
    ],
    ids=["bounded-and-poisson", "constant-binomial", "four-family-mix"],
)
def test_alpha_fair_saturation_edge_cases(sc_alpha):
    # regression: floors pinned against availability 1 used to be declared
    # infeasible because no representable floor hit the budget exactly
    sc, alpha = sc_alpha
    alloc = alpha_fair_optimal(sc, alpha)
    assert abs(alloc.total - sc.resource) <= 1e-9 * max(sc.resource, 1.0)
    assert fairness(sc, alloc) <= alpha + 1e-6
    assert min(alloc.values) >= 0.0
    mw = mean_weighted(sc)
    if fairness(sc, mw) <= alpha:
        assert utilization(sc, alloc) >= utilization(sc, mw) - 1e-6


# ---------------------------------------------------------------- price of fairness

def test_pof_constant_demand_is_one():
    for budget in (20.0, 40.0, 60.0):
        sc = scenario(budget, Constant(10.0), Constant(30.0))
        result = pof(sc, 0.0)
        assert result.pof == pytest.approx(1.0, abs=1e-9)


def test_pof_scaled_exponential_family_is_one_at_alpha_zero():
    sc = scenario(21.0, Exponential(10.0), Exponential(25.0))
    result = pof(sc, 0.0)
    assert result.pof == pytest.approx(1.0, abs=1e-6)


def test_pof_bounds_attachment():
    sc = scenario(500.0, Poisson(200.0), Poisson(400.0), Poisson(400.0))
    cert = scenario_certificate(sc, 0.1)
    assert cert.epsilon + cert.delta <= 0.25
    result = pof(sc, 0.25, certificate=cert)
    assert result.bound_1_over_1_minus_alpha == pytest.approx(4.0 / 3.0, rel=1e-12)
    assert result.bound_1_plus_2alpha == pytest.approx(1.5, abs=1e-12)
    assert result.pof <= result.bound_1_over_1_minus_alpha + 1e-3
    assert result.pof <= result.bound_1_plus_2alpha + 1e-3
    assert result.certificate is cert
    payload = result.to_dict()
    assert payload["alpha"] == 0.25
    assert len(payload["max_utilization_allocation"]) == 3

    # alpha below eps + delta: the 1 + 2 alpha claim is not attached
    small = pof(sc, 0.05, certificate=cert)
    assert small.bound_1_plus_2alpha is None

    # large tail sum: certificate cannot support the small bound either
    weak = TailCertificate(epsilon=0.4, delta=0.3, method="exact_cdf", per_group_deltas=(0.3,))
    weak_result = pof(sc, 0.75, certificate=weak)
    assert weak_result.bound_1_plus_2alpha is None


def test_pof_at_least_one():
    cases = [
        scenario(200.0, Poisson(50.0), Poisson(200.0)),
        scenario(35.0, Exponential(10.0), Exponential(25.0)),
        scenario(900.0, Binomial(1000, 0.3), Binomial(2000, 0.5)),
    ]
    for sc in cases:
        for alpha in (0.0, 0.1, 0.5):
            assert pof(sc, alpha).pof >= 1.0 - 1e-9


def test_pof_alpha_validation():
    sc = scenario(10.0, Poisson(5.0))
    for alpha in (-0.1, 1.0, 1.5):
        with pytest.raises(ValueError):
            pof(sc, alpha)


def test_constrained_never_beats_unconstrained():
    sc = scenario(420.0, Poisson(200.0), Poisson(400.0), Binomial(500, 0.4))
    result = pof(sc, 0.03)
    assert result.constrained_utilization <= result.unconstrained_utilization + 1e-9


# ---------------------------------------------------------------- scale families

@given(
    means=st.lists(st.floats(1.0, 50.0), min_size=2, max_size=4),
    ratio=st.floats(0.1, 2.0),
)
@settings(max_examples=25)
def test_scaled_exponential_max_utilization_is_zero_fair(means, ratio):
    # exponentials form a scale family, so the unconstrained optimum is 0-fair
    budget = ratio * sum(means)
    sc = scenario(budget, *(Exponential(m) for m in means))
    alloc = max_utilization(sc)
    assert fairness(sc, alloc) <= 1e-6


# ---------------------------------------------------------------- settings

def test_optimizer_settings_validation():
    with pytest.raises(ValueError):
        OptimizerSettings(v_tolerance=0.0)
    with pytest.raises(ValueError):
        OptimizerSettings(ell_grid=0)
    with pytest.raises(ValueError):
        OptimizerSettings(refine_iterations=-1)
    custom = OptimizerSettings(ell_grid=64, refine_iterations=16)
    sc = scenario(200.0, Poisson(50.0), Poisson(200.0))
    alloc = alpha_fair_optimal(sc, 0.1, custom)
    assert fairness(sc, alloc) <= 0.1 + 1e-6

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from sparse_ucb import (
    Regime,
    build_relaxed_lp,
    classical_lower_bound,
    equal_gap_instance,
    explicit_lower_bound,
    generalized_lower_bound,
    irrelevance_threshold,
    lp_lower_bound,
    sparsity_regime,
    validate_instance,
)
from sparse_ucb.errors import DegenerateNoBadArms, NonzeroBadArm

from conftest import sparse_instances


def kink_oracle(inst, eff=None):
    """Minimum of the one-dimensional piecewise-linear objective, by evaluation at every kink."""
    mu = inst.means if eff is None else eff
    gaps = inst.gaps
    idx = [i for i in range(1, inst.s) if gaps[i] > 0]
    if not idx:
        return 0.0

    def f(lam):
        return (inst.d - inst.s) * lam / (2 * inst.mu_star) + sum(
            gaps[i] * max(1 / (2 * gaps[i] ** 2), (1 - lam) / (2 * mu[i] ** 2)) for i in idx
        )

    grid = [0.0, 1.0] + [1 - mu[i] ** 2 / gaps[i] ** 2 for i in idx]
    return min(f(lam) for lam in grid if 0.0 <= lam <= 1.0)


def highs_oracle(inst, epsilon=None):
    prob = build_relaxed_lp(inst, epsilon)
    if prob.n_constraints == 0:
        return 0.0
    res = linprog(prob.objective, A_ub=-prob.rows, b_ub=-prob.rhs, bounds=[(0, None)] * inst.d, method="highs")
    assert res.status == 0
    return res.fun


def test_hand_example_strong():
    # 1/0.9 > 0.1/0.64, value max(1/0.2, 0.1/1.28)
    inst = validate_instance([0.9, 0.8, 0.0], 2)
    res = explicit_lower_bound(inst)
    assert res.regime is Regime.STRONG
    assert res.value == pytest.approx(5.0, rel=1e-12)
    assert lp_lower_bound(inst).value == pytest.approx(5.0, rel=1e-9)


@pytest.mark.parametrize("mu_s, regime", [(0.4, Regime.WEAK), (0.8, Regime.STRONG)])
def test_regime_examples(mu_s, regime):
    # 8/0.9 = 8.889 against 6 * gap / mu_s^2
    assert sparsity_regime(equal_gap_instance(15, 7, 0.9, 0.9 - mu_s)) is regime


def test_single_good_arm():
    res = explicit_lower_bound(validate_instance([0.9, 0.0], 1))
    assert res.value == 0.0 and res.regime is Regime.STRONG
    assert classical_lower_bound(validate_instance([0.9, 0.0], 1)) == pytest.approx(1 / 1.8)


def test_constraint_count():
    # s - 1 + (d - s)(s - 1)
    assert build_relaxed_lp(validate_instance([0.9, 0.5, 0.0], 2)).n_constraints == 2
    assert build_relaxed_lp(equal_gap_instance(15, 7, 0.9, 0.3)).n_constraints == 6 + 8 * 6


def test_weak_test_with_zero_multiplier():
    # the weak-regime test holds, yet the LP optimum keeps the bad-arm multiplier at 0
    inst = validate_instance([1.0, 0.6, 0.0], 2)
    res = explicit_lower_bound(inst)
    assert res.regime is Regime.WEAK
    assert res.lam == 0.0 and res.k is None
    assert res.value == pytest.approx(1.25, rel=1e-12)
    assert highs_oracle(inst) == pytest.approx(1.25, rel=1e-8)


def test_weak_case_critical_index():
    inst = equal_gap_instance(15, 7, 0.9, 0.5)
    res = explicit_lower_bound(inst)
    assert res.regime is Regime.WEAK
    assert res.k_label is not None and 0.0 < res.lam < 1.0
    assert res.value == pytest.approx(kink_oracle(inst), rel=1e-12)
    assert res.value < classical_lower_bound(inst)


def test_nonzero_bad_arm_rejected():
    with pytest.raises(NonzeroBadArm):
        explicit_lower_bound(validate_instance([0.9, 0.5, -0.2], 2))


def test_irrelevance_threshold():
    assert irrelevance_threshold(15, 7, 0.9) == pytest.approx(0.9 * (-1 + math.sqrt(33)) / 16)
    m = 10**4
    assert irrelevance_threshold(m + 1, 1, 1.0) / (1 / math.sqrt(m)) == pytest.approx(1.0, rel=0.02)
    with pytest.raises(DegenerateNoBadArms):
        irrelevance_threshold(3, 3, 0.9)


def test_below_threshold_deficit():
    # below the threshold arm s alone makes the slope negative; the bound then sits
    # below the classical one by exactly (d - s) mu_s^2 / (2 mu_1 gap_s^2)
    d, s, mu1 = 15, 7, 0.9
    thr = irrelevance_threshold(d, s, mu1)
    mu_s = 0.99 * thr
    below = equal_gap_instance(d, s, mu1, mu1 - mu_s)
    res = explicit_lower_bound(below)
    # equal gaps tie every theta; the multiplier is theta_s either way
    assert res.lam == pytest.approx(1 - mu_s**2 / (mu1 - mu_s) ** 2, rel=1e-12)
    deficit = (d - s) * mu_s**2 / (2 * mu1 * (mu1 - mu_s) ** 2)
    assert classical_lower_bound(below) - res.value == pytest.approx(deficit, rel=1e-9)
    above = equal_gap_instance(d, s, mu1, mu1 - 1.01 * thr)
    assert (d - s) / mu1 > above.gaps[s - 1] / above.means[s - 1] ** 2


@settings(max_examples=300)
@given(sparse_instances())
def test_closed_form_matches_oracles(inst):
    res = explicit_lower_bound(inst)
    assert res.value == pytest.approx(kink_oracle(inst), rel=1e-9, abs=1e-12)
    assert res.value == pytest.approx(highs_oracle(inst), rel=1e-6, abs=1e-9)
    assert abs(res.value - res.lp_value) <= 1e-9 * (1 + abs(res.lp_value))
    assert build_relaxed_lp(inst).is_feasible(res.coefficients)
    assert res.value <= classical_lower_bound(inst) + 1e-12
    good = inst.gaps[1 : inst.s]
    assert res.value >= np.sum(1 / (2 * good[good > 0])) - 1e-12


@settings(max_examples=200)
@given(sparse_instances(), st.floats(0.05, 2.0))
def test_generalized_matches_oracles(inst, scale):
    eps = scale * inst.means[inst.s - 1] if inst.s > 1 else scale
    res = generalized_lower_bound(inst, eps)
    eff = inst.means + np.where(np.arange(inst.d) < inst.s, eps - inst.means[inst.s - 1], 0.0)
    assert res.value == pytest.approx(kink_oracle(inst, eff), rel=1e-9, abs=1e-12)
    assert res.value == pytest.approx(highs_oracle(inst, eps), rel=1e-6, abs=1e-9)


@given(sparse_instances())
def test_epsilon_equal_mu_s_is_identity(inst):
    a = explicit_lower_bound(inst)
    b = generalized_lower_bound(inst, inst.means[inst.s - 1])
    assert a.value == b.value and a.lam == b.lam and a.k == b.k and a.regime is b.regime


def test_epsilon_monotone_and_small_epsilon_weak():
    inst = equal_gap_instance(15, 7, 0.9, 0.3)
    grid = np.linspace(0.1, 0.6, 11)
    vals = [generalized_lower_bound(inst, e).value for e in grid]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    assert generalized_lower_bound(inst, 1e-3).regime is Regime.WEAK


def test_epsilon_must_be_positive():
    with pytest.raises(ValueError):
        generalized_lower_bound(equal_gap_instance(4, 2, 0.9, 0.3), 0.0)

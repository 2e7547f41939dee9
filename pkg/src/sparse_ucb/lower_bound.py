"""Asymptotic regret lower bounds for sparse Gaussian bandits.

Three routes to the same number:

* :func:`explicit_lower_bound` - closed form, built from the optimal
  multiplier ``lam`` shared by all bad arms;
* :func:`generalized_lower_bound` - the same construction when only a margin
  ``epsilon`` above the bad arms is known (the good-arm means ``mu_i`` are
  replaced by ``mu_i - mu_s + epsilon``);
* :func:`lp_lower_bound` - the relaxed linear program solved numerically.

The LP is: minimise ``sum_i c_i gap_i`` over ``c >= 0`` subject to
``2 c_i gap_i^2 >= 1`` for every suboptimal good arm ``i`` and
``2 c_j mu_1^2 + 2 c_i mu_i^2 >= 1`` for every such ``i`` and every bad arm ``j``.
Giving every bad arm the same ``c_j = lam / (2 mu_1^2)`` turns it into the
one-dimensional convex problem

    f(lam) = (d - s) lam / (2 mu_1)
             + sum_i gap_i * max(1 / (2 gap_i^2), (1 - lam) / (2 mu_i^2)),

whose kinks sit at ``theta_i = 1 - mu_i^2 / gap_i^2``.  Between consecutive
kinks the slope is half of ``(d - s)/mu_1 - sum_{i >= k} gap_i / mu_i^2``, so
the optimum is the kink where that quantity changes sign.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateNoBadArms, InvariantViolation, NonzeroBadArm, NoValidK
from .instance import SparseBanditInstance
from .simplex import LpProblem, LpSolution, LpStatus, solve_lp

ORACLE_RTOL = 1e-9
IDENTITY_RTOL = 1e-12


class Regime(enum.Enum):
    STRONG = "strong"
    WEAK = "weak"


@dataclass(frozen=True)
class LowerBoundResult:
    value: float
    regime: Regime
    k: int | None
    lam: float
    coefficients: np.ndarray
    s_star: frozenset
    theta: np.ndarray
    epsilon: float | None = None
    lp_value: float | None = field(default=None, compare=False)

    @property
    def k_label(self) -> int | None:
        """1-based critical index, as printed in reports."""
        return None if self.k is None else self.k + 1


def _require_zero_bad_arms(instance: SparseBanditInstance) -> None:
    bad = instance.means[instance.s :]
    if np.any(bad != 0.0):
        raise NonzeroBadArm(
            "the lower bound is stated for bad arms with mean exactly 0; "
            f"got bad-arm means {bad[bad != 0.0].tolist()}"
        )


def _effective_means(instance: SparseBanditInstance, epsilon: float | None) -> np.ndarray:
    """Good-arm means as they enter the bound; bad arms are left at 0."""
    eff = instance.means.copy()
    if epsilon is not None:
        if not epsilon > 0.0:
            raise ValueError("epsilon must be > 0")
        s = instance.s
        # mu_i - mu_s + eps, written so that eps == mu_s reproduces mu_i exactly
        eff[:s] = instance.means[:s] + (epsilon - instance.means[s - 1])
    return eff


def _constrained_arms(instance: SparseBanditInstance) -> np.ndarray:
    """Good arms other than the best with a strictly positive gap."""
    gaps = instance.gaps
    return np.array([i for i in range(1, instance.s) if gaps[i] > 0.0], dtype=np.int64)


def _regime_margin(instance: SparseBanditInstance, eff: np.ndarray) -> float:
    gaps = instance.gaps
    idx = _constrained_arms(instance)
    return (instance.d - instance.s) / instance.mu_star - float(np.sum(gaps[idx] / eff[idx] ** 2))


def sparsity_regime(instance: SparseBanditInstance, epsilon: float | None = None) -> Regime:
    """Strong iff ``(d - s)/mu_1 - sum_{i <= s, gap_i > 0} gap_i / mu_i^2 > 0``."""
    _require_zero_bad_arms(instance)
    margin = _regime_margin(instance, _effective_means(instance, epsilon))
    return Regime.STRONG if margin > 0.0 else Regime.WEAK


def build_relaxed_lp(instance: SparseBanditInstance, epsilon: float | None = None) -> LpProblem:
    _require_zero_bad_arms(instance)
    eff = _effective_means(instance, epsilon)
    gaps = instance.gaps
    d, s = instance.d, instance.s
    mu1 = instance.mu_star
    rows, labels = [], []
    idx = _constrained_arms(instance)
    for i in idx:
        row = np.zeros(d)
        row[i] = 2.0 * gaps[i] ** 2
        rows.append(row)
        labels.append(("gap", int(i)))
    for i in idx:
        for j in range(s, d):
            row = np.zeros(d)
            row[j] = 2.0 * mu1**2
            row[i] = 2.0 * eff[i] ** 2
            rows.append(row)
            labels.append(("swap", int(i), int(j)))
    return LpProblem(
        objective=gaps.copy(),
        rows=np.array(rows).reshape(len(rows), d),
        rhs=np.ones(len(rows)),
        labels=tuple(labels),
    )


def lp_lower_bound(instance: SparseBanditInstance, epsilon: float | None = None) -> LpSolution:
    """Solve the relaxed LP with the simplex solver."""
    sol = solve_lp(build_relaxed_lp(instance, epsilon))
    if sol.status is not LpStatus.OPTIMAL:
        raise InvariantViolation(f"relaxed LP returned status {sol.status.value}")
    return sol


def _weak_value(gaps, eff, idx, k, d, s, mu1) -> float:
    head = sum(1.0 / (2.0 * gaps[i]) for i in idx if i <= k)
    tail = sum((eff[k] ** 2 / eff[i] ** 2) * gaps[i] / (2.0 * gaps[k] ** 2) for i in idx if i > k)
    return head + tail + (d - s) / (2.0 * mu1) * (1.0 - eff[k] ** 2 / gaps[k] ** 2)


def _strong_value(gaps, eff, idx) -> float:
    return sum(max(1.0 / (2.0 * gaps[i]), gaps[i] / (2.0 * eff[i] ** 2)) for i in idx)


def _solve(instance: SparseBanditInstance, epsilon: float | None, verify: bool) -> LowerBoundResult:
    _require_zero_bad_arms(instance)
    eff = _effective_means(instance, epsilon)
    gaps = instance.gaps
    d, s = instance.d, instance.s
    mu1 = instance.mu_star
    idx = _constrained_arms(instance)

    theta = np.full(d, np.nan)
    theta[idx] = 1.0 - eff[idx] ** 2 / gaps[idx] ** 2
    s_star = frozenset(int(i) for i in range(s) if gaps[i] == 0.0 or eff[i] ** 2 / gaps[i] ** 2 >= 1.0)
    outside = [int(i) for i in idx if int(i) not in s_star]

    regime = Regime.STRONG if _regime_margin(instance, eff) > 0.0 else Regime.WEAK

    # slope sign of f just below theta_k; the optimum is the last kink with a negative slope
    weights = {int(i): gaps[i] / eff[i] ** 2 for i in idx}
    k = None
    for cand in outside:
        tail = sum(w for i, w in weights.items() if i >= cand)
        if (d - s) / mu1 - tail < 0.0:
            k = cand
    if k is not None:
        # ties in theta resolve to the smallest index
        k = min(i for i in outside if theta[i] == theta[k])
        lam = float(theta[k])
        value = _weak_value(gaps, eff, idx, k, d, s, mu1)
    else:
        lam = 0.0
        value = _strong_value(gaps, eff, idx)

    coef = np.zeros(d)
    for i in idx:
        coef[i] = max(1.0 / (2.0 * gaps[i] ** 2), (1.0 - lam) / (2.0 * eff[i] ** 2))
    if idx.size:
        coef[s:] = lam / (2.0 * mu1**2)

    problem = build_relaxed_lp(instance, epsilon)
    if problem.n_constraints:
        slack = problem.slack(coef)
        if slack.min() < -IDENTITY_RTOL:
            raise InvariantViolation(f"closed-form coefficients violate the LP: min slack {slack.min():.3e}")
    from_coef = float(coef @ gaps)
    if not math.isclose(from_coef, value, rel_tol=ORACLE_RTOL, abs_tol=ORACLE_RTOL):
        raise InvariantViolation(f"closed form {value!r} != sum c_i gap_i {from_coef!r}")

    lp_value = None
    if verify:
        lp_value = lp_lower_bound(instance, epsilon).value
        if abs(value - lp_value) > ORACLE_RTOL * (1.0 + abs(lp_value)):
            raise NoValidK(
                f"closed form {value!r} (k={k}, lam={lam!r}) disagrees with LP optimum {lp_value!r}"
            )

    return LowerBoundResult(
        value=value,
        regime=regime,
        k=k,
        lam=lam,
        coefficients=coef,
        s_star=s_star,
        theta=theta,
        epsilon=epsilon,
        lp_value=lp_value,
    )


def explicit_lower_bound(instance: SparseBanditInstance, verify: bool = True) -> LowerBoundResult:
    """Closed-form lower bound on ``liminf Reg(T) / ln T``.

    In the strong regime this is ``sum max(1/(2 gap_i), gap_i/(2 mu_i^2))``;
    otherwise the weak-regime expression at the critical index ``k``.  With
    ``verify`` the result is cross-checked against the LP optimum.

    Raises:
        NonzeroBadArm: if a bad arm has a nonzero mean.
        NoValidK: if the closed form and the LP disagree.
    """
    return _solve(instance, None, verify)


def generalized_lower_bound(
    instance: SparseBanditInstance, epsilon: float, verify: bool = True
) -> LowerBoundResult:
    """Lower bound when the good arms are only known to exceed ``mu_s - epsilon``.

    ``epsilon = mu_s`` gives back :func:`explicit_lower_bound`.
    """
    return _solve(instance, float(epsilon), verify)


def classical_lower_bound(instance: SparseBanditInstance) -> float:
    gaps = instance.gaps
    pos = gaps[gaps > 0.0]
    return float(np.sum(1.0 / (2.0 * pos)))


def irrelevance_threshold(d: int, s: int, mu1: float) -> float:
    """Largest ``mu_s`` for which knowing the sparsity does not lower the bound."""
    if d == s:
        raise DegenerateNoBadArms("no bad arms: the threshold is undefined")
    if d < s or mu1 <= 0.0:
        raise ValueError("need d > s and mu1 > 0")
    m = d - s
    return mu1 * (-1.0 + math.sqrt(1.0 + 4.0 * m)) / (2.0 * m)

"""Finite-time bounds on the regret decomposition of SparseUCB, and their
empirical check against an :class:`~sparse_ucb.experiment.AggregateResult`.

Every bound is an upper bound on an expectation, so a check passes when the
Monte-Carlo mean is at most ``bound + 3 * stderr``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import WrongPolicy
from .experiment import AggregateResult
from .instance import SparseBanditInstance

PI2_6 = math.pi**2 / 6.0
SLACK_SE = 3.0


@dataclass(frozen=True)
class LemmaCheck:
    lemma: str
    arm: int | None
    empirical_mean: float
    stderr: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.empirical_mean <= self.bound + SLACK_SE * self.stderr


def round_robin_bound(instance: SparseBanditInstance) -> float:
    """Expected round-robin pulls of any single arm, over the whole run."""
    mu = instance.means[: instance.s]
    return 1.0 + 3.0 * instance.s + float(np.sum((8.0 + 32.0 * np.log(16.0 / mu**2)) / mu**2))


def force_log_bound(mu_i: float, horizon: int) -> float:
    return (16.0 * math.log(horizon) + 8.0) / mu_i**2


def ucb_phase_bound(gap_i: float, horizon: int) -> float:
    return (16.0 * math.log(horizon) + 8.0) / gap_i**2 + 3.0


def wrong_ucb_bound(instance: SparseBanditInstance) -> float:
    """Bound on the gap-weighted UCB-phase pulls of good arms while the best arm is outside K."""
    return instance.d * float(instance.gaps[instance.s - 1]) * PI2_6


def bad_arm_active_bound() -> float:
    return PI2_6


def regret_upper_bound(instance: SparseBanditInstance, horizon: int) -> float:
    """Constant-explicit regret bound of SparseUCB at horizon ``horizon``."""
    s = instance.s
    gaps = instance.gaps
    mu = instance.means
    log_t = math.log(horizon)
    good = [i for i in range(s) if gaps[i] > 0.0]
    lead = 16.0 * log_t * sum(1.0 / gaps[i] + gaps[i] / mu[i] ** 2 for i in good)
    rr = float(gaps.sum()) * (
        1.0 + 3.0 * s + sum((1.0 + 4.0 * math.log(16.0 / mu[j] ** 2)) / mu[j] ** 2 for j in range(s))
    )
    const = sum(gaps[i] * (3.0 + 8.0 / mu[i] ** 2 + 8.0 / gaps[i] ** 2) for i in good)
    bad = PI2_6 * float(gaps[s:].sum())
    return lead + rr + const + bad + wrong_ucb_bound(instance)


def lemma_sum_bound(instance: SparseBanditInstance, horizon: int) -> float:
    """Regret bound assembled term by term from the per-event bounds."""
    s = instance.s
    gaps = instance.gaps
    mu = instance.means
    total = float(gaps.sum()) * round_robin_bound(instance)
    for i in range(s):
        if gaps[i] > 0.0:
            total += gaps[i] * (force_log_bound(mu[i], horizon) + ucb_phase_bound(gaps[i], horizon))
    total += wrong_ucb_bound(instance)
    total += float(gaps[s:].sum()) * bad_arm_active_bound()
    return total


def regret_slope_bound(instance: SparseBanditInstance) -> float:
    """Coefficient of ``ln T`` in :func:`regret_upper_bound`."""
    gaps = instance.gaps
    mu = instance.means
    return 16.0 * sum(1.0 / gaps[i] + gaps[i] / mu[i] ** 2 for i in range(instance.s) if gaps[i] > 0.0)


def _stat(x: np.ndarray) -> tuple[float, float]:
    n = x.shape[0]
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(x.mean()), se


def lemma_diagnostics(agg: AggregateResult, instance: SparseBanditInstance, horizon: int) -> list[LemmaCheck]:
    """Compare mean event counts with their bounds, one row per (lemma, arm).

    Raises:
        WrongPolicy: unless ``agg`` comes from SparseUCB with the anytime force-log threshold.
    """
    if agg.policy != "sparse-ucb" or agg.horizon_aware:
        raise WrongPolicy("the decomposition bounds only apply to anytime SparseUCB runs")
    ev = agg.event_counts  # (replications, d, 5)
    gaps = instance.gaps
    s, d = instance.s, instance.d
    rows: list[LemmaCheck] = []

    b6 = round_robin_bound(instance)
    for i in range(d):
        rows.append(LemmaCheck("round-robin", i, *_stat(ev[:, i, K.EV_R]), b6))
    for i in range(s):
        rows.append(LemmaCheck("force-log", i, *_stat(ev[:, i, K.EV_F]), force_log_bound(instance.means[i], horizon)))
    for i in range(s):
        if gaps[i] > 0.0:
            rows.append(LemmaCheck("ucb", i, *_stat(ev[:, i, K.EV_U]), ucb_phase_bound(gaps[i], horizon)))
    weighted_v = ev[:, :s, K.EV_V] @ gaps[:s]
    rows.append(LemmaCheck("wrong-ucb", None, *_stat(weighted_v), wrong_ucb_bound(instance)))
    for j in range(s, d):
        rows.append(LemmaCheck("bad-active", j, *_stat(ev[:, j, K.EV_A]), bad_arm_active_bound()))
    rows.append(LemmaCheck("regret-bound", None, *_stat(agg.final_regrets), regret_upper_bound(instance, horizon)))
    rows.append(LemmaCheck("lemma-sum", None, *_stat(agg.final_regrets), lemma_sum_bound(instance, horizon)))
    agg.lemma_report = rows
    return rows

"""Seeded Monte-Carlo replications, aggregation and regret-decomposition checks.

Each replication owns an independent generator seeded from
``(base_seed, replication_index)`` so results do not depend on how
replications are scheduled.  A replication draws, in order:

1. the order in which arms are presented to the policy (a uniform
   permutation, unless ``shuffle_arms`` is off), so that index-based
   tie-breaking cannot exploit the sorted storage of the instance;
2. a reward tape with one row per arm (see :func:`sparse_ucb.instance.reward_tape`).

All reported counts are mapped back to the canonical (sorted) arm order.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import InvariantViolation, ReplicationFailed
from .instance import SparseBanditInstance, reward_tape
from .policies import ForceLogVariant, PolicyConfig

POLICIES = ("ucb", "sparse-ucb")
EVENT_NAMES = ("R", "F", "U", "V", "A")
PHASE_NAMES = ("round-robin", "force-log", "ucb")


def geometric_checkpoints(horizon: int, ratio: float = 1.2) -> np.ndarray:
    """Rounds ``ceil(ratio**k)`` up to ``horizon``, always ending at ``horizon``."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n = int(math.floor(math.log(horizon) / math.log(ratio))) + 1
    pts = np.unique(np.ceil(ratio ** np.arange(n + 1)).astype(np.int64))
    pts = pts[pts <= horizon]
    if pts.size == 0 or pts[-1] != horizon:
        pts = np.append(pts, horizon)
    return pts


def replication_rng(base_seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), int(r)]))


@dataclass(frozen=True)
class ExperimentConfig:
    instance: SparseBanditInstance
    policy: str = "sparse-ucb"
    horizon: int = 10_000
    replications: int = 100
    base_seed: int = 0
    checkpoints: np.ndarray | None = None
    policy_config: PolicyConfig | None = None
    shuffle_arms: bool = True

    def __post_init__(self) -> None:
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.base_seed < 0:
            raise ValueError("base_seed must be nonnegative")
        if self.checkpoints is None:
            ckpt = geometric_checkpoints(self.horizon)
        else:
            ckpt = np.asarray(self.checkpoints, dtype=np.int64)
            if ckpt.ndim != 1 or ckpt.size == 0:
                raise ValueError("checkpoints must be a nonempty 1-d sequence")
            if np.any(np.diff(ckpt) <= 0) or ckpt[0] < 1 or ckpt[-1] > self.horizon:
                raise ValueError("checkpoints must be strictly increasing within [1, horizon]")
        object.__setattr__(self, "checkpoints", ckpt)
        if self.policy_config is None:
            object.__setattr__(self, "policy_config", PolicyConfig(s=self.instance.s))

    @property
    def horizon_aware(self) -> bool:
        return self.policy_config.forcelog_variant is ForceLogVariant.HORIZON_AWARE


@dataclass(frozen=True)
class ReplicationResult:
    index: int
    final_counts: np.ndarray
    checkpoints: np.ndarray
    regret: np.ndarray
    event_counts: np.ndarray
    phase_round_counts: np.ndarray

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1])


def check_replication(result: ReplicationResult, instance: SparseBanditInstance, horizon: int) -> None:
    """Raise InvariantViolation unless the event decomposition conserves pulls."""
    counts = result.final_counts
    ev = result.event_counts
    good = instance.good
    if int(counts.sum()) != horizon:
        raise InvariantViolation(f"replication {result.index}: {counts.sum()} pulls for horizon {horizon}")
    if not np.array_equal(ev.sum(axis=1), counts):
        raise InvariantViolation(f"replication {result.index}: event classes do not partition the pulls")
    if np.any(ev[good][:, K.EV_A]) or np.any(ev[~good][:, [K.EV_F, K.EV_U, K.EV_V]]):
        raise InvariantViolation(f"replication {result.index}: event class on the wrong kind of arm")
    if int(result.phase_round_counts.sum()) != horizon:
        raise InvariantViolation(f"replication {result.index}: phase labels do not cover every round")
    if np.any(np.diff(result.regret) < 0):
        raise InvariantViolation(f"replication {result.index}: regret trajectory decreases")


def run_replication(config: ExperimentConfig, r: int, backend: str | None = None) -> ReplicationResult:
    inst = config.instance
    d, T = inst.d, config.horizon
    rng = replication_rng(config.base_seed, r)
    order = rng.permutation(d) if config.shuffle_arms else np.arange(d)
    tape = reward_tape(inst, T, rng)
    # presented arm p is canonical arm order[p]
    best = int(np.flatnonzero(order == 0)[0])
    pcfg = config.policy_config
    counts, traj, events, phases = K.run_policy(
        K.POLICY_UCB if config.policy == "ucb" else K.POLICY_SPARSE_UCB,
        tape[order],
        inst.gaps[order],
        inst.good[order],
        best,
        pcfg.s,
        T,
        config.checkpoints,
        horizon_aware=config.horizon_aware,
        kterm_horizon=float(pcfg.horizon or T),
        backend=backend,
    )
    final = np.empty_like(counts)
    final[order] = counts
    ev = np.empty_like(events)
    ev[order] = events
    result = ReplicationResult(
        index=r,
        final_counts=final,
        checkpoints=config.checkpoints,
        regret=traj,
        event_counts=ev,
        phase_round_counts=phases,
    )
    check_replication(result, inst, T)
    return result


@dataclass
class AggregateResult:
    policy: str
    horizon: int
    replications: int
    checkpoints: np.ndarray
    mean_regret: np.ndarray
    stderr_regret: np.ndarray
    stderr_defined: bool
    mean_event_counts: np.ndarray
    stderr_event_counts: np.ndarray
    mean_final_counts: np.ndarray
    phase_fractions: np.ndarray
    final_regrets: np.ndarray
    event_counts: np.ndarray
    horizon_aware: bool = False
    lemma_report: list = field(default_factory=list)


def _mean_stderr(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = x.shape[0]
    mean = x.mean(axis=0)
    if n < 2:
        return mean, np.zeros_like(mean, dtype=np.float64)
    return mean, x.std(axis=0, ddof=1) / math.sqrt(n)


def aggregate(config: ExperimentConfig, results: list[ReplicationResult]) -> AggregateResult:
    """Reduce replications in index order, so the result ignores completion order."""
    results = sorted(results, key=lambda res: res.index)
    regret = np.stack([res.regret for res in results])
    events = np.stack([res.event_counts for res in results]).astype(np.float64)
    counts = np.stack([res.final_counts for res in results]).astype(np.float64)
    phases = np.stack([res.phase_round_counts for res in results]).astype(np.float64)
    mean_r, se_r = _mean_stderr(regret)
    mean_e, se_e = _mean_stderr(events)
    return AggregateResult(
        policy=config.policy,
        horizon=config.horizon,
        replications=len(results),
        checkpoints=config.checkpoints,
        mean_regret=mean_r,
        stderr_regret=se_r,
        stderr_defined=len(results) > 1,
        mean_event_counts=mean_e,
        stderr_event_counts=se_e,
        mean_final_counts=counts.mean(axis=0),
        phase_fractions=phases.mean(axis=0) / config.horizon,
        final_regrets=regret[:, -1].copy(),
        event_counts=events,
        horizon_aware=config.horizon_aware,
    )


def run_experiment(config: ExperimentConfig, n_jobs: int = 1, backend: str | None = None) -> AggregateResult:
    """Run every replication and aggregate.

    ``n_jobs > 1`` runs replications on a thread pool; results are identical
    for any ``n_jobs``.
    """
    indices = range(config.replications)
    results = []
    if n_jobs <= 1:
        for r in indices:
            try:
                results.append(run_replication(config, r, backend))
            except Exception as exc:
                raise ReplicationFailed(r, exc) from exc
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            futures = {r: pool.submit(run_replication, config, r, backend) for r in indices}
            for r, fut in futures.items():
                try:
                    results.append(fut.result())
                except Exception as exc:
                    raise ReplicationFailed(r, exc) from exc
    return aggregate(config, results)

"""Sparse bandit instances, Gaussian reward sampling and regret accounting.

Arms are indexed from 0 internally. An instance is always stored with its
means in nonincreasing order, so arm 0 is an optimal arm and arms
``0..s-1`` are the good arms; ``permutation`` maps each sorted position back
to the position the caller originally used.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyInstance, IndexOutOfRange, LengthMismatch, SparsityMismatch

#: Reward noise standard deviation (Gaussian with variance 1/4).
NOISE_STD = 0.5


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SparseBanditInstance:
    means: np.ndarray
    s: int
    permutation: np.ndarray

    @property
    def d(self) -> int:
        return int(self.means.shape[0])

    @property
    def mu_star(self) -> float:
        return float(self.means[0])

    @property
    def gaps(self) -> np.ndarray:
        """Per-arm gaps ``mu_star - mu_i`` (nonnegative, nondecreasing)."""
        return _frozen(self.means[0] - self.means)

    @property
    def good(self) -> np.ndarray:
        """Boolean mask of the arms with strictly positive mean."""
        return _frozen(self.means > 0.0)

    def original_label(self, arm: int) -> int:
        """1-based label of sorted arm ``arm`` in the caller's original ordering."""
        return int(self.permutation[arm]) + 1

    def __repr__(self) -> str:
        return f"SparseBanditInstance(d={self.d}, s={self.s}, means={self.means.tolist()})"


def validate_instance(means: Sequence[float], s: int) -> SparseBanditInstance:
    """Build a canonical (sorted) instance, checking the sparsity structure.

    Raises:
        EmptyInstance: if ``means`` is empty.
        SparsityMismatch: if the number of strictly positive means is not ``s``.
    """
    mu = np.asarray(means, dtype=np.float64).reshape(-1)
    if mu.size == 0:
        raise EmptyInstance("an instance needs at least one arm")
    if not np.all(np.isfinite(mu)):
        raise ValueError("means must be finite")
    d = mu.size
    if not 1 <= s <= d:
        raise ValueError(f"s must lie in [1, {d}], got {s}")
    n_pos = int(np.count_nonzero(mu > 0.0))
    if n_pos != s:
        raise SparsityMismatch(f"expected {s} strictly positive means, found {n_pos}")
    perm = np.argsort(-mu, kind="stable")
    return SparseBanditInstance(
        means=_frozen(mu[perm].copy()),
        s=int(s),
        permutation=_frozen(perm.astype(np.int64)),
    )


def equal_gap_instance(d: int, s: int, mu1: float, delta_s: float) -> SparseBanditInstance:
    """Instance with one best arm at ``mu1``, ``s-1`` arms at ``mu1 - delta_s``
    and ``d-s`` arms at 0 (the family used in the experiments)."""
    means = np.zeros(d)
    means[0] = mu1
    means[1:s] = mu1 - delta_s
    return validate_instance(means, s)


def _check_arm(instance: SparseBanditInstance, arm: int) -> None:
    if not 0 <= arm < instance.d:
        raise IndexOutOfRange(f"arm {arm} outside [0, {instance.d})")


def sample_reward(instance: SparseBanditInstance, arm: int, rng: np.random.Generator) -> float:
    _check_arm(instance, arm)
    return float(rng.normal(instance.means[arm], NOISE_STD))


def reward_tape(instance: SparseBanditInstance, length: int, rng: np.random.Generator) -> np.ndarray:
    """Pre-drawn rewards: row ``i`` holds the successive rewards of arm ``i``.

    The n-th pull of arm i always sees ``tape[i, n]``, whatever the policy, so
    two policies run on the same tape share their random numbers.
    """
    noise = rng.standard_normal((instance.d, length))
    return instance.means[:, None] + NOISE_STD * noise


def empirical_mean(sums: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Per-arm sample means with the convention that an unpulled arm has mean 0."""
    sums = np.asarray(sums, dtype=np.float64)
    counts = np.asarray(counts)
    out = np.zeros_like(sums)
    np.divide(sums, counts, out=out, where=counts > 0)
    return out


def pseudo_regret(instance: SparseBanditInstance, pull_counts: Sequence[int]) -> float:
    n = np.asarray(pull_counts)
    if n.shape != (instance.d,):
        raise LengthMismatch(f"expected {instance.d} pull counts, got shape {n.shape}")
    return float(instance.gaps @ n)


@dataclass
class RegretLedger:
    """Running pull counts and cumulative pseudo-regret of one replication."""

    gaps: np.ndarray
    checkpoints: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    pull_counts: np.ndarray = field(init=False)
    cumulative_pseudo_regret: float = field(init=False, default=0.0)
    trajectory: list[tuple[int, float]] = field(init=False, default_factory=list)

    def __post_init__(self) -> None:
        self.pull_counts = np.zeros(len(self.gaps), dtype=np.int64)
        self._next = 0

    @property
    def rounds(self) -> int:
        return int(self.pull_counts.sum())

    def record(self, arm: int) -> None:
        self.pull_counts[arm] += 1
        self.cumulative_pseudo_regret += float(self.gaps[arm])
        t = self.rounds
        if self._next < len(self.checkpoints) and self.checkpoints[self._next] == t:
            self.trajectory.append((t, self.cumulative_pseudo_regret))
            self._next += 1

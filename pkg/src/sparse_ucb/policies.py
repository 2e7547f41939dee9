"""SparseUCB phase machine and the classical UCB baseline.

These are step-level decision functions over an explicit :class:`SparseUcbState`.
They are the readable reference for the policy; the Monte-Carlo harness runs
the same logic through the loop kernels in :mod:`sparse_ucb._kernels`, and the
test-suite checks that both agree pull for pull.

Arms and rounds: arms are 0-based, rounds ``t`` are 1-based (``t`` is the
round about to be played, so ``counts.sum() == t - 1``).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IndexOutOfRange, InvariantViolation, NotInitialized
from .instance import empirical_mean


class Phase(enum.IntEnum):
    ROUND_ROBIN = 0
    FORCE_LOG = 1
    UCB = 2


class Event(enum.IntEnum):
    """Per-pull event class used by the regret decomposition.

    Good arms are split into R/F/U/V, bad arms into R/A.
    """

    R = 0
    F = 1
    U = 2
    V = 3
    A = 4


class ForceLogVariant(enum.Enum):
    ANYTIME = "anytime"
    HORIZON_AWARE = "horizon"


@dataclass(frozen=True)
class PolicyConfig:
    s: int
    forcelog_variant: ForceLogVariant = ForceLogVariant.ANYTIME
    horizon: int | None = None

    def __post_init__(self) -> None:
        if self.s < 1:
            raise ValueError("s must be >= 1")
        if self.forcelog_variant is ForceLogVariant.HORIZON_AWARE:
            if self.horizon is None or self.horizon < 1:
                raise ValueError("the horizon-aware force-log threshold needs a horizon T >= 1")


@dataclass
class SparseUcbState:
    d: int
    t: int = 1
    counts: np.ndarray = field(default=None)  # type: ignore[assignment]
    sums: np.ndarray = field(default=None)  # type: ignore[assignment]
    rr_remaining: int = 0
    rr_next: int = 0
    last_phase: Phase | None = None

    def __post_init__(self) -> None:
        if self.counts is None:
            self.counts = np.zeros(self.d, dtype=np.int64)
        if self.sums is None:
            self.sums = np.zeros(self.d, dtype=np.float64)

    @property
    def means(self) -> np.ndarray:
        return empirical_mean(self.sums, self.counts)

    def copy(self) -> "SparseUcbState":
        return SparseUcbState(
            d=self.d,
            t=self.t,
            counts=self.counts.copy(),
            sums=self.sums.copy(),
            rr_remaining=self.rr_remaining,
            rr_next=self.rr_next,
            last_phase=self.last_phase,
        )


def _require_initialized(state: SparseUcbState) -> None:
    if np.any(state.counts == 0):
        raise NotInitialized("every arm must have been pulled at least once")


def _radius(log_term: np.ndarray, counts: np.ndarray) -> np.ndarray:
    return 2.0 * np.sqrt(log_term / counts)


def active_mask(state: SparseUcbState) -> np.ndarray:
    _require_initialized(state)
    n = state.counts.astype(np.float64)
    return state.means >= _radius(np.log(n), n)


def sufficiently_sampled_mask(state: SparseUcbState, config: PolicyConfig | None = None) -> np.ndarray:
    _require_initialized(state)
    n = state.counts.astype(np.float64)
    if config is not None and config.forcelog_variant is ForceLogVariant.HORIZON_AWARE:
        log_term = np.log(config.horizon / n)
    else:
        log_term = np.full_like(n, math.log(state.t))
    return state.means >= _radius(log_term, n)


def active_set(state: SparseUcbState) -> set[int]:
    """Arms whose empirical mean clears ``2 sqrt(ln N_i / N_i)``."""
    return set(np.flatnonzero(active_mask(state)).tolist())


def sufficiently_sampled_set(state: SparseUcbState, config: PolicyConfig | None = None) -> set[int]:
    """Arms whose empirical mean clears ``2 sqrt(ln t / N_i)``.

    With the horizon-aware variant the threshold becomes ``2 sqrt(ln(T/N_i) / N_i)``.
    """
    return set(np.flatnonzero(sufficiently_sampled_mask(state, config)).tolist())


def ucb_indices(state: SparseUcbState) -> np.ndarray:
    n = state.counts.astype(np.float64)
    return state.means + _radius(np.full_like(n, math.log(state.t)), n)


def _argmax_lowest(values: np.ndarray, mask: np.ndarray | None = None) -> int:
    if mask is not None:
        values = np.where(mask, values, -np.inf)
    # np.argmax returns the first maximiser
    return int(np.argmax(values))


def ucb_select(state: SparseUcbState) -> int:
    """Classical UCB: initialization sweep, then argmax of the index over all arms."""
    if state.t <= state.d:
        return state.t - 1
    _require_initialized(state)
    return _argmax_lowest(ucb_indices(state))


def sparse_ucb_select(state: SparseUcbState, config: PolicyConfig) -> tuple[int, Phase]:
    """Next arm and phase label of SparseUCB.

    Starting a new round-robin sweep is recorded on ``state`` (``rr_remaining``
    and ``rr_next``) because the sweep commits to ``d`` consecutive pulls;
    :func:`update` then advances it.
    """
    d = state.d
    if state.t <= d:
        return state.t - 1, Phase.ROUND_ROBIN
    if state.rr_remaining > 0:
        return state.rr_next, Phase.ROUND_ROBIN
    active = active_mask(state)
    if np.count_nonzero(active) < config.s:
        state.rr_remaining = d
        state.rr_next = 0
        return 0, Phase.ROUND_ROBIN
    sampled = sufficiently_sampled_mask(state, config)
    if np.count_nonzero(sampled) < config.s:
        candidates = np.flatnonzero(active & ~sampled)
        if candidates.size == 0:
            raise InvariantViolation("|J| >= s > |K| but J \\ K is empty")
        return int(candidates[0]), Phase.FORCE_LOG
    return _argmax_lowest(ucb_indices(state), sampled), Phase.UCB


def update(state: SparseUcbState, arm: int, reward: float, phase: Phase | None = None) -> SparseUcbState:
    """Record the pull of ``arm`` at round ``state.t`` and advance to the next round."""
    if not 0 <= arm < state.d:
        raise IndexOutOfRange(f"arm {arm} outside [0, {state.d})")
    state.counts[arm] += 1
    state.sums[arm] += reward
    if state.rr_remaining > 0:
        state.rr_remaining -= 1
        state.rr_next += 1
    state.t += 1
    state.last_phase = phase
    return state


def classify_event(
    state_before: SparseUcbState,
    arm: int,
    phase: Phase,
    good: np.ndarray,
    best: int = 0,
    config: PolicyConfig | None = None,
) -> Event:
    """Event class of pulling ``arm`` in ``phase`` from ``state_before``.

    ``good`` flags the arms with positive mean and ``best`` is the optimal arm;
    both are ground truth known to the harness, never to the policy.
    """
    if phase is Phase.ROUND_ROBIN:
        return Event.R
    if not good[arm]:
        return Event.A
    if phase is Phase.FORCE_LOG:
        return Event.F
    best_in_k = sufficiently_sampled_mask(state_before, config)[best]
    return Event.U if best_in_k else Event.V

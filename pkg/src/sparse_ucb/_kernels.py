"""Replication loop kernels.

One replication is a T-round loop whose body is a handful of per-arm
threshold tests, which is where nearly all simulation time goes.  Two
interchangeable implementations are provided:

* ``numba``: scalar loops compiled with ``@njit(nogil=True)`` so replications
  can run on threads without holding the GIL;
* ``numpy``: the same round loop in Python with the per-arm work vectorised.

Set ``SPARSE_UCB_DISABLE_NUMBA=1`` to force the numpy path (it is also used
when numba cannot be imported).  Both paths consume the reward tape in the
same way and make the same decisions, so they return identical results.
"""
from __future__ import annotations

import math
import os

import numpy as np

POLICY_UCB = 0
POLICY_SPARSE_UCB = 1

PHASE_RR = 0
PHASE_FORCE_LOG = 1
PHASE_UCB = 2

EV_R = 0
EV_F = 1
EV_U = 2
EV_V = 3
EV_A = 4
N_EVENTS = 5

_DISABLE = os.environ.get("SPARSE_UCB_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLE:
        raise ImportError("numba disabled by SPARSE_UCB_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

DEFAULT_BACKEND = "numba" if HAVE_NUMBA else "numpy"


def _run_python(policy, tape, gaps, good, best, s, horizon, checkpoints, horizon_aware, kterm_T):
    d = tape.shape[0]
    counts = np.zeros(d, dtype=np.int64)
    sums = np.zeros(d, dtype=np.float64)
    events = np.zeros((d, N_EVENTS), dtype=np.int64)
    phases = np.zeros(3, dtype=np.int64)
    traj = np.zeros(checkpoints.shape[0], dtype=np.float64)
    in_j = np.zeros(d, dtype=np.bool_)
    in_k = np.zeros(d, dtype=np.bool_)
    rr_remaining = 0
    rr_next = 0
    regret = 0.0
    ci = 0
    for t in range(1, horizon + 1):
        log_t = math.log(t)
        best_in_k = False
        if t <= d:
            arm = t - 1
            phase = PHASE_RR
        elif rr_remaining > 0:
            arm = rr_next
            phase = PHASE_RR
        elif policy == POLICY_UCB:
            arm = 0
            top = -np.inf
            for i in range(d):
                n = counts[i]
                idx = sums[i] / n + 2.0 * math.sqrt(log_t / n)
                if idx > top:
                    top = idx
                    arm = i
            phase = PHASE_UCB
            nb = counts[best]
            best_in_k = sums[best] / nb >= 2.0 * math.sqrt(log_t / nb)
        else:
            n_j = 0
            n_k = 0
            for i in range(d):
                n = counts[i]
                m = sums[i] / n
                in_j[i] = m >= 2.0 * math.sqrt(math.log(n) / n)
                if horizon_aware:
                    in_k[i] = m >= 2.0 * math.sqrt(math.log(kterm_T / n) / n)
                else:
                    in_k[i] = m >= 2.0 * math.sqrt(log_t / n)
                if in_j[i]:
                    n_j += 1
                if in_k[i]:
                    n_k += 1
            if n_j < s:
                rr_remaining = d
                rr_next = 0
                arm = 0
                phase = PHASE_RR
            elif n_k < s:
                arm = -1
                for i in range(d):
                    if in_j[i] and not in_k[i]:
                        arm = i
                        break
                phase = PHASE_FORCE_LOG
            else:
                arm = 0
                top = -np.inf
                for i in range(d):
                    if in_k[i]:
                        n = counts[i]
                        idx = sums[i] / n + 2.0 * math.sqrt(log_t / n)
                        if idx > top:
                            top = idx
                            arm = i
                phase = PHASE_UCB
                best_in_k = in_k[best]
        if arm < 0:
            # |J| >= s > |K| guarantees J \ K is nonempty
            raise RuntimeError("force-log phase with empty J \\ K")

        if phase == PHASE_RR:
            ev = EV_R
        elif not good[arm]:
            ev = EV_A
        elif phase == PHASE_FORCE_LOG:
            ev = EV_F
        elif best_in_k:
            ev = EV_U
        else:
            ev = EV_V
        events[arm, ev] += 1
        phases[phase] += 1

        sums[arm] += tape[arm, counts[arm]]
        counts[arm] += 1
        if rr_remaining > 0:
            rr_remaining -= 1
            rr_next += 1
        regret += gaps[arm]
        if ci < checkpoints.shape[0] and checkpoints[ci] == t:
            traj[ci] = regret
            ci += 1
    return counts, traj, events, phases


if HAVE_NUMBA:
    _run_numba = njit(cache=True, nogil=True)(_run_python)
else:  # pragma: no cover - exercised only without numba
    _run_numba = None


def _run_numpy(policy, tape, gaps, good, best, s, horizon, checkpoints, horizon_aware, kterm_T):
    d = tape.shape[0]
    counts = np.zeros(d, dtype=np.int64)
    sums = np.zeros(d, dtype=np.float64)
    events = np.zeros((d, N_EVENTS), dtype=np.int64)
    phases = np.zeros(3, dtype=np.int64)
    traj = np.zeros(checkpoints.shape[0], dtype=np.float64)
    rr_remaining = 0
    rr_next = 0
    regret = 0.0
    ci = 0
    n_ckpt = checkpoints.shape[0]
    for t in range(1, horizon + 1):
        best_in_k = False
        if t <= d:
            arm = t - 1
            phase = PHASE_RR
        elif rr_remaining > 0:
            arm = rr_next
            phase = PHASE_RR
        else:
            n = counts.astype(np.float64)
            m = sums / n
            radius_t = 2.0 * np.sqrt(math.log(t) / n)
            if policy == POLICY_UCB:
                arm = int(np.argmax(m + radius_t))
                phase = PHASE_UCB
                best_in_k = bool(m[best] >= radius_t[best])
            else:
                in_j = m >= 2.0 * np.sqrt(np.log(n) / n)
                if horizon_aware:
                    in_k = m >= 2.0 * np.sqrt(np.log(kterm_T / n) / n)
                else:
                    in_k = m >= radius_t
                if np.count_nonzero(in_j) < s:
                    rr_remaining = d
                    rr_next = 0
                    arm = 0
                    phase = PHASE_RR
                elif np.count_nonzero(in_k) < s:
                    cand = np.flatnonzero(in_j & ~in_k)
                    if cand.size == 0:
                        raise RuntimeError("force-log phase with empty J \\ K")
                    arm = int(cand[0])
                    phase = PHASE_FORCE_LOG
                else:
                    arm = int(np.argmax(np.where(in_k, m + radius_t, -np.inf)))
                    phase = PHASE_UCB
                    best_in_k = bool(in_k[best])

        if phase == PHASE_RR:
            ev = EV_R
        elif not good[arm]:
            ev = EV_A
        elif phase == PHASE_FORCE_LOG:
            ev = EV_F
        elif best_in_k:
            ev = EV_U
        else:
            ev = EV_V
        events[arm, ev] += 1
        phases[phase] += 1

        sums[arm] += tape[arm, counts[arm]]
        counts[arm] += 1
        if rr_remaining > 0:
            rr_remaining -= 1
            rr_next += 1
        regret += gaps[arm]
        if ci < n_ckpt and checkpoints[ci] == t:
            traj[ci] = regret
            ci += 1
    return counts, traj, events, phases


def run_policy(
    policy: int,
    tape: np.ndarray,
    gaps: np.ndarray,
    good: np.ndarray,
    best: int,
    s: int,
    horizon: int,
    checkpoints: np.ndarray,
    horizon_aware: bool = False,
    kterm_horizon: float = 1.0,
    backend: str | None = None,
):
    """Play ``horizon`` rounds of ``policy`` against a reward tape.

    Returns ``(counts, trajectory, events, phases)``: final pull counts,
    cumulative pseudo-regret at each checkpoint, per-arm event counts
    (columns R, F, U, V, A) and the number of rounds spent in each phase.
    """
    backend = backend or DEFAULT_BACKEND
    args = (
        int(policy),
        np.ascontiguousarray(tape, dtype=np.float64),
        np.ascontiguousarray(gaps, dtype=np.float64),
        np.ascontiguousarray(good, dtype=np.bool_),
        int(best),
        int(s),
        int(horizon),
        np.ascontiguousarray(checkpoints, dtype=np.int64),
        bool(horizon_aware),
        float(kterm_horizon),
    )
    if tape.shape[1] < horizon:
        raise ValueError("reward tape shorter than the horizon")
    if backend == "numba":
        if _run_numba is None:
            raise RuntimeError("numba backend requested but numba is unavailable")
        return _run_numba(*args)
    if backend == "numpy":
        return _run_numpy(*args)
    if backend == "python":
        return _run_python(*args)
    raise ValueError(f"unknown backend {backend!r}")

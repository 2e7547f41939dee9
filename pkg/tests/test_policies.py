from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparse_ucb import _kernels as K
from sparse_ucb.errors import IndexOutOfRange, NotInitialized
from sparse_ucb.experiment import geometric_checkpoints
from sparse_ucb.instance import equal_gap_instance, reward_tape, validate_instance
from sparse_ucb.policies import (
    Event,
    ForceLogVariant,
    Phase,
    PolicyConfig,
    SparseUcbState,
    active_set,
    classify_event,
    sparse_ucb_select,
    sufficiently_sampled_mask,
    sufficiently_sampled_set,
    active_mask,
    ucb_indices,
    ucb_select,
    update,
)


def _state(counts, means, t):
    counts = np.asarray(counts, dtype=np.int64)
    return SparseUcbState(d=counts.size, t=t, counts=counts, sums=np.asarray(means, dtype=float) * counts)


def test_active_threshold_example():
    # 2 sqrt(ln 100 / 100) = 0.4292 > 0.4
    st_ = _state([100, 100], [0.4, 0.43], t=201)
    assert 2 * math.sqrt(math.log(100) / 100) == pytest.approx(0.4292, abs=1e-4)
    assert active_set(st_) == {1}


def test_single_pull_arm_is_active_iff_nonnegative():
    st_ = _state([1, 1, 1], [0.1, 0.0, -0.1], t=4)
    assert active_set(st_) == {0, 1}


def test_sets_need_initialization():
    with pytest.raises(NotInitialized):
        active_set(SparseUcbState(d=2))


@given(
    st.lists(st.integers(1, 500), min_size=1, max_size=8),
    st.lists(st.floats(-1.0, 1.5), min_size=8, max_size=8),
    st.integers(0, 1000),
)
def test_sufficiently_sampled_is_subset_of_active(counts, means, extra):
    d = len(counts)
    st_ = _state(counts, means[:d], t=sum(counts) + 1 + extra)
    assert sufficiently_sampled_set(st_) <= active_set(st_)


def test_horizon_aware_threshold():
    cfg = PolicyConfig(s=1, forcelog_variant=ForceLogVariant.HORIZON_AWARE, horizon=1000)
    st_ = _state([100], [0.3], t=200)
    # 2 sqrt(ln(10)/100) = 0.3035 > 0.3, 2 sqrt(ln(200)/100) = 0.46
    assert not sufficiently_sampled_mask(st_, cfg)[0]
    st_ = _state([100], [0.31], t=200)
    assert sufficiently_sampled_mask(st_, cfg)[0]
    assert not sufficiently_sampled_mask(st_)[0]
    with pytest.raises(ValueError):
        PolicyConfig(s=1, forcelog_variant=ForceLogVariant.HORIZON_AWARE)


def test_initial_sweep_in_order():
    cfg = PolicyConfig(s=2)
    st_ = SparseUcbState(d=4)
    seen = []
    for t in range(4):
        arm, phase = sparse_ucb_select(st_, cfg)
        seen.append((arm, phase))
        update(st_, arm, 0.0, phase)
    assert seen == [(i, Phase.ROUND_ROBIN) for i in range(4)]


def test_round_robin_sweep_is_not_interrupted():
    cfg = PolicyConfig(s=2)
    st_ = _state([5, 5, 5], [-1.0, -1.0, -1.0], t=16)
    pulls = []
    for _ in range(3):
        arm, phase = sparse_ucb_select(st_, cfg)
        assert phase is Phase.ROUND_ROBIN
        pulls.append(arm)
        # huge rewards would make every arm active, but the sweep must finish
        update(st_, arm, 100.0, phase)
    assert pulls == [0, 1, 2]
    assert sparse_ucb_select(st_, cfg)[1] is not Phase.ROUND_ROBIN


def test_force_log_takes_lowest_index_of_j_minus_k():
    cfg = PolicyConfig(s=2)
    # arms 1 and 2 active, only arm 0 sampled enough
    st_ = _state([400, 30, 30], [0.9, 0.7, 0.8], t=461)
    assert active_set(st_) == {0, 1, 2}
    assert sufficiently_sampled_set(st_) == {0}
    assert sparse_ucb_select(st_, cfg) == (1, Phase.FORCE_LOG)


def test_ucb_phase_restricted_to_k_and_ties_low():
    cfg = PolicyConfig(s=1)
    st_ = _state([400, 400, 3], [0.5, 0.5, 0.0], t=804)
    assert sufficiently_sampled_set(st_) == {0, 1}
    assert sparse_ucb_select(st_, cfg) == (0, Phase.UCB)
    # arm 2 has the largest index overall but is outside K
    assert int(np.argmax(ucb_indices(st_))) == 2


def test_ucb_select():
    st_ = SparseUcbState(d=3)
    assert ucb_select(st_) == 0
    st_ = _state([10, 10, 10], [0.1, 0.3, 0.3], t=31)
    assert ucb_select(st_) == 1


def test_update_bounds():
    with pytest.raises(IndexOutOfRange):
        update(SparseUcbState(d=2), 2, 0.0)


def test_event_classes():
    good = np.array([True, True, False])
    st_in = _state([400, 400, 5], [0.9, 0.5, 0.0], t=806)
    st_out = _state([3, 400, 5], [0.1, 0.5, 0.0], t=409)
    assert classify_event(st_in, 1, Phase.ROUND_ROBIN, good) is Event.R
    assert classify_event(st_in, 2, Phase.ROUND_ROBIN, good) is Event.R
    assert classify_event(st_in, 1, Phase.FORCE_LOG, good) is Event.F
    assert classify_event(st_in, 2, Phase.FORCE_LOG, good) is Event.A
    assert classify_event(st_in, 1, Phase.UCB, good) is Event.U
    assert classify_event(st_out, 1, Phase.UCB, good) is Event.V
    assert classify_event(st_in, 2, Phase.UCB, good) is Event.A


def reference_run(inst, policy, T, tape, cfg=None):
    """Step-by-step loop over the readable decision functions."""
    cfg = cfg or PolicyConfig(s=inst.s)
    st_ = SparseUcbState(d=inst.d)
    events = np.zeros((inst.d, 5), dtype=np.int64)
    arms = []
    for _ in range(T):
        if policy == "ucb":
            arm = ucb_select(st_)
            phase = Phase.ROUND_ROBIN if st_.t <= inst.d else Phase.UCB
        else:
            arm, phase = sparse_ucb_select(st_, cfg)
        events[arm, classify_event(st_, arm, phase, inst.good, 0, cfg)] += 1
        reward = tape[arm, st_.counts[arm]]
        update(st_, arm, reward, phase)
        arms.append(arm)
    return st_.counts, events


@pytest.mark.parametrize("policy", ["ucb", "sparse-ucb"])
@pytest.mark.parametrize("backend", ["numpy", "python"] + (["numba"] if K.HAVE_NUMBA else []))
@pytest.mark.parametrize("params", [(6, 3, 0.9, 0.3), (5, 1, 0.5, 0.0), (8, 4, 0.6, 0.5)])
def test_kernels_match_reference(policy, backend, params):
    inst = equal_gap_instance(*params)
    T = 1500
    tape = reward_tape(inst, T, np.random.default_rng(7))
    counts, events = reference_run(inst, policy, T, tape)
    k_counts, traj, k_events, phases = K.run_policy(
        K.POLICY_UCB if policy == "ucb" else K.POLICY_SPARSE_UCB,
        tape, inst.gaps, inst.good, 0, inst.s, T, geometric_checkpoints(T), backend=backend,
    )
    assert np.array_equal(counts, k_counts)
    assert np.array_equal(events, k_events)
    assert traj[-1] == pytest.approx(float(inst.gaps @ counts))
    assert phases.sum() == T


def test_horizon_aware_kernel_matches_reference():
    inst = equal_gap_instance(6, 3, 0.9, 0.3)
    T = 1200
    cfg = PolicyConfig(s=3, forcelog_variant=ForceLogVariant.HORIZON_AWARE, horizon=T)
    tape = reward_tape(inst, T, np.random.default_rng(3))
    counts, events = reference_run(inst, "sparse-ucb", T, tape, cfg)
    for backend in ["numpy"] + (["numba"] if K.HAVE_NUMBA else []):
        k_counts, _, k_events, _ = K.run_policy(
            K.POLICY_SPARSE_UCB, tape, inst.gaps, inst.good, 0, 3, T, np.array([T]),
            horizon_aware=True, kterm_horizon=float(T), backend=backend,
        )
        assert np.array_equal(counts, k_counts) and np.array_equal(events, k_events)


def test_run_policy_rejects_short_tape():
    inst = validate_instance([0.9, 0.0], 1)
    with pytest.raises(ValueError):
        K.run_policy(K.POLICY_UCB, np.zeros((2, 5)), inst.gaps, inst.good, 0, 1, 10, np.array([10]), backend="numpy")
    with pytest.raises(ValueError):
        K.run_policy(K.POLICY_UCB, np.zeros((2, 10)), inst.gaps, inst.good, 0, 1, 10, np.array([10]), backend="gpu")

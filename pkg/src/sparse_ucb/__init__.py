"""SparseUCB for sparse stochastic bandits, with matching regret lower bounds."""
from .errors import SparseBanditError
from .instance import (
    SparseBanditInstance,
    equal_gap_instance,
    pseudo_regret,
    sample_reward,
    validate_instance,
)
from .lower_bound import (
    LowerBoundResult,
    Regime,
    build_relaxed_lp,
    classical_lower_bound,
    explicit_lower_bound,
    generalized_lower_bound,
    irrelevance_threshold,
    lp_lower_bound,
    sparsity_regime,
)
from .policies import Phase, PolicyConfig, SparseUcbState, sparse_ucb_select, ucb_select
from .simplex import LpProblem, LpSolution, LpStatus, solve_lp
from .experiment import ExperimentConfig, AggregateResult, run_experiment, run_replication
from .diagnostics import lemma_diagnostics, regret_upper_bound

__version__ = "0.1.0"

__all__ = [
    "AggregateResult",
    "ExperimentConfig",
    "LowerBoundResult",
    "LpProblem",
    "LpSolution",
    "LpStatus",
    "Phase",
    "PolicyConfig",
    "Regime",
    "SparseBanditError",
    "SparseBanditInstance",
    "SparseUcbState",
    "build_relaxed_lp",
    "classical_lower_bound",
    "equal_gap_instance",
    "explicit_lower_bound",
    "generalized_lower_bound",
    "irrelevance_threshold",
    "lemma_diagnostics",
    "lp_lower_bound",
    "pseudo_regret",
    "run_experiment",
    "run_replication",
    "sample_reward",
    "solve_lp",
    "sparse_ucb_select",
    "sparsity_regime",
    "regret_upper_bound",
    "ucb_select",
    "validate_instance",
]

"""Feedback-capacity bounds for finite-state channels with causal state at the encoder."""

from .channels import (Fsc, InducedChannel, StrategyTable, builtin_channel,
                       enumerate_strategies, induce_strategy_channel,
                       is_strongly_connected, make_lookahead_fsc, strategy_table,
                       validate_fsc, zs_dmc_pair, zs_output_law)
from .infomeasures import (CausalConditioning, JointTable, binary_entropy,
                           conditional_mi, directed_info, directed_info_terms,
                           entropy, unrolled_joint)
from .beliefdp import (BeliefGrid, DpSolution, bcjr_update, dp_reward,
                       measure_policy_gain, output_marginal, predicted_belief,
                       simulate_grid_policy, value_iteration)
from .qgraph import (QBoundResult, QGraph, SearchResult, SuqChain, build_suq_chain,
                     builtin_qgraph, check_bcjr_invariance, qgraph_bound,
                     search_policy, stationary_distribution, validate_qgraph)
from .horizon import (SandwichResult, SingleLetterResult, analytic_noisy_ising_bound,
                      channel_capacity, noisy_ising_root, sandwich_bounds,
                      shannon_strategy_capacity)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

//! Dynamic programming for one encoder whose symbols reach the receiver
//! noiselessly: a fictitious coordinator that knows only the shared symbol
//! history picks, at every stage, a map from (symbol, latent belief) to the
//! channel input.

mod dp;
mod enumerate;
mod graph;

pub use dp::{coordinator_to_structured, extract_selection_rule, markov_rule_cost, solve_dp, ValueTable, DP_TIE_TOL};
pub use enumerate::{
    alternating_best_response, count_history_rules, fixed_marginals, for_each_common_info_strategy, for_each_history_rule, history_rule_cost, p2_brute_force,
    solve_coordinator, tau_cost, verify_dominance, verify_equivalence_p2, BestResponseHeuristic, CoordinatorSolution, DominanceReport, EquivalenceReport,
    P2BruteForce, SweepStep, TargetTree, EQUIV_TOL,
};
pub use graph::{action_count, build_reachable_xi_graph, partial_from_id, partial_id, reachable_a_beliefs, Outcome, ReachableXiGraph, XiEdge};

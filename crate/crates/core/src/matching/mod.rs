//! Exact combinatorics of `N`-dimer covers.

pub mod concentration;
pub mod covers;
pub mod feasibility;
pub mod maxflow;
pub mod sampling;

pub use concentration::{concentration_check, ConcentrationRow};
pub use covers::{
    cover_probability, cover_weight, enumerate_covers, factorial, lift_count, ln_rational, partition_function,
    partition_function_generating, rational_to_f64, unit_weights, ExactMeasure, GuardRails,
};
pub use feasibility::{
    check_edge_feasible, check_edge_feasible_forced, check_feasible, is_fully_feasible, DeficientSet,
    EdgeFeasibility, Feasibility, InfeasibleReason, MultiDimerCover, Witness,
};
pub use sampling::{alternating_cycles, sample_cover, AlternatingCycle, ExactSampler, MetropolisChain};

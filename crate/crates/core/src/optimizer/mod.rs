//! Cost model and the search over Augmented Grid configurations.

mod agd;
mod cost;
mod evaluator;

pub use agd::{
    adaptive_gradient_descent, cell_budget, empty_cell_fraction, gradient_step, initialize_partitions,
    initialize_skeleton, local_skeleton_search, optimize, proportional_partitions, random_restart_hillclimb,
    GridConfig, OptimizeResult, OptimizerKind, TraceEntry, EMPTY_CELL_THRESHOLD, MAX_ITERATIONS, PROBE_GRID,
};
pub use cost::{calibrate_cost_model, calibrate_weights, Calibration, cost_samples, CostWeights};
pub use evaluator::{CostBreakdown, Evaluator};

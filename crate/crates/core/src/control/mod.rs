//! Controlled dynamics, cost functional, costates and the forward-backward
//! sweep solver.
//!
//! Scenario masking works by zeroing the bounds of switched-off families, so
//! all eight scenarios share one code path.

mod dynamics;
mod sweep;
mod types;

pub use dynamics::{
    adjoint_rhs, aggregate_controls, controlled_rhs, controlled_rhs_bounded, cost_functional,
    hamiltonian, optimal_control_update, running_cost, AGGREGATE_NAMES,
};
pub use sweep::{
    forward_backward_sweep, objective, simulate_controlled, simulate_uncontrolled,
    solve_scenarios, FbsConfig, OcSolution, SweepRecord,
};
pub use types::{AdjointVec, ControlBounds, ControlVec, CostWeights, Intervention, ScenarioMask};

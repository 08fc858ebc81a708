use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{rk4_backward, rk4_forward, TimeGrid, Trajectory};
use crate::model::{rhs_with_removal, ModelParams, StateVec};

use super::dynamics::{adjoint_field, cost_functional, optimal_control_update};
use super::types::{AdjointVec, ControlBounds, ControlVec, CostWeights, ScenarioMask};

/// Forward-backward sweep settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FbsConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Weight of the new controls in `u <- α u_new + (1 - α) u_old`.
    pub relaxation: f64,
    pub max_iter: usize,
}

impl Default for FbsConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-3,
            abs_tol: 1e-6,
            relaxation: 0.3,
            max_iter: 200,
        }
    }
}

impl FbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol.is_finite() && self.rel_tol >= 0.0) {
            return Err(Error::InvalidInput("rel_tol must be finite and >= 0".into()));
        }
        if !(self.abs_tol.is_finite() && self.abs_tol >= 0.0) {
            return Err(Error::InvalidInput("abs_tol must be finite and >= 0".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::InvalidInput("relaxation must lie in (0, 1]".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// One sweep of the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    pub iteration: usize,
    /// Objective of the controls that drove this sweep's forward pass.
    pub objective: f64,
    /// Largest per-component `‖u_new - u_old‖₁` over the grid.
    pub change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcSolution {
    pub mask: ScenarioMask,
    /// States of the final forward pass.
    pub states: Trajectory<5>,
    /// Costates of the final backward pass; the last node is zero.
    pub adjoints: Trajectory<5>,
    /// Pointwise optimal controls for the final `(states, adjoints)` pair.
    pub controls: Trajectory<9>,
    /// Objective of `controls`, from a fresh forward simulation.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<SweepRecord>,
}

impl OcSolution {
    pub fn state(&self, i: usize) -> StateVec {
        StateVec::from_array(self.states.node(i))
    }

    pub fn adjoint(&self, i: usize) -> AdjointVec {
        AdjointVec::from_array(self.adjoints.node(i))
    }

    pub fn control(&self, i: usize) -> ControlVec {
        ControlVec::from_array(self.controls.node(i))
    }
}

fn check_initial(y0: &StateVec) -> Result<()> {
    if y0.to_array().iter().all(|v| v.is_finite() && *v >= 0.0) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "initial state must be finite and >= 0: {y0:?}"
        )))
    }
}

/// Integrate the uncontrolled system over `grid`.
pub fn simulate_uncontrolled(p: &ModelParams, y0: &StateVec, grid: &TimeGrid) -> Result<Trajectory<5>> {
    p.validate()?;
    check_initial(y0)?;
    rk4_forward(
        |_, y| rhs_with_removal(p, &StateVec::from_array(*y), [0.0; 3]).to_array(),
        y0.to_array(),
        grid,
    )
}

/// Integrate the controlled system with controls interpolated linearly
/// between grid nodes.
pub fn simulate_controlled(
    p: &ModelParams,
    y0: &StateVec,
    controls: &Trajectory<9>,
) -> Result<Trajectory<5>> {
    p.validate()?;
    check_initial(y0)?;
    if controls.values().iter().flatten().any(|v| *v < 0.0) {
        return Err(Error::InvalidInput("controls must be >= 0".into()));
    }
    rk4_forward(
        |stage, y| {
            let u = ControlVec::from_array(controls.at(stage));
            rhs_with_removal(p, &StateVec::from_array(*y), u.removal()).to_array()
        },
        y0.to_array(),
        controls.grid(),
    )
}

/// Objective of a control trajectory: simulate, then integrate the running cost.
pub fn objective(
    p: &ModelParams,
    w: &CostWeights,
    mask: ScenarioMask,
    y0: &StateVec,
    controls: &Trajectory<9>,
) -> Result<f64> {
    let states = simulate_controlled(p, y0, controls)?;
    cost_functional(&states, controls, w, mask)
}

fn backward_costates(
    p: &ModelParams,
    states: &Trajectory<5>,
    controls: &Trajectory<9>,
) -> Result<Trajectory<5>> {
    let grid = *states.grid();
    rk4_backward(
        |stage, a| {
            let s = StateVec::from_array(states.at(stage));
            let u = ControlVec::from_array(controls.at(stage));
            adjoint_field(p, u.removal(), &s, &AdjointVec::from_array(*a)).to_array()
        },
        [0.0; 5],
        &grid,
        &[states.grid(), controls.grid()],
    )
}

/// Per-component L1 change and whether every component passed the test.
fn control_change(old: &Trajectory<9>, new: &Trajectory<9>, cfg: &FbsConfig) -> (f64, bool) {
    let mut diff = [0.0; 9];
    let mut size = [0.0; 9];
    for (o, n) in old.values().iter().zip(new.values()) {
        for c in 0..9 {
            diff[c] += (n[c] - o[c]).abs();
            size[c] += n[c].abs();
        }
    }
    let worst = diff.iter().copied().fold(0.0, f64::max);
    let ok = (0..9).all(|c| diff[c] <= cfg.rel_tol * size[c] + cfg.abs_tol);
    (worst, ok)
}

/// Solve the optimal-control problem for one scenario by forward-backward sweep.
///
/// Starts from zero controls. Each sweep integrates the states forward, the
/// costates backward from zero, applies the clamp formula and relaxes. Hitting
/// `max_iter` returns `converged = false` rather than an error.
pub fn forward_backward_sweep(
    p: &ModelParams,
    w: &CostWeights,
    bounds: &ControlBounds,
    mask: ScenarioMask,
    grid: &TimeGrid,
    y0: &StateVec,
    cfg: &FbsConfig,
) -> Result<OcSolution> {
    p.validate()?;
    w.validate()?;
    bounds.validate()?;
    cfg.validate()?;
    check_initial(y0)?;
    let bounds = bounds.masked(mask);
    let alpha = cfg.relaxation;

    let mut controls = Trajectory::constant(*grid, [0.0; 9]);
    let mut history = Vec::new();
    for iteration in 1..=cfg.max_iter {
        let states = simulate_controlled(p, y0, &controls)?;
        let adjoints = backward_costates(p, &states, &controls)?;
        let updated: Vec<[f64; 9]> = states
            .values()
            .iter()
            .zip(adjoints.values())
            .map(|(s, a)| {
                optimal_control_update(
                    &StateVec::from_array(*s),
                    &AdjointVec::from_array(*a),
                    w,
                    &bounds,
                    mask,
                )
                .to_array()
            })
            .collect();
        let updated = Trajectory::new(*grid, updated)?;
        let (change, converged) = control_change(&controls, &updated, cfg);
        history.push(SweepRecord {
            iteration,
            objective: cost_functional(&states, &controls, w, mask)?,
            change,
        });

        if converged || iteration == cfg.max_iter {
            let objective = objective(p, w, mask, y0, &updated)?;
            return Ok(OcSolution {
                mask,
                states,
                adjoints,
                controls: updated,
                objective,
                iterations: iteration,
                converged,
                history,
            });
        }

        let relaxed = controls
            .values()
            .iter()
            .zip(updated.values())
            .map(|(o, n)| std::array::from_fn(|c| alpha * n[c] + (1.0 - alpha) * o[c]))
            .collect();
        controls = Trajectory::new(*grid, relaxed)?;
    }
    unreachable!("loop returns on the last iteration")
}

/// Solve several scenarios in parallel; results keep the order of `masks`.
pub fn solve_scenarios(
    p: &ModelParams,
    w: &CostWeights,
    bounds: &ControlBounds,
    masks: &[ScenarioMask],
    grid: &TimeGrid,
    y0: &StateVec,
    cfg: &FbsConfig,
) -> Vec<Result<OcSolution>> {
    masks
        .par_iter()
        .map(|m| forward_backward_sweep(p, w, bounds, *m, grid, y0, cfg))
        .collect()
}

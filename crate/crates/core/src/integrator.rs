//! Fixed-step classical Runge-Kutta integration on a uniform grid.
//!
//! Forward passes march from `t0` to `t1`; backward passes march from `t1`
//! down to `t0` with the same nodes and store their result in forward time
//! order. Fields receive a [`Stage`] so that frozen trajectories (controls,
//! states) can be sampled at nodes and half-steps without any searching.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) || t1 <= t0 {
            return Err(Error::InvalidInput(format!(
                "time grid needs finite t1 > t0, got [{t0}, {t1}]"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidInput("time grid needs n_steps >= 1".into()));
        }
        Ok(Self { t0, t1, n_steps })
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps as f64
    }

    pub fn horizon(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time of node `i`. The last node is exactly `t1`.
    pub fn time(&self, i: usize) -> f64 {
        if i >= self.n_steps {
            self.t1
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time(i))
    }

    fn ensure_matches(&self, other: &TimeGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "grid mismatch: {self:?} vs {other:?}"
            )))
        }
    }
}

/// Evaluation point inside step `step`: `frac` is 0 at node `step`, 0.5 at the
/// half-step and 1 at node `step + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub step: usize,
    pub frac: f64,
    pub t: f64,
}

/// Per-node samples of a `D`-dimensional quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const D: usize> {
    grid: TimeGrid,
    values: Vec<[f64; D]>,
}

impl<const D: usize> Trajectory<D> {
    pub fn new(grid: TimeGrid, values: Vec<[f64; D]>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "trajectory has {} nodes, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("trajectory has non-finite entries".into()));
        }
        Ok(Self { grid, values })
    }

    /// Same value at every node.
    pub fn constant(grid: TimeGrid, value: [f64; D]) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; D]] {
        &self.values
    }

    pub fn node(&self, i: usize) -> [f64; D] {
        self.values[i]
    }

    pub fn last(&self) -> [f64; D] {
        self.values[self.values.len() - 1]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[j]).collect()
    }

    /// Value at a stage, linearly interpolated between the bracketing nodes.
    #[inline]
    pub fn at(&self, stage: Stage) -> [f64; D] {
        if stage.frac == 0.0 {
            return self.values[stage.step];
        }
        if stage.frac == 1.0 {
            return self.values[stage.step + 1];
        }
        let a = &self.values[stage.step];
        let b = &self.values[stage.step + 1];
        std::array::from_fn(|j| a[j] + stage.frac * (b[j] - a[j]))
    }

    /// Value at an arbitrary time in `[t0, t1]`, linearly interpolated.
    pub fn sample(&self, t: f64) -> Result<[f64; D]> {
        let g = &self.grid;
        let tol = 1e-9 * g.horizon();
        if !(t >= g.t0 - tol && t <= g.t1 + tol) {
            return Err(Error::InvalidInput(format!(
                "time {t} outside [{}, {}]",
                g.t0, g.t1
            )));
        }
        let pos = ((t - g.t0) / g.dt()).clamp(0.0, g.n_steps as f64);
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 {
            return Ok(self.values[nearest as usize]);
        }
        let step = (pos.floor() as usize).min(g.n_steps - 1);
        let frac = pos - step as f64;
        Ok(self.at(Stage { step, frac, t }))
    }
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, k: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|j| y[j] + h * k[j])
}

fn all_finite<const D: usize>(v: &[f64; D]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Classical RK4 from `grid.t0` to `grid.t1`.
///
/// The field is evaluated at the start node, twice at the half-step and at
/// the end node of each step.
pub fn rk4_forward<const D: usize, F>(mut field: F, y0: [f64; D], grid: &TimeGrid) -> Result<Trajectory<D>>
where
    F: FnMut(Stage, &[f64; D]) -> [f64; D],
{
    if !all_finite(&y0) {
        return Err(Error::InvalidInput("initial value is not finite".into()));
    }
    let dt = grid.dt();
    let mut values = Vec::with_capacity(grid.len());
    values.push(y0);
    let mut y = y0;
    for k in 0..grid.n_steps {
        let t = grid.time(k);
        let start = Stage { step: k, frac: 0.0, t };
        let mid = Stage { step: k, frac: 0.5, t: t + 0.5 * dt };
        let end = Stage { step: k, frac: 1.0, t: grid.time(k + 1) };

        let k1 = field(start, &y);
        let k2 = field(mid, &axpy(&y, 0.5 * dt, &k1));
        let k3 = field(mid, &axpy(&y, 0.5 * dt, &k2));
        let k4 = field(end, &axpy(&y, dt, &k3));
        let next: [f64; D] =
            std::array::from_fn(|j| y[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]));
        if !all_finite(&next) {
            return Err(Error::Divergence { step: k });
        }
        values.push(next);
        y = next;
    }
    Ok(Trajectory { grid: *grid, values })
}

/// Classical RK4 from `grid.t1` down to `grid.t0` with step `-dt`.
///
/// `frozen` lists the grids of every trajectory the field samples; each must
/// equal `grid`. The result is stored in forward time order and its last node
/// is exactly `y_terminal`.
pub fn rk4_backward<const D: usize, F>(
    mut field: F,
    y_terminal: [f64; D],
    grid: &TimeGrid,
    frozen: &[&TimeGrid],
) -> Result<Trajectory<D>>
where
    F: FnMut(Stage, &[f64; D]) -> [f64; D],
{
    for g in frozen {
        grid.ensure_matches(g)?;
    }
    if !all_finite(&y_terminal) {
        return Err(Error::InvalidInput("terminal value is not finite".into()));
    }
    let dt = grid.dt();
    let n = grid.n_steps;
    let mut values = vec![[0.0; D]; grid.len()];
    values[n] = y_terminal;
    let mut y = y_terminal;
    for k in (1..=n).rev() {
        let step = k - 1;
        let end = Stage { step, frac: 1.0, t: grid.time(k) };
        let mid = Stage { step, frac: 0.5, t: grid.time(step) + 0.5 * dt };
        let start = Stage { step, frac: 0.0, t: grid.time(step) };

        let k1 = field(end, &y);
        let k2 = field(mid, &axpy(&y, -0.5 * dt, &k1));
        let k3 = field(mid, &axpy(&y, -0.5 * dt, &k2));
        let k4 = field(start, &axpy(&y, -dt, &k3));
        let prev: [f64; D] =
            std::array::from_fn(|j| y[j] - dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]));
        if !all_finite(&prev) {
            return Err(Error::Divergence { step });
        }
        values[step] = prev;
        y = prev;
    }
    Ok(Trajectory { grid: *grid, values })
}

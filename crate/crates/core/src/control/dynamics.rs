use crate::error::{ensure_finite, Error, Result};
use crate::integrator::Trajectory;
use crate::model::{rhs_with_removal, ModelParams, StateVec};

use super::types::{AdjointVec, ControlBounds, ControlVec, CostWeights, Intervention, ScenarioMask};

/// Time derivative of the controlled system.
///
/// Controls only add outflow on `T_l`, `T_d` and `T_t`; with `u = 0` this is
/// bit-identical to [`crate::model::base_rhs`].
pub fn controlled_rhs(p: &ModelParams, u: &ControlVec, s: &StateVec) -> Result<StateVec> {
    p.validate()?;
    u.validate()?;
    ensure_finite(&s.to_array(), "state")?;
    Ok(rhs_with_removal(p, s, u.removal()))
}

/// Like [`controlled_rhs`] but rejects controls above `bounds`.
pub fn controlled_rhs_bounded(
    p: &ModelParams,
    u: &ControlVec,
    bounds: &ControlBounds,
    s: &StateVec,
) -> Result<StateVec> {
    if !bounds.contains(u) {
        return Err(Error::InvalidInput(format!(
            "controls {u:?} outside bounds {:?}",
            bounds.upper
        )));
    }
    controlled_rhs(p, u, s)
}

/// Running cost: prevalence `T_l + T_d + T_t` plus `A_f * Σ u²` for each
/// active family.
#[inline]
pub fn running_cost(s: &StateVec, u: &ControlVec, w: &CostWeights, mask: ScenarioMask) -> f64 {
    let mut cost = s.t_l + s.t_d + s.t_t;
    for f in mask.active() {
        let c = u.family(f);
        cost += w.weight(f) * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    }
    cost
}

/// Composite trapezoid integral of the running cost.
pub fn cost_functional(
    states: &Trajectory<5>,
    controls: &Trajectory<9>,
    w: &CostWeights,
    mask: ScenarioMask,
) -> Result<f64> {
    if states.grid() != controls.grid() {
        return Err(Error::InvalidInput(format!(
            "state grid {:?} differs from control grid {:?}",
            states.grid(),
            controls.grid()
        )));
    }
    let dt = states.grid().dt();
    let costs: Vec<f64> = states
        .values()
        .iter()
        .zip(controls.values())
        .map(|(s, u)| {
            running_cost(
                &StateVec::from_array(*s),
                &ControlVec::from_array(*u),
                w,
                mask,
            )
        })
        .collect();
    let n = costs.len();
    let interior: f64 = costs[1..n - 1].iter().sum();
    Ok(dt * (0.5 * (costs[0] + costs[n - 1]) + interior))
}

/// `H = L + a · f(s, u)` with every control family priced.
pub fn hamiltonian(
    s: &StateVec,
    a: &AdjointVec,
    u: &ControlVec,
    p: &ModelParams,
    w: &CostWeights,
) -> Result<f64> {
    ensure_finite(&a.to_array(), "adjoint")?;
    let f = controlled_rhs(p, u, s)?;
    let l = running_cost(s, u, w, ScenarioMask::ALL_ACTIVE);
    Ok(l + a
        .to_array()
        .iter()
        .zip(f.to_array())
        .map(|(ai, fi)| ai * fi)
        .sum::<f64>())
}

/// Costate field `-∂H/∂x` for a given total removal per compartment.
#[inline]
pub(crate) fn adjoint_field(p: &ModelParams, removal: [f64; 3], s: &StateVec, a: &AdjointVec) -> AdjointVec {
    let force = p.infection_rate * s.t_l;
    let contact = p.infection_rate * s.u;
    AdjointVec {
        u: (p.direct_disease_rate + p.death_uninfected + force) * a.u
            - force * a.t_l
            - p.direct_disease_rate * a.t_d,
        t_l: -1.0 + contact * a.u
            + (p.progression_rate + removal[0] + p.death_latent - contact) * a.t_l
            - p.progression_rate * a.t_d,
        t_d: -1.0
            + (p.treatment_rate + removal[1] + p.death_diseased + p.natural_cure_rate) * a.t_d
            - p.treatment_rate * a.t_t,
        t_t: -1.0 - p.default_rate * a.t_d
            + (p.recovery_rate + p.default_rate + removal[2] + p.death_treated) * a.t_t
            - p.recovery_rate * a.r,
        r: -p.recurrence_rate * a.t_d + (p.recurrence_rate + p.death_recovered) * a.r,
    }
}

/// Costate derivatives `dλ/dt = -∂H/∂x`.
pub fn adjoint_rhs(p: &ModelParams, u: &ControlVec, s: &StateVec, a: &AdjointVec) -> Result<AdjointVec> {
    p.validate()?;
    u.validate()?;
    ensure_finite(&s.to_array(), "state")?;
    ensure_finite(&a.to_array(), "adjoint")?;
    Ok(adjoint_field(p, u.removal(), s, a))
}

/// Pointwise minimiser of `H` over the box: `clamp(λ_j x_j / (2 A_f), 0, bound)`.
///
/// Families switched off by the mask are forced to zero.
pub fn optimal_control_update(
    s: &StateVec,
    a: &AdjointVec,
    w: &CostWeights,
    bounds: &ControlBounds,
    mask: ScenarioMask,
) -> ControlVec {
    let pressure = [a.t_l * s.t_l, a.t_d * s.t_d, a.t_t * s.t_t];
    let mut u = ControlVec::zero();
    for f in mask.active() {
        let hi = bounds.upper.family(f);
        let two_a = 2.0 * w.weight(f);
        let out = u.family_mut(f);
        for j in 0..3 {
            out[j] = (pressure[j] / two_a).max(0.0).min(hi[j]);
        }
    }
    u
}

/// Per-node family totals `[μT, μM, μD, μT + μM + μD]`.
///
/// Families outside the mask contribute zero.
pub fn aggregate_controls(controls: &Trajectory<9>, mask: ScenarioMask) -> Trajectory<4> {
    let values = controls
        .values()
        .iter()
        .map(|v| {
            let u = ControlVec::from_array(*v);
            let mut out = [0.0; 4];
            for f in mask.active() {
                let c = u.family(f);
                out[f.index()] = c[0] + c[1] + c[2];
            }
            out[3] = out[0] + out[1] + out[2];
            out
        })
        .collect();
    Trajectory::new(*controls.grid(), values).expect("sums of finite controls are finite")
}

/// Names of the aggregate columns, matching [`aggregate_controls`].
pub const AGGREGATE_NAMES: [&str; 4] = ["muT", "muM", "muD", "mu_total"];

impl Intervention {
    pub fn aggregate_name(self) -> &'static str {
        AGGREGATE_NAMES[self.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::TimeGrid;
    use crate::model::base_rhs;

    fn sample_state() -> StateVec {
        StateVec::new(755.7, 344.3, 23.1, 1.892, 0.16082)
    }

    #[test]
    fn zero_controls_reduce_to_base() {
        let p = ModelParams::reference();
        let s = sample_state();
        assert_eq!(
            controlled_rhs(&p, &ControlVec::zero(), &s).unwrap(),
            base_rhs(&p, &s).unwrap()
        );
    }

    #[test]
    fn latent_control_removes_exactly() {
        let p = ModelParams::reference();
        let s = StateVec::new(100.0, 10.0, 5.0, 2.0, 1.0);
        let mut u = ControlVec::zero();
        u.tpt[0] = 0.1;
        let base = base_rhs(&p, &s).unwrap();
        let ctl = controlled_rhs(&p, &u, &s).unwrap();
        assert!((base.t_l - ctl.t_l - 1.0).abs() < 1e-12);
        assert_eq!(base.u, ctl.u);
        assert_eq!(base.r, ctl.r);
    }

    #[test]
    fn bounded_rhs_rejects_excess() {
        let p = ModelParams::reference();
        let u = ControlVec::uniform(1.5);
        assert!(controlled_rhs_bounded(&p, &u, &ControlBounds::default(), &sample_state()).is_err());
        assert!(controlled_rhs(&p, &ControlVec::uniform(-0.1), &sample_state()).is_err());
    }

    #[test]
    fn cost_of_constant_control() {
        let grid = TimeGrid::new(0.0, 60.0, 600).unwrap();
        let states = Trajectory::constant(grid, [10.0, 0.0, 0.0, 0.0, 3.0]);
        let mut u = ControlVec::zero();
        u.tpt[0] = 1.0;
        let controls = Trajectory::constant(grid, u.to_array());
        let w = CostWeights::default();
        let j = cost_functional(&states, &controls, &w, ScenarioMask::ALL_ACTIVE).unwrap();
        assert!((j - 3300.0).abs() < 1e-9);
        // Masked-off families are not priced.
        let j = cost_functional(&states, &controls, &w, ScenarioMask::new(false, true, false)).unwrap();
        assert_eq!(j, 0.0);
    }

    #[test]
    fn cost_of_constant_prevalence() {
        let grid = TimeGrid::new(0.0, 60.0, 120).unwrap();
        let states = Trajectory::constant(grid, [0.0, 1.0, 2.0, 0.5, 0.0]);
        let controls = Trajectory::constant(grid, [0.0; 9]);
        let j = cost_functional(&states, &controls, &CostWeights::default(), ScenarioMask::NONE).unwrap();
        assert!((j - 210.0).abs() < 1e-9);
    }

    #[test]
    fn cost_rejects_mismatched_grids() {
        let a = TimeGrid::new(0.0, 60.0, 10).unwrap();
        let b = TimeGrid::new(0.0, 60.0, 20).unwrap();
        let states = Trajectory::constant(a, [0.0; 5]);
        let controls = Trajectory::constant(b, [0.0; 9]);
        assert!(cost_functional(&states, &controls, &CostWeights::default(), ScenarioMask::NONE).is_err());
    }

    #[test]
    fn hamiltonian_simple_cases() {
        let p = ModelParams::reference();
        let w = CostWeights::default();
        let s = sample_state();
        let zero = AdjointVec::default();
        let h = hamiltonian(&s, &zero, &ControlVec::zero(), &p, &w).unwrap();
        assert!((h - (s.t_l + s.t_d + s.t_t)).abs() < 1e-12);

        let mut u = ControlVec::zero();
        u.tpt[0] = 1.0;
        let h = hamiltonian(&StateVec::zero(), &zero, &u, &p, &w).unwrap();
        assert_eq!(h, 55.0);
    }

    #[test]
    fn hamiltonian_matches_hand_arithmetic() {
        let p = ModelParams::reference();
        let w = CostWeights::default();
        let s = StateVec::new(100.0, 20.0, 5.0, 2.0, 1.0);
        let a = AdjointVec::new(0.5, 2.0, 3.0, 1.0, 0.25);
        let mut u = ControlVec::zero();
        u.tpt[0] = 0.2;
        u.mn[1] = 0.1;
        u.diabetes[2] = 0.3;
        // Term by term with the reference rates.
        let f_u = 304.17 - 0.0838 * 100.0 - 0.0053 * 20.0 * 100.0;
        let f_tl = 0.0053 * 20.0 * 100.0 - (0.2 + 0.2 + 0.001) * 20.0;
        let f_td = 0.083 * 100.0 + 0.2 * 20.0 - (0.241 + 0.1 + 0.001 + 0.013) * 5.0
            + 0.0891 * 2.0
            + 0.0003 * 1.0;
        let f_tt = 0.241 * 5.0 - (0.10 + 0.0891 + 0.3 + 0.001) * 2.0;
        let f_r = 0.10 * 2.0 - (0.0003 + 0.0008) * 1.0;
        let l = 27.0 + 55.0 * 0.04 + 30.0 * 0.01 + 100.0 * 0.09;
        let expected = l + 0.5 * f_u + 2.0 * f_tl + 3.0 * f_td + 1.0 * f_tt + 0.25 * f_r;
        let h = hamiltonian(&s, &a, &u, &p, &w).unwrap();
        assert!((h - expected).abs() < 1e-10, "{h} vs {expected}");
    }

    #[test]
    fn zero_costate_derivative() {
        let p = ModelParams::reference();
        let d = adjoint_rhs(&p, &ControlVec::uniform(0.3), &sample_state(), &AdjointVec::default()).unwrap();
        assert_eq!(d.to_array(), [0.0, -1.0, -1.0, -1.0, 0.0]);
    }

    #[test]
    fn recovered_costate_decay() {
        let p = ModelParams::reference();
        let a = AdjointVec::new(1.0, 2.0, 0.0, 3.0, 4.0);
        let d = adjoint_rhs(&p, &ControlVec::zero(), &sample_state(), &a).unwrap();
        assert!((d.r - 4.0 * (0.0003 + 0.0008)).abs() < 1e-15);
    }

    #[test]
    fn costates_match_finite_differences() {
        let p = ModelParams::reference();
        let w = CostWeights::default();
        let s = StateVec::new(120.0, 40.0, 6.0, 3.0, 2.0);
        let a = AdjointVec::new(0.7, 1.3, 2.1, 0.9, 0.4);
        let mut u = ControlVec::zero();
        u.tpt = [0.1, 0.2, 0.05];
        u.diabetes = [0.3, 0.0, 0.15];
        let d = adjoint_rhs(&p, &u, &s, &a).unwrap().to_array();
        let x = s.to_array();
        for i in 0..5 {
            let h = 1e-4 * x[i].abs().max(1.0);
            let mut up = x;
            let mut dn = x;
            up[i] += h;
            dn[i] -= h;
            let hp = hamiltonian(&StateVec::from_array(up), &a, &u, &p, &w).unwrap();
            let hm = hamiltonian(&StateVec::from_array(dn), &a, &u, &p, &w).unwrap();
            let grad = (hp - hm) / (2.0 * h);
            let rel = (-grad - d[i]).abs() / d[i].abs().max(1e-12);
            assert!(rel < 1e-6, "component {i}: fd {} vs {}", -grad, d[i]);
        }
    }

    #[test]
    fn clamp_formula() {
        let w = CostWeights::default();
        let bounds = ControlBounds::default();
        let s = StateVec::new(0.0, 1.0, 0.0, 0.0, 0.0);
        let a = AdjointVec::new(0.0, 110.0, 0.0, 0.0, 0.0);
        let u = optimal_control_update(&s, &a, &w, &bounds, ScenarioMask::ALL_ACTIVE);
        assert_eq!(u.tpt[0], 1.0);
        assert!((u.mn[0] - 1.0).abs() < 1e-15); // 110/60 clipped
        assert!((u.diabetes[0] - 0.55).abs() < 1e-15);

        let s = StateVec::new(1.0, 1.0, 1.0, 1.0, 1.0);
        let a = AdjointVec::new(1.0, -3.0, -1.0, 1000.0, 1.0);
        let u = optimal_control_update(&s, &a, &w, &ControlBounds::uniform(0.5), ScenarioMask::ALL_ACTIVE);
        for f in Intervention::ALL {
            assert_eq!(u.family(f)[0], 0.0);
            assert_eq!(u.family(f)[1], 0.0);
        }
        assert_eq!(u.diabetes[2], 0.5);

        let u = optimal_control_update(&s, &a, &w, &ControlBounds::uniform(0.5), ScenarioMask::new(true, false, false));
        assert_eq!(u.mn, [0.0; 3]);
        assert_eq!(u.diabetes, [0.0; 3]);
        assert_eq!(u.tpt[2], 0.5);
    }

    #[test]
    fn aggregates_sum_families() {
        let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let mut u = ControlVec::zero();
        u.tpt = [0.1, 0.2, 0.3];
        u.diabetes = [0.05, 0.0, 0.0];
        let agg = aggregate_controls(&Trajectory::constant(grid, u.to_array()), ScenarioMask::ALL_ACTIVE);
        let v = agg.node(1);
        assert!((v[0] - 0.6).abs() < 1e-15);
        assert_eq!(v[1], 0.0);
        assert!((v[3] - 0.65).abs() < 1e-15);
        let zero = aggregate_controls(&Trajectory::constant(grid, [0.0; 9]), ScenarioMask::ALL_ACTIVE);
        assert!(zero.values().iter().flatten().all(|x| *x == 0.0));
    }
}

//! Uncontrolled five-compartment TB transmission dynamics.
//!
//! Compartments: uninfected `U`, latent infection `T_l`, active disease `T_d`,
//! under treatment `T_t`, recovered `R`. Time is measured in months.
//!
//! ```text
//! dU/dt   = b - (λ1 + μ1) U - λ2 T_l U
//! dT_l/dt = λ2 T_l U - (λ3 + μ2) T_l
//! dT_d/dt = λ1 U + λ3 T_l - (λ4 + μ3 + σ) T_d + λ6 T_t + λ7 R
//! dT_t/dt = λ4 T_d - (λ5 + λ6 + μ4) T_t
//! dR/dt   = λ5 T_t - (λ7 + μ5) R
//! ```

use nalgebra::{Matrix3, Matrix5, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Max-norm residual below which a point counts as an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;
/// Iteration cap for the endemic root finder.
pub const ROOT_MAX_ITER: usize = 200;

/// Compartment populations at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateVec {
    pub u: f64,
    pub t_l: f64,
    pub t_d: f64,
    pub t_t: f64,
    pub r: f64,
}

impl StateVec {
    pub const fn new(u: f64, t_l: f64, t_d: f64, t_t: f64, r: f64) -> Self {
        Self { u, t_l, t_d, t_t, r }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.u, self.t_l, self.t_d, self.t_t, self.r]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    /// Total population `N`.
    pub fn total(&self) -> f64 {
        self.u + self.t_l + self.t_d + self.t_t + self.r
    }

    /// Infected burden `T_l + T_d + T_t`.
    pub fn infected(&self) -> f64 {
        self.t_l + self.t_d + self.t_t
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self::from_array(self.to_array().map(|v| v * factor))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Rate constants of the model, per month.
///
/// Field names follow the transition each rate drives; the usual symbols are
/// noted alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// λ1: uninfected to active disease.
    pub direct_disease_rate: f64,
    /// λ2: mass-action infection coefficient (uninfected to latent).
    pub infection_rate: f64,
    /// λ3: latent to active disease.
    pub progression_rate: f64,
    /// λ4: active disease to treatment.
    pub treatment_rate: f64,
    /// λ5: treatment to recovered.
    pub recovery_rate: f64,
    /// λ6: treatment default, back to active disease.
    pub default_rate: f64,
    /// λ7: recurrence, recovered to active disease.
    pub recurrence_rate: f64,
    /// b: inflow into the uninfected compartment.
    pub birth_inflow: f64,
    /// σ: natural cure of active disease.
    pub natural_cure_rate: f64,
    /// μ1..μ5: death rates of U, T_l, T_d, T_t, R.
    pub death_uninfected: f64,
    pub death_latent: f64,
    pub death_diseased: f64,
    pub death_treated: f64,
    pub death_recovered: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl ModelParams {
    /// Reference parameter set used throughout the simulations.
    pub const fn reference() -> Self {
        Self {
            direct_disease_rate: 0.083,
            infection_rate: 0.0053,
            progression_rate: 0.2,
            treatment_rate: 0.241,
            recovery_rate: 0.10,
            default_rate: 0.0891,
            recurrence_rate: 0.0003,
            birth_inflow: 304.17,
            natural_cure_rate: 0.013,
            death_uninfected: 0.0008,
            death_latent: 0.001,
            death_diseased: 0.001,
            death_treated: 0.001,
            death_recovered: 0.0008,
        }
    }

    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::DirectDiseaseRate => self.direct_disease_rate,
            ParamId::InfectionRate => self.infection_rate,
            ParamId::ProgressionRate => self.progression_rate,
            ParamId::TreatmentRate => self.treatment_rate,
            ParamId::RecoveryRate => self.recovery_rate,
            ParamId::DefaultRate => self.default_rate,
            ParamId::RecurrenceRate => self.recurrence_rate,
            ParamId::BirthInflow => self.birth_inflow,
            ParamId::NaturalCureRate => self.natural_cure_rate,
            ParamId::DeathUninfected => self.death_uninfected,
            ParamId::DeathLatent => self.death_latent,
            ParamId::DeathDiseased => self.death_diseased,
            ParamId::DeathTreated => self.death_treated,
            ParamId::DeathRecovered => self.death_recovered,
        }
    }

    pub fn set(&mut self, id: ParamId, value: f64) {
        let slot = match id {
            ParamId::DirectDiseaseRate => &mut self.direct_disease_rate,
            ParamId::InfectionRate => &mut self.infection_rate,
            ParamId::ProgressionRate => &mut self.progression_rate,
            ParamId::TreatmentRate => &mut self.treatment_rate,
            ParamId::RecoveryRate => &mut self.recovery_rate,
            ParamId::DefaultRate => &mut self.default_rate,
            ParamId::RecurrenceRate => &mut self.recurrence_rate,
            ParamId::BirthInflow => &mut self.birth_inflow,
            ParamId::NaturalCureRate => &mut self.natural_cure_rate,
            ParamId::DeathUninfected => &mut self.death_uninfected,
            ParamId::DeathLatent => &mut self.death_latent,
            ParamId::DeathDiseased => &mut self.death_diseased,
            ParamId::DeathTreated => &mut self.death_treated,
            ParamId::DeathRecovered => &mut self.death_recovered,
        };
        *slot = value;
    }

    pub fn with(mut self, id: ParamId, value: f64) -> Self {
        self.set(id, value);
        self
    }

    /// Every rate finite and nonnegative, death rates strictly positive.
    /// The birth inflow may be zero (the origin is then the disease-free state).
    pub fn validate(&self) -> Result<()> {
        for id in ParamId::ALL {
            let v = self.get(id);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "parameter {} must be finite and >= 0, got {v}",
                    id.key()
                )));
            }
        }
        for id in ParamId::DEATHS {
            if self.get(id) <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "death rate {} must be > 0",
                    id.key()
                )));
            }
        }
        Ok(())
    }

    /// Total outflow rate of `U` excluding infection: λ1 + μ1.
    pub fn uninfected_outflow(&self) -> f64 {
        self.direct_disease_rate + self.death_uninfected
    }

    /// Total outflow rate of `T_l`: λ3 + μ2.
    pub fn latent_outflow(&self) -> f64 {
        self.progression_rate + self.death_latent
    }

    /// Total outflow rate of `T_d`: λ4 + μ3 + σ.
    pub fn diseased_outflow(&self) -> f64 {
        self.treatment_rate + self.death_diseased + self.natural_cure_rate
    }

    /// Total outflow rate of `T_t`: λ5 + λ6 + μ4.
    pub fn treated_outflow(&self) -> f64 {
        self.recovery_rate + self.default_rate + self.death_treated
    }

    /// Total outflow rate of `R`: λ7 + μ5.
    pub fn recovered_outflow(&self) -> f64 {
        self.recurrence_rate + self.death_recovered
    }
}

/// Addressable model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamId {
    DirectDiseaseRate,
    InfectionRate,
    ProgressionRate,
    TreatmentRate,
    RecoveryRate,
    DefaultRate,
    RecurrenceRate,
    BirthInflow,
    NaturalCureRate,
    DeathUninfected,
    DeathLatent,
    DeathDiseased,
    DeathTreated,
    DeathRecovered,
}

impl ParamId {
    pub const ALL: [ParamId; 14] = [
        ParamId::DirectDiseaseRate,
        ParamId::InfectionRate,
        ParamId::ProgressionRate,
        ParamId::TreatmentRate,
        ParamId::RecoveryRate,
        ParamId::DefaultRate,
        ParamId::RecurrenceRate,
        ParamId::BirthInflow,
        ParamId::NaturalCureRate,
        ParamId::DeathUninfected,
        ParamId::DeathLatent,
        ParamId::DeathDiseased,
        ParamId::DeathTreated,
        ParamId::DeathRecovered,
    ];

    const DEATHS: [ParamId; 5] = [
        ParamId::DeathUninfected,
        ParamId::DeathLatent,
        ParamId::DeathDiseased,
        ParamId::DeathTreated,
        ParamId::DeathRecovered,
    ];

    /// The parameters entering the basic reproduction number.
    pub const R0_INPUTS: [ParamId; 6] = [
        ParamId::DirectDiseaseRate,
        ParamId::InfectionRate,
        ParamId::ProgressionRate,
        ParamId::BirthInflow,
        ParamId::DeathUninfected,
        ParamId::DeathLatent,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ParamId::DirectDiseaseRate => "direct_disease_rate",
            ParamId::InfectionRate => "infection_rate",
            ParamId::ProgressionRate => "progression_rate",
            ParamId::TreatmentRate => "treatment_rate",
            ParamId::RecoveryRate => "recovery_rate",
            ParamId::DefaultRate => "default_rate",
            ParamId::RecurrenceRate => "recurrence_rate",
            ParamId::BirthInflow => "birth_inflow",
            ParamId::NaturalCureRate => "natural_cure_rate",
            ParamId::DeathUninfected => "death_uninfected",
            ParamId::DeathLatent => "death_latent",
            ParamId::DeathDiseased => "death_diseased",
            ParamId::DeathTreated => "death_treated",
            ParamId::DeathRecovered => "death_recovered",
        }
    }

    /// Conventional symbol (`lambda1`, `b`, `mu2`, ...).
    pub fn symbol(self) -> &'static str {
        match self {
            ParamId::DirectDiseaseRate => "lambda1",
            ParamId::InfectionRate => "lambda2",
            ParamId::ProgressionRate => "lambda3",
            ParamId::TreatmentRate => "lambda4",
            ParamId::RecoveryRate => "lambda5",
            ParamId::DefaultRate => "lambda6",
            ParamId::RecurrenceRate => "lambda7",
            ParamId::BirthInflow => "b",
            ParamId::NaturalCureRate => "sigma",
            ParamId::DeathUninfected => "mu1",
            ParamId::DeathLatent => "mu2",
            ParamId::DeathDiseased => "mu3",
            ParamId::DeathTreated => "mu4",
            ParamId::DeathRecovered => "mu5",
        }
    }

    /// Accepts either the field key or the symbol.
    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.key() == name || id.symbol() == name)
    }
}

impl std::fmt::Display for ParamId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

/// Right-hand side with extra removal rates on `T_l`, `T_d`, `T_t`.
///
/// Shared by the uncontrolled and controlled systems so that zero controls
/// reproduce the uncontrolled field bit for bit.
#[inline]
pub(crate) fn rhs_with_removal(p: &ModelParams, s: &StateVec, removal: [f64; 3]) -> StateVec {
    let infection = p.infection_rate * s.t_l * s.u;
    StateVec {
        u: p.birth_inflow - (p.direct_disease_rate + p.death_uninfected) * s.u - infection,
        t_l: infection - (p.progression_rate + removal[0] + p.death_latent) * s.t_l,
        t_d: p.direct_disease_rate * s.u + p.progression_rate * s.t_l
            - (p.treatment_rate + removal[1] + p.death_diseased + p.natural_cure_rate) * s.t_d
            + p.default_rate * s.t_t
            + p.recurrence_rate * s.r,
        t_t: p.treatment_rate * s.t_d
            - (p.recovery_rate + p.default_rate + removal[2] + p.death_treated) * s.t_t,
        r: p.recovery_rate * s.t_t - (p.recurrence_rate + p.death_recovered) * s.r,
    }
}

/// Time derivative of the uncontrolled system.
pub fn base_rhs(p: &ModelParams, s: &StateVec) -> Result<StateVec> {
    p.validate()?;
    ensure_finite(&s.to_array(), "state")?;
    Ok(rhs_with_removal(p, s, [0.0; 3]))
}

/// `R0 = λ2 b / ((λ1 + μ1)(λ3 + μ2))`.
pub fn r0_closed_form(p: &ModelParams) -> Result<f64> {
    let denom = p.uninfected_outflow() * p.latent_outflow();
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::Domain(
            "(λ1 + μ1)(λ3 + μ2) must be positive".to_string(),
        ));
    }
    Ok(p.infection_rate * p.birth_inflow / denom)
}

/// Spectral radius of the next-generation matrix `F V⁻¹` at the
/// disease-free point, over the infected block `(T_l, T_d, T_t)`.
///
/// `V` is the transition Jacobian with outflows counted positive.
pub fn r0_next_generation(p: &ModelParams) -> Result<f64> {
    p.validate()?;
    let u0 = p.birth_inflow / p.uninfected_outflow();
    let f = Matrix3::new(
        p.infection_rate * u0, 0.0, 0.0,
        0.0, 0.0, 0.0,
        0.0, 0.0, 0.0,
    );
    let v = next_generation_transfer(p);
    let v_inv = v
        .try_inverse()
        .ok_or_else(|| Error::Numerical("transfer matrix V is singular".to_string()))?;
    let k = f * v_inv;
    let radius = k
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if !radius.is_finite() {
        return Err(Error::Numerical("non-finite spectral radius".to_string()));
    }
    Ok(radius)
}

/// Transfer Jacobian `V` (outflows positive) for `(T_l, T_d, T_t)`.
pub fn next_generation_transfer(p: &ModelParams) -> Matrix3<f64> {
    Matrix3::new(
        p.latent_outflow(), 0.0, 0.0,
        -p.progression_rate, p.diseased_outflow(), -p.default_rate,
        0.0, -p.treatment_rate, p.treated_outflow(),
    )
}

/// A candidate steady state with its residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub state: StateVec,
    /// Max-norm of the right-hand side at `state`.
    pub residual_norm: f64,
    pub is_valid_equilibrium: bool,
}

impl EquilibriumPoint {
    fn evaluate(p: &ModelParams, state: StateVec) -> Self {
        let residual_norm = rhs_with_removal(p, &state, [0.0; 3]).max_abs();
        Self {
            state,
            residual_norm,
            is_valid_equilibrium: residual_norm <= EQUILIBRIUM_TOL,
        }
    }
}

/// The disease-free point `(b / (λ1 + μ1), 0, 0, 0, 0)`.
///
/// The point is returned as is; when `λ1 > 0` the direct-disease inflow keeps
/// `dT_d/dt` positive there and `is_valid_equilibrium` is false.
pub fn disease_free_equilibrium(p: &ModelParams) -> Result<EquilibriumPoint> {
    p.validate()?;
    let outflow = p.uninfected_outflow();
    if outflow <= 0.0 {
        return Err(Error::Domain("λ1 + μ1 must be positive".to_string()));
    }
    let state = StateVec::new(p.birth_inflow / outflow, 0.0, 0.0, 0.0, 0.0);
    Ok(EquilibriumPoint::evaluate(p, state))
}

/// Closed-form endemic point, used as the seed for [`endemic_equilibrium`].
pub fn endemic_seed(p: &ModelParams) -> Result<StateVec> {
    p.validate()?;
    if p.infection_rate <= 0.0 {
        return Err(Error::Domain("endemic point requires λ2 > 0".to_string()));
    }
    let l2 = p.infection_rate;
    let a = p.latent_outflow();
    let b_rate = p.treated_outflow();
    let c = p.diseased_outflow();
    let d = p.birth_inflow * l2 - p.uninfected_outflow() * a;
    let x = -(p.direct_disease_rate * a / l2 + p.progression_rate * d / (l2 * a));
    let y = p.recurrence_rate * p.recovery_rate / p.recovered_outflow() - b_rate * c / p.treatment_rate
        + p.default_rate;

    let t_t = x / y;
    let seed = StateVec {
        u: a / l2,
        t_l: d / (a * l2),
        t_d: b_rate * t_t / p.treatment_rate,
        t_t,
        r: p.recovery_rate * t_t / p.recovered_outflow(),
    };
    if !seed.is_finite() {
        return Err(Error::Domain(
            "closed-form endemic point is not finite for these parameters".to_string(),
        ));
    }
    Ok(seed)
}

fn jacobian(p: &ModelParams, s: &StateVec) -> Matrix5<f64> {
    let l2 = p.infection_rate;
    Matrix5::new(
        -p.uninfected_outflow() - l2 * s.t_l, -l2 * s.u, 0.0, 0.0, 0.0,
        l2 * s.t_l, l2 * s.u - p.latent_outflow(), 0.0, 0.0, 0.0,
        p.direct_disease_rate, p.progression_rate, -p.diseased_outflow(), p.default_rate, p.recurrence_rate,
        0.0, 0.0, p.treatment_rate, -p.treated_outflow(), 0.0,
        0.0, 0.0, 0.0, p.recovery_rate, -p.recovered_outflow(),
    )
}

/// Endemic steady state: closed-form seed refined by damped Newton on the
/// right-hand side.
pub fn endemic_equilibrium(p: &ModelParams) -> Result<EquilibriumPoint> {
    newton_refine(p, endemic_seed(p)?)
}

fn newton_refine(p: &ModelParams, start: StateVec) -> Result<EquilibriumPoint> {
    let mut x = start;
    let mut fx = rhs_with_removal(p, &x, [0.0; 3]);
    let mut res = fx.max_abs();

    for _ in 0..ROOT_MAX_ITER {
        if res <= EQUILIBRIUM_TOL {
            return Ok(EquilibriumPoint::evaluate(p, x));
        }
        let rhs = -Vector5::from(fx.to_array());
        let step = jacobian(p, &x)
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular Jacobian in Newton step".to_string()))?;

        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = StateVec::from_array(std::array::from_fn(|i| {
                x.to_array()[i] + damping * step[i]
            }));
            let f_trial = rhs_with_removal(p, &trial, [0.0; 3]);
            let r_trial = f_trial.max_abs();
            if r_trial.is_finite() && r_trial < res {
                x = trial;
                fx = f_trial;
                res = r_trial;
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    if res <= EQUILIBRIUM_TOL {
        Ok(EquilibriumPoint::evaluate(p, x))
    } else {
        Err(Error::Convergence {
            iterations: ROOT_MAX_ITER,
            residual: res,
            best: x,
        })
    }
}

/// `ω = min{μ3 + σ, μ1, μ2, μ4, μ5}`.
pub fn attraction_rate(p: &ModelParams) -> f64 {
    [
        p.death_diseased + p.natural_cure_rate,
        p.death_uninfected,
        p.death_latent,
        p.death_treated,
        p.death_recovered,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// Upper bound `b / ω` on the eventual total population.
pub fn feasible_bound(p: &ModelParams) -> Result<f64> {
    let omega = attraction_rate(p);
    if omega <= 0.0 || !omega.is_finite() {
        return Err(Error::Domain("ω must be positive".to_string()));
    }
    Ok(p.birth_inflow / omega)
}

/// Largest step for which fixed-step RK4 stays well inside its real-axis
/// stability interval along any trajectory from `s0`.
///
/// `U + T_l` never exceeds `max(U0 + T_l0, b / min(λ1 + μ1, λ3 + μ2))`, which
/// bounds the mass-action rates `λ2 U` and `λ2 T_l`. `removal` adds control
/// outflows on `T_l`, `T_d`, `T_t`. The returned step keeps `dt · ρ ≤ 2`
/// (RK4 loses stability at about 2.79).
pub fn max_stable_step(p: &ModelParams, s0: &StateVec, removal: [f64; 3]) -> f64 {
    let slowest = p.uninfected_outflow().min(p.latent_outflow());
    let reservoir = (s0.u + s0.t_l).max(p.birth_inflow / slowest);
    let linear = [
        p.uninfected_outflow(),
        p.latent_outflow() + removal[0],
        p.diseased_outflow() + removal[1],
        p.treated_outflow() + removal[2],
        p.recovered_outflow(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    2.0 / (p.infection_rate * reservoir + linear)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ModelParams {
        ModelParams::reference()
    }

    #[test]
    fn dfe_is_fixed_point_without_direct_progression() {
        let p = table().with(ParamId::DirectDiseaseRate, 0.0);
        let s = StateVec::new(p.birth_inflow / p.death_uninfected, 0.0, 0.0, 0.0, 0.0);
        let d = base_rhs(&p, &s).unwrap();
        assert!(d.max_abs() < 1e-10, "{d:?}");
    }

    #[test]
    fn latent_boundary_is_invariant() {
        let s = StateVec::new(500.0, 0.0, 12.0, 3.0, 1.0);
        assert_eq!(base_rhs(&table(), &s).unwrap().t_l, 0.0);
    }

    #[test]
    fn base_rhs_term_by_term() {
        // Each equation spelled out on its own with the reference values.
        let s = StateVec::new(1000.0, 100.0, 10.0, 5.0, 1.0);
        let d = base_rhs(&table(), &s).unwrap();
        let du = 304.17 - (0.083 + 0.0008) * 1000.0 - 0.0053 * 100.0 * 1000.0;
        let dtl = 0.0053 * 100.0 * 1000.0 - (0.2 + 0.001) * 100.0;
        let dtd = 0.083 * 1000.0 + 0.2 * 100.0 - (0.241 + 0.001 + 0.013) * 10.0 + 0.0891 * 5.0
            + 0.0003 * 1.0;
        let dtt = 0.241 * 10.0 - (0.10 + 0.0891 + 0.001) * 5.0;
        let dr = 0.10 * 5.0 - (0.0003 + 0.0008) * 1.0;
        // Hand values: -309.63, 509.9, 100.8958, 1.4595, 0.4989
        for (got, want, hand) in [
            (d.u, du, -309.63),
            (d.t_l, dtl, 509.9),
            (d.t_d, dtd, 100.8958),
            (d.t_t, dtt, 1.4595),
            (d.r, dr, 0.4989),
        ] {
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0));
            assert!((got - hand).abs() < 1e-9, "{got} vs {hand}");
        }
    }

    #[test]
    fn base_rhs_rejects_non_finite() {
        let s = StateVec::new(f64::NAN, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(base_rhs(&table(), &s), Err(Error::InvalidInput(_))));
        let p = table().with(ParamId::InfectionRate, f64::INFINITY);
        assert!(base_rhs(&p, &StateVec::zero()).is_err());
    }

    #[test]
    fn r0_reference_value() {
        let r0 = r0_closed_form(&table()).unwrap();
        let hand = 0.0053 * 304.17 / (0.0838 * 0.201);
        assert!((r0 - hand).abs() < 1e-12);
        assert!((r0 - 95.71).abs() < 0.01, "{r0}");
    }

    #[test]
    fn r0_zero_without_infection_and_linear_in_births() {
        let p = table().with(ParamId::InfectionRate, 0.0);
        assert_eq!(r0_closed_form(&p).unwrap(), 0.0);
        assert_eq!(r0_next_generation(&p).unwrap(), 0.0);
        let base = r0_closed_form(&table()).unwrap();
        let doubled = table().with(ParamId::BirthInflow, 2.0 * 304.17);
        assert!((r0_closed_form(&doubled).unwrap() - 2.0 * base).abs() < 1e-12);
    }

    #[test]
    fn r0_zero_denominator_is_domain_error() {
        // Unreachable through validated params, still guarded.
        let mut p = table();
        p.direct_disease_rate = 0.0;
        p.death_uninfected = 0.0;
        assert!(matches!(r0_closed_form(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn next_generation_matches_closed_form() {
        let a = r0_next_generation(&table()).unwrap();
        let b = r0_closed_form(&table()).unwrap();
        assert!(((a - b) / b).abs() < 1e-10);
    }

    #[test]
    fn dfe_reference_is_not_a_fixed_point() {
        let e = disease_free_equilibrium(&table()).unwrap();
        assert!((e.state.u - 304.17 / 0.0838).abs() < 1e-9);
        assert!((e.state.u - 3629.71).abs() < 0.01);
        assert!(!e.is_valid_equilibrium);
        // The residual is the direct-disease inflow λ1·U.
        assert!((e.residual_norm - 0.083 * e.state.u).abs() < 1e-9);
    }

    #[test]
    fn dfe_valid_without_direct_progression_and_at_origin() {
        let e = disease_free_equilibrium(&table().with(ParamId::DirectDiseaseRate, 0.0)).unwrap();
        assert!(e.is_valid_equilibrium);
        assert!(e.residual_norm < 1e-10);

        let e = disease_free_equilibrium(&table().with(ParamId::BirthInflow, 0.0)).unwrap();
        assert_eq!(e.state, StateVec::zero());
        assert!(e.is_valid_equilibrium);
    }

    #[test]
    fn endemic_seed_matches_hand_arithmetic() {
        let seed = endemic_seed(&table()).unwrap();
        assert!((seed.u - 0.201 / 0.0053).abs() < 1e-10);
        assert!((seed.u - 37.92).abs() < 0.01);
        let tl = (304.17 * 0.0053 - 0.0838 * 0.201) / (0.201 * 0.0053);
        assert!((seed.t_l - tl).abs() < 1e-8);
        assert!((seed.t_l - 1497.5).abs() < 0.05);
    }

    #[test]
    fn endemic_refined_residual() {
        let e = endemic_equilibrium(&table()).unwrap();
        assert!(e.is_valid_equilibrium);
        assert!(e.residual_norm < 1e-8);
        assert!(e.state.t_l > 0.0 && e.state.t_d > 0.0);
    }

    #[test]
    fn newton_recovers_from_displaced_start() {
        let p = table();
        let exact = endemic_seed(&p).unwrap();
        let mut x = exact;
        x.t_d *= 1.3;
        x.u *= 0.7;
        assert!(rhs_with_removal(&p, &x, [0.0; 3]).max_abs() > 1.0);
        let e = newton_refine(&p, x).unwrap();
        assert!(e.residual_norm < EQUILIBRIUM_TOL);
        assert!((e.state.t_l - exact.t_l).abs() < 1e-6 * exact.t_l);
    }

    #[test]
    fn endemic_requires_infection() {
        let p = table().with(ParamId::InfectionRate, 0.0);
        assert!(matches!(endemic_equilibrium(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn feasible_bound_reference() {
        let p = table();
        assert!((attraction_rate(&p) - 0.0008).abs() < 1e-15);
        assert!((feasible_bound(&p).unwrap() - 380212.5).abs() < 1e-6);
    }

    #[test]
    fn feasible_bound_equal_deaths_and_large_cure() {
        let m = 0.002;
        let mut p = table();
        for id in [
            ParamId::DeathUninfected,
            ParamId::DeathLatent,
            ParamId::DeathDiseased,
            ParamId::DeathTreated,
            ParamId::DeathRecovered,
        ] {
            p.set(id, m);
        }
        assert!((feasible_bound(&p).unwrap() - p.birth_inflow / m).abs() < 1e-9);
        let p = p.with(ParamId::NaturalCureRate, 10.0);
        assert_eq!(attraction_rate(&p), m);
    }

    #[test]
    fn validate_rejects_bad_params() {
        assert!(table().with(ParamId::DeathLatent, 0.0).validate().is_err());
        assert!(table().with(ParamId::TreatmentRate, -0.1).validate().is_err());
        assert!(table().validate().is_ok());
    }

    #[test]
    fn param_lookup_by_key_or_symbol() {
        assert_eq!(ParamId::parse("lambda2"), Some(ParamId::InfectionRate));
        assert_eq!(ParamId::parse("birth_inflow"), Some(ParamId::BirthInflow));
        assert_eq!(ParamId::parse("nope"), None);
    }
}

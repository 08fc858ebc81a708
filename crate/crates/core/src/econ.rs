//! Epidemiological summaries and the cost-effectiveness layer.
//!
//! Trajectories are in model population units; `n0` must use the same unit.
//! Year `k` (0-based) covers months `[12k, 12(k+1)]`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::integrator::{TimeGrid, Trajectory};
use crate::model::{ModelParams, StateVec};

pub const MONTHS_PER_YEAR: f64 = 12.0;

fn check_population(n0: f64) -> Result<()> {
    if n0.is_finite() && n0 > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("N(0) must be finite and > 0, got {n0}")))
    }
}

/// Index of the node at time `t`; `t` must coincide with a grid node.
fn node_at(grid: &TimeGrid, t: f64) -> Result<usize> {
    let pos = (t - grid.t0) / grid.dt();
    let idx = pos.round();
    if (pos - idx).abs() > 1e-6 || idx < 0.0 || idx as usize > grid.n_steps {
        return Err(Error::InvalidInput(format!(
            "time {t} is not a node of the grid [{}, {}] with {} steps",
            grid.t0, grid.t1, grid.n_steps
        )));
    }
    Ok(idx as usize)
}

/// Node range `[start, end]` of year `year` (0-based from `t0`).
fn year_nodes(grid: &TimeGrid, year: usize) -> Result<(usize, usize)> {
    let start = grid.t0 + MONTHS_PER_YEAR * year as f64;
    let end = start + MONTHS_PER_YEAR;
    if end > grid.t1 + 1e-9 * grid.horizon() {
        return Err(Error::InvalidInput(format!(
            "year {year} ends at month {end}, beyond the horizon {}",
            grid.t1
        )));
    }
    Ok((node_at(grid, start)?, node_at(grid, end)?))
}

/// Number of whole years covered by the grid.
pub fn whole_years(grid: &TimeGrid) -> usize {
    (grid.horizon() / MONTHS_PER_YEAR + 1e-9).floor() as usize
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

fn infected(v: &[f64; 5]) -> f64 {
    v[1] + v[2] + v[3]
}

/// `(T_l + T_d + T_t) / N(0)` at every node.
pub fn pseudo_prevalence(traj: &Trajectory<5>, n0: f64) -> Result<Vec<f64>> {
    check_population(n0)?;
    Ok(traj.values().iter().map(|v| infected(v) / n0).collect())
}

/// Pseudo-prevalence at the end of each whole year.
pub fn yearly_pseudo_prevalence(traj: &Trajectory<5>, n0: f64) -> Result<Vec<f64>> {
    let all = pseudo_prevalence(traj, n0)?;
    (0..whole_years(traj.grid()))
        .map(|y| Ok(all[year_nodes(traj.grid(), y)?.1]))
        .collect()
}

/// Which flows count as new cases for incidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncidenceFlows {
    /// Entries into the infected block from outside it:
    /// `λ2 T_l U + λ1 U + λ7 R`.
    #[default]
    External,
    /// Every gross inflow term of the `T_l`, `T_d` and `T_t` equations,
    /// including transfers between them.
    Gross,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncidenceConvention {
    pub flows: IncidenceFlows,
    /// Divisor applied to the yearly case count together with `N(0)`.
    pub days_per_year: f64,
    /// Reporting base, e.g. per 100,000.
    pub per: f64,
}

impl Default for IncidenceConvention {
    fn default() -> Self {
        Self {
            flows: IncidenceFlows::External,
            days_per_year: 365.0,
            per: 1e5,
        }
    }
}

impl IncidenceConvention {
    pub fn validate(&self) -> Result<()> {
        if self.days_per_year.is_finite() && self.days_per_year > 0.0 && self.per.is_finite() && self.per > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput("incidence divisors must be finite and > 0".into()))
        }
    }
}

/// New-case inflow rate for one state.
pub fn case_inflow(p: &ModelParams, s: &StateVec, flows: IncidenceFlows) -> f64 {
    let external = p.infection_rate * s.t_l * s.u + p.direct_disease_rate * s.u + p.recurrence_rate * s.r;
    match flows {
        IncidenceFlows::External => external,
        IncidenceFlows::Gross => {
            external
                + p.progression_rate * s.t_l
                + p.default_rate * s.t_t
                + p.treatment_rate * s.t_d
        }
    }
}

/// New cases in year `year`, divided by `N(0) * days_per_year`, per `per`.
pub fn incidence(
    p: &ModelParams,
    traj: &Trajectory<5>,
    n0: f64,
    year: usize,
    conv: &IncidenceConvention,
) -> Result<f64> {
    check_population(n0)?;
    conv.validate()?;
    let (a, b) = year_nodes(traj.grid(), year)?;
    let flow: Vec<f64> = traj.values()[a..=b]
        .iter()
        .map(|v| case_inflow(p, &StateVec::from_array(*v), conv.flows))
        .collect();
    let cases = trapezoid(&flow, traj.grid().dt());
    Ok(conv.per * cases / (n0 * conv.days_per_year))
}

fn infected_gap(baseline: &Trajectory<5>, scenario: &Trajectory<5>) -> Result<Vec<f64>> {
    if baseline.grid() != scenario.grid() {
        return Err(Error::InvalidInput(format!(
            "baseline grid {:?} differs from scenario grid {:?}",
            baseline.grid(),
            scenario.grid()
        )));
    }
    Ok(baseline
        .values()
        .iter()
        .zip(scenario.values())
        .map(|(b, s)| infected(b) - infected(s))
        .collect())
}

/// Time-average over the horizon of the infected gap `baseline - scenario`.
pub fn averted_cases(baseline: &Trajectory<5>, scenario: &Trajectory<5>) -> Result<f64> {
    let gap = infected_gap(baseline, scenario)?;
    let g = baseline.grid();
    Ok(trapezoid(&gap, g.dt()) / g.horizon())
}

/// Time-average of the infected gap from `t0` to the end of each whole year.
pub fn averted_cases_by_year(baseline: &Trajectory<5>, scenario: &Trajectory<5>) -> Result<Vec<f64>> {
    let gap = infected_gap(baseline, scenario)?;
    let g = baseline.grid();
    (0..whole_years(g))
        .map(|y| {
            let end = year_nodes(g, y)?.1;
            Ok(trapezoid(&gap[..=end], g.dt()) / (MONTHS_PER_YEAR * (y + 1) as f64))
        })
        .collect()
}

/// Time-average of each compartment over each whole year.
pub fn yearly_averages(traj: &Trajectory<5>) -> Result<Vec<[f64; 5]>> {
    let g = traj.grid();
    (0..whole_years(g))
        .map(|y| {
            let (a, b) = year_nodes(g, y)?;
            Ok(std::array::from_fn(|c| {
                let col: Vec<f64> = traj.values()[a..=b].iter().map(|v| v[c]).collect();
                trapezoid(&col, g.dt()) / MONTHS_PER_YEAR
            }))
        })
        .collect()
}

/// Time-average of `R` over the final whole year.
pub fn recovered_cases(traj: &Trajectory<5>) -> Result<f64> {
    let years = whole_years(traj.grid());
    if years == 0 {
        return Err(Error::InvalidInput("trajectory is shorter than one year".into()));
    }
    Ok(yearly_averages(traj)?[years - 1][4])
}

/// Inputs of the ratio analyses for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionOutcome {
    pub scenario: String,
    pub total_cost: f64,
    pub averted_cases: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovered_cases: Option<f64>,
}

impl InterventionOutcome {
    pub fn new(scenario: impl Into<String>, total_cost: f64, averted_cases: f64) -> Self {
        Self {
            scenario: scenario.into(),
            total_cost,
            averted_cases,
            recovered_cases: None,
        }
    }

    pub fn with_recovered(mut self, recovered: f64) -> Self {
        self.recovered_cases = Some(recovered);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_cost.is_finite() && self.total_cost >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "{}: total cost must be finite and >= 0",
                self.scenario
            )));
        }
        ensure_finite(&[self.averted_cases], &format!("{} averted cases", self.scenario))?;
        if let Some(r) = self.recovered_cases {
            ensure_finite(&[r], &format!("{} recovered cases", self.scenario))?;
        }
        Ok(())
    }
}

/// Average cost-effectiveness ratio: cost per averted case.
pub fn acer(o: &InterventionOutcome) -> Result<f64> {
    o.validate()?;
    if o.averted_cases <= 0.0 {
        return Err(Error::UndefinedRatio(format!(
            "ACER of {} needs averted cases > 0, got {}",
            o.scenario, o.averted_cases
        )));
    }
    Ok(o.total_cost / o.averted_cases)
}

/// Averted cases per recovered case.
pub fn air(o: &InterventionOutcome) -> Result<f64> {
    o.validate()?;
    match o.recovered_cases {
        Some(r) if r > 0.0 => Ok(o.averted_cases / r),
        other => Err(Error::UndefinedRatio(format!(
            "AIR of {} needs recovered cases > 0, got {other:?}",
            o.scenario
        ))),
    }
}

fn sorted_by_averted(outcomes: &[InterventionOutcome]) -> Result<Vec<InterventionOutcome>> {
    if outcomes.is_empty() {
        return Err(Error::InvalidInput("no outcomes given".into()));
    }
    for o in outcomes {
        o.validate()?;
    }
    let mut sorted = outcomes.to_vec();
    sorted.sort_by(|a, b| a.averted_cases.total_cmp(&b.averted_cases));
    check_strictly_increasing(&sorted)?;
    Ok(sorted)
}

fn check_strictly_increasing(sorted: &[InterventionOutcome]) -> Result<()> {
    for w in sorted.windows(2) {
        if w[0].averted_cases == w[1].averted_cases {
            return Err(Error::Tie(w[0].scenario.clone(), w[1].scenario.clone()));
        }
        if w[0].averted_cases > w[1].averted_cases {
            return Err(Error::InvalidInput(format!(
                "outcomes not sorted by averted cases: {} before {}",
                w[0].scenario, w[1].scenario
            )));
        }
    }
    Ok(())
}

/// ICER of each point against its predecessor; the first against the origin.
fn chain_of(sorted: &[InterventionOutcome]) -> Vec<f64> {
    let mut prev = (0.0, 0.0);
    sorted
        .iter()
        .map(|o| {
            let icer = (o.total_cost - prev.0) / (o.averted_cases - prev.1);
            prev = (o.total_cost, o.averted_cases);
            icer
        })
        .collect()
}

/// Sort by averted cases and compute incremental ratios along the chain.
///
/// Tied averted cases are an error.
pub fn icer_chain(outcomes: &[InterventionOutcome]) -> Result<Vec<(String, f64)>> {
    let sorted = sorted_by_averted(outcomes)?;
    let chain = chain_of(&sorted);
    Ok(sorted.into_iter().map(|o| o.scenario).zip(chain).collect())
}

/// Divide costs by the minimum cost and averted cases by the minimum averted.
pub fn scale_outcomes(outcomes: &[InterventionOutcome]) -> Result<Vec<InterventionOutcome>> {
    if outcomes.is_empty() {
        return Err(Error::InvalidInput("no outcomes given".into()));
    }
    for o in outcomes {
        o.validate()?;
    }
    let min_cost = outcomes.iter().map(|o| o.total_cost).fold(f64::INFINITY, f64::min);
    let min_averted = outcomes.iter().map(|o| o.averted_cases).fold(f64::INFINITY, f64::min);
    if min_cost <= 0.0 || min_averted <= 0.0 {
        return Err(Error::Domain(format!(
            "scaling needs positive minima, got cost {min_cost} and averted {min_averted}"
        )));
    }
    Ok(outcomes
        .iter()
        .map(|o| InterventionOutcome {
            scenario: o.scenario.clone(),
            total_cost: o.total_cost / min_cost,
            averted_cases: o.averted_cases / min_averted,
            recovered_cases: o.recovered_cases,
        })
        .collect())
}

/// One point of the cost-effectiveness plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeaPoint {
    pub scenario: String,
    pub scaled_cost: f64,
    pub scaled_averted: f64,
    pub icer: f64,
    pub cost_effective: bool,
    /// Some other point is no more costly and averts more cases.
    pub dominated: bool,
}

/// Straight piece of the frontier between consecutive points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierSegment {
    pub from: String,
    pub to: String,
    pub from_point: (f64, f64),
    pub to_point: (f64, f64),
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeaReport {
    pub cet: f64,
    pub points: Vec<CeaPoint>,
    pub segments: Vec<FrontierSegment>,
    pub recommendation: Option<String>,
}

/// Flag each point against the threshold `cet` and pick a recommendation.
///
/// Input must be sorted by ascending averted cases. A point is cost-effective
/// iff its ICER is at most `cet`. The recommendation is the undominated
/// cost-effective point with the highest ICER; ties go to the point averting
/// more cases. The first segment starts at the origin.
pub fn cea_classify(scaled: &[InterventionOutcome], cet: f64) -> Result<CeaReport> {
    if cet.is_nan() {
        return Err(Error::InvalidInput("CET must not be NaN".into()));
    }
    if scaled.is_empty() {
        return Err(Error::InvalidInput("no outcomes given".into()));
    }
    for o in scaled {
        o.validate()?;
    }
    check_strictly_increasing(scaled)?;
    let chain = chain_of(scaled);

    let points: Vec<CeaPoint> = scaled
        .iter()
        .zip(&chain)
        .map(|(o, icer)| CeaPoint {
            scenario: o.scenario.clone(),
            scaled_cost: o.total_cost,
            scaled_averted: o.averted_cases,
            icer: *icer,
            cost_effective: *icer <= cet,
            dominated: scaled.iter().any(|other| {
                other.total_cost <= o.total_cost && other.averted_cases > o.averted_cases
            }),
        })
        .collect();

    let mut segments = Vec::with_capacity(points.len());
    let mut prev = ("origin".to_string(), (0.0, 0.0));
    for p in &points {
        let here = (p.scaled_averted, p.scaled_cost);
        segments.push(FrontierSegment {
            from: prev.0.clone(),
            to: p.scenario.clone(),
            from_point: prev.1,
            to_point: here,
            slope: p.icer,
        });
        prev = (p.scenario.clone(), here);
    }

    let recommendation = points
        .iter()
        .filter(|p| p.cost_effective && !p.dominated)
        .fold(None::<&CeaPoint>, |best, p| match best {
            Some(b) if b.icer > p.icer => Some(b),
            _ => Some(p),
        })
        .map(|p| p.scenario.clone());

    Ok(CeaReport {
        cet,
        points,
        segments,
        recommendation,
    })
}

/// Scale, sort and classify raw outcomes in one go.
pub fn cost_effectiveness(outcomes: &[InterventionOutcome], cet: f64) -> Result<CeaReport> {
    let sorted = sorted_by_averted(&scale_outcomes(outcomes)?)?;
    cea_classify(&sorted, cet)
}

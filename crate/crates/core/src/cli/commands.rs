use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use super::table::{round_to, write_json, Cell, Table};
use crate::control::{
    aggregate_controls, cost_functional, simulate_uncontrolled, solve_scenarios, ControlVec,
    CostWeights, OcSolution, ScenarioMask, AGGREGATE_NAMES,
};
use crate::econ::{
    acer, air, averted_cases, cost_effectiveness, incidence, recovered_cases, whole_years,
    yearly_averages, yearly_pseudo_prevalence, CeaReport, InterventionOutcome,
};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::model::{max_stable_step, StateVec};
use crate::sensitivity::{prcc_r0, PrccResult};

/// Outcome of a command that did not fail outright, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RunStatus {
    Ok,
    /// Some ratio could not be formed; everything else was written.
    UndefinedRatio,
    /// At least one scenario hit the iteration cap.
    NotConverged,
}

const STATE_NAMES: [&str; 5] = ["U", "T_l", "T_d", "T_t", "R"];
const ADJOINT_NAMES: [&str; 5] = ["lamU", "lamTl", "lamTd", "lamTt", "lamR"];

/// Create the output directory and record the resolved config in it.
pub fn prepare_out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join("effective_config.json"), cfg.to_json()?)?;
    Ok(cfg.out_dir.clone())
}

fn time_mean(traj: &Trajectory<5>, column: usize) -> f64 {
    let g = traj.grid();
    let v = traj.column(column);
    let n = v.len();
    let inner: f64 = v[1..n - 1].iter().sum();
    g.dt() * (0.5 * (v[0] + v[n - 1]) + inner) / g.horizon()
}

/// Integral of the quadratic control cost alone.
pub fn control_cost(controls: &Trajectory<9>, w: &CostWeights, mask: ScenarioMask) -> Result<f64> {
    let zero = Trajectory::constant(*controls.grid(), [0.0; 5]);
    cost_functional(&zero, controls, w, mask)
}

fn warn_step(cfg: &RunConfig, y0: &StateVec, dt: f64) {
    let limit = max_stable_step(&cfg.params, y0, [0.0; 3]);
    if dt > limit {
        eprintln!("warning: dt = {dt} months exceeds the stable step estimate {limit:.4}; RK4 may diverge");
    }
}

/// Uncontrolled trajectory with columns `t, U, T_l, T_d, T_t, R, N` in persons.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<RunStatus> {
    let dir = prepare_out_dir(cfg)?;
    let grid = cfg.grid()?;
    let y0 = cfg.model_initial_state();
    warn_step(cfg, &y0, grid.dt());
    let traj = simulate_uncontrolled(&cfg.params, &y0, &grid)?;
    let unit = cfg.population_unit;
    let mut table = Table::new(["t", "U", "T_l", "T_d", "T_t", "R", "N"]);
    for (t, v) in grid.times().zip(traj.values()) {
        let mut row: Vec<Cell> = vec![t.into()];
        row.extend(v.iter().map(|x| Cell::Num(x * unit)));
        row.push((v.iter().sum::<f64>() * unit).into());
        table.push(row);
    }
    let path = table.write(&dir, "trajectory", cfg.format)?;
    println!("simulate: {} nodes -> {}", grid.len(), path.display());
    Ok(RunStatus::Ok)
}

/// Run the forward-backward sweep for `masks` (in parallel, in order).
pub fn solve_masks(cfg: &RunConfig, masks: &[ScenarioMask]) -> Result<Vec<OcSolution>> {
    let grid = cfg.grid()?;
    let y0 = cfg.model_initial_state();
    warn_step(cfg, &y0, grid.dt());
    solve_scenarios(
        &cfg.params,
        &cfg.weights,
        &cfg.bounds,
        masks,
        &grid,
        &y0,
        &cfg.fbs,
    )
    .into_iter()
    .collect()
}

#[derive(Debug, Serialize)]
struct ScenarioSummary {
    scenario: String,
    key: String,
    converged: bool,
    iterations: usize,
    objective: f64,
    control_cost: f64,
    mean_latent: f64,
    mean_infected: f64,
    final_state: StateVec,
}

#[derive(Debug, Serialize)]
struct OptimizeSummary {
    population_unit: f64,
    horizon: f64,
    steps: usize,
    scenarios: Vec<ScenarioSummary>,
}

fn solution_table(sol: &OcSolution, unit: f64) -> Table {
    let mut cols: Vec<&str> = vec!["t"];
    cols.extend(STATE_NAMES);
    cols.extend(ControlVec::NAMES);
    cols.extend(ADJOINT_NAMES);
    cols.extend(AGGREGATE_NAMES);
    let mut table = Table::new(cols);
    let agg = aggregate_controls(&sol.controls, sol.mask);
    for (i, t) in sol.states.grid().times().enumerate() {
        let mut row: Vec<Cell> = vec![t.into()];
        row.extend(sol.states.node(i).iter().map(|x| Cell::Num(x * unit)));
        row.extend(sol.controls.node(i).map(Cell::Num));
        row.extend(sol.adjoints.node(i).map(Cell::Num));
        row.extend(agg.node(i).map(Cell::Num));
        table.push(row);
    }
    table
}

/// Write per-scenario solution files, convergence histories, yearly tables
/// and `summary.json`.
pub fn write_solutions(cfg: &RunConfig, sols: &[OcSolution]) -> Result<RunStatus> {
    let dir = prepare_out_dir(cfg)?;
    let unit = cfg.population_unit;
    let n0 = cfg.model_n0();
    let mut status = RunStatus::Ok;
    let mut summaries = Vec::new();

    let mut yearly = Table::new(["scenario", "year", "U", "T_l", "T_d", "T_t", "R"]);
    let mut report = Table::new(["scenario", "year", "U", "T_l", "T_d", "T_t", "R"]);
    let mut epi = Table::new(["scenario", "year", "pseudo_prevalence", "incidence_per_100k"]);

    for sol in sols {
        let key = sol.mask.key();
        solution_table(sol, unit).write(&dir.join("solutions"), &key, cfg.format)?;
        let mut hist = Table::new(["iteration", "objective", "change"]);
        for h in &sol.history {
            hist.push(vec![h.iteration.into(), h.objective.into(), h.change.into()]);
        }
        hist.write(&dir.join("convergence"), &key, cfg.format)?;

        if !sol.converged {
            status = RunStatus::NotConverged;
            eprintln!(
                "warning: scenario '{}' did not converge in {} iterations",
                sol.mask.label(),
                sol.iterations
            );
        }

        let prevalence = yearly_pseudo_prevalence(&sol.states, n0)?;
        for (y, avg) in yearly_averages(&sol.states)?.iter().enumerate() {
            let year = cfg.start_year + y as i32;
            let mut row: Vec<Cell> = vec![sol.mask.label().into(), year.into()];
            row.extend(avg.iter().map(|v| Cell::Num(v * unit)));
            yearly.push(row);
            let mut row: Vec<Cell> = vec![sol.mask.label().into(), year.into()];
            row.extend(avg.iter().map(|v| Cell::Num(round_to(v * unit, 2))));
            report.push(row);

            let inc = incidence(&cfg.params, &sol.states, n0, y, &cfg.incidence)?;
            epi.push(vec![
                sol.mask.label().into(),
                year.into(),
                prevalence[y].into(),
                inc.into(),
            ]);
        }

        let last = StateVec::from_array(sol.states.last()).scaled(unit);
        summaries.push(ScenarioSummary {
            scenario: sol.mask.label(),
            key,
            converged: sol.converged,
            iterations: sol.iterations,
            objective: sol.objective,
            control_cost: control_cost(&sol.controls, &cfg.weights, sol.mask)?,
            mean_latent: time_mean(&sol.states, 1) * unit,
            mean_infected: (time_mean(&sol.states, 1)
                + time_mean(&sol.states, 2)
                + time_mean(&sol.states, 3))
                * unit,
            final_state: last,
        });
    }

    yearly.write(&dir, "yearly_averages", cfg.format)?;
    report.write(&dir, "yearly_averages_table", cfg.format)?;
    epi.write(&dir, "epidemiology", cfg.format)?;
    write_json(
        &dir.join("summary.json"),
        &OptimizeSummary {
            population_unit: unit,
            horizon: cfg.horizon,
            steps: cfg.steps,
            scenarios: summaries,
        },
    )?;
    Ok(status)
}

/// Solve every configured scenario and write the results.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<RunStatus> {
    let sols = solve_masks(cfg, &cfg.masks)?;
    let status = write_solutions(cfg, &sols)?;
    for s in &sols {
        println!(
            "optimize: {:<16} J = {:.6e}  iterations = {:>3}  converged = {}",
            s.mask.label(),
            s.objective,
            s.iterations,
            s.converged
        );
    }
    Ok(status)
}

/// PRCC of R0 over the configured ranges.
pub fn run_sensitivity(cfg: &RunConfig) -> Result<PrccResult> {
    prcc_r0(&cfg.params, &cfg.prcc_ranges()?, cfg.sensitivity.samples, cfg.seed)
}

pub fn cmd_sensitivity(cfg: &RunConfig) -> Result<RunStatus> {
    let dir = prepare_out_dir(cfg)?;
    let result = run_sensitivity(cfg)?;
    let mut table = Table::new(["parameter", "symbol", "prcc"]);
    for (id, v) in &result.coefficients {
        table.push(vec![id.key().into(), id.symbol().into(), (*v).into()]);
    }
    table.write(&dir, "prcc", cfg.format)?;
    write_json(&dir.join("prcc_summary.json"), &result)?;
    for (id, v) in &result.coefficients {
        println!("sensitivity: {:<8} {v:+.4}", id.symbol());
    }
    Ok(RunStatus::Ok)
}

/// Read outcomes from CSV (`scenario,total_cost,averted_cases[,recovered_cases]`)
/// or, for a `.json` extension, from a JSON array of the same records.
pub fn load_outcomes(path: &Path) -> Result<Vec<InterventionOutcome>> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let outcomes: Vec<InterventionOutcome> = if is_json {
        serde_json::from_str(&std::fs::read_to_string(path)?)?
    } else {
        csv::Reader::from_path(path)?
            .deserialize()
            .collect::<std::result::Result<_, _>>()?
    };
    if outcomes.is_empty() {
        return Err(Error::InvalidInput(format!("{} has no outcomes", path.display())));
    }
    Ok(outcomes)
}

/// Outcomes of every active scenario relative to the no-intervention run.
///
/// The cost is the scenario's objective (prevalence plus priced controls).
/// Averted and recovered cases stay in model population units so that all
/// three figures share one scale. `sols` must include the no-intervention
/// mask.
pub fn model_outcomes(sols: &[OcSolution]) -> Result<Vec<InterventionOutcome>> {
    let baseline = sols
        .iter()
        .find(|s| s.mask.is_none())
        .ok_or_else(|| Error::InvalidInput("no-intervention scenario missing".into()))?;
    let has_year = whole_years(baseline.states.grid()) > 0;
    sols.iter()
        .filter(|s| !s.mask.is_none())
        .map(|s| {
            let mut o = InterventionOutcome::new(
                s.mask.label(),
                s.objective,
                averted_cases(&baseline.states, &s.states)?,
            );
            if has_year {
                o.recovered_cases = Some(recovered_cases(&s.states)?);
            }
            Ok(o)
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct RatioRow {
    scenario: String,
    acer: Option<f64>,
    air: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    errors: Vec<String>,
}

#[derive(Debug, Serialize)]
struct CeaOutput<'a> {
    cet: f64,
    outcomes: &'a [InterventionOutcome],
    ratios: Vec<RatioRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<&'a CeaReport>,
    recommendation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Ratio tables, ICER chain and classified CEA plane for `outcomes`.
///
/// Per-row ratio failures are recorded and reported as
/// [`RunStatus::UndefinedRatio`]; other rows are still written.
pub fn write_cea(cfg: &RunConfig, outcomes: &[InterventionOutcome]) -> Result<RunStatus> {
    let dir = prepare_out_dir(cfg)?;
    let mut status = RunStatus::Ok;

    let mut table = Table::new(["scenario", "total_cost", "averted_cases", "recovered_cases"]);
    for o in outcomes {
        table.push(vec![
            o.scenario.as_str().into(),
            o.total_cost.into(),
            o.averted_cases.into(),
            o.recovered_cases.into(),
        ]);
    }
    table.write(&dir, "outcomes", cfg.format)?;

    let mut ratios = Vec::new();
    let mut table = Table::new(["scenario", "acer", "air", "error"]);
    for o in outcomes {
        let mut errors = Vec::new();
        let a = acer(o).map_err(|e| errors.push(e.to_string())).ok();
        let r = if o.recovered_cases.is_some() {
            air(o).map_err(|e| errors.push(e.to_string())).ok()
        } else {
            None
        };
        if !errors.is_empty() {
            status = RunStatus::UndefinedRatio;
        }
        table.push(vec![
            o.scenario.as_str().into(),
            a.into(),
            r.into(),
            errors.join("; ").into(),
        ]);
        ratios.push(RatioRow {
            scenario: o.scenario.clone(),
            acer: a,
            air: r,
            errors,
        });
    }
    table.write(&dir, "ratios", cfg.format)?;

    let (report, error) = match cost_effectiveness(outcomes, cfg.cet) {
        Ok(r) => (Some(r), None),
        Err(e @ (Error::UndefinedRatio(_) | Error::Domain(_) | Error::Tie(..))) => {
            status = RunStatus::UndefinedRatio;
            (None, Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };

    if let Some(r) = &report {
        let mut plane = Table::new([
            "scenario",
            "scaled_cost",
            "scaled_averted",
            "icer",
            "cost_effective",
            "dominated",
        ]);
        let mut rounded = Table::new(["scenario", "scaled_cost", "scaled_averted", "acer", "icer", "cost_effective"]);
        for p in &r.points {
            plane.push(vec![
                p.scenario.as_str().into(),
                p.scaled_cost.into(),
                p.scaled_averted.into(),
                p.icer.into(),
                p.cost_effective.into(),
                p.dominated.into(),
            ]);
            let acer_value = ratios
                .iter()
                .find(|x| x.scenario == p.scenario)
                .and_then(|x| x.acer);
            rounded.push(vec![
                p.scenario.as_str().into(),
                round_to(p.scaled_cost, 4).into(),
                round_to(p.scaled_averted, 4).into(),
                acer_value.map(|v| round_to(v, 2)).into(),
                round_to(p.icer, 2).into(),
                p.cost_effective.into(),
            ]);
        }
        plane.write(&dir, "cea_plane", cfg.format)?;
        rounded.write(&dir, "cea_table", cfg.format)?;

        let mut frontier = Table::new(["from", "to", "from_averted", "from_cost", "to_averted", "to_cost", "slope"]);
        for s in &r.segments {
            frontier.push(vec![
                s.from.as_str().into(),
                s.to.as_str().into(),
                s.from_point.0.into(),
                s.from_point.1.into(),
                s.to_point.0.into(),
                s.to_point.1.into(),
                s.slope.into(),
            ]);
        }
        frontier.write(&dir, "frontier", cfg.format)?;
    }

    let recommendation = report.as_ref().and_then(|r| r.recommendation.clone());
    write_json(
        &dir.join("cea.json"),
        &CeaOutput {
            cet: cfg.cet,
            outcomes,
            ratios,
            report: report.as_ref(),
            recommendation: recommendation.clone(),
            error: error.clone(),
        },
    )?;
    match (&recommendation, &error) {
        (Some(r), _) => println!("cea: recommended scenario at CET {}: {r}", cfg.cet),
        (None, Some(e)) => eprintln!("cea: {e}"),
        (None, None) => println!("cea: no scenario is cost-effective at CET {}", cfg.cet),
    }
    Ok(status)
}

/// Cost-effectiveness from `cfg.outcomes_file`, or from solving all eight
/// scenarios in-process.
pub fn cmd_cea(cfg: &RunConfig) -> Result<RunStatus> {
    match &cfg.outcomes_file {
        Some(path) => write_cea(cfg, &load_outcomes(path)?),
        None => {
            let sols = solve_masks(cfg, &ScenarioMask::all())?;
            let converged = if sols.iter().all(|s| s.converged) {
                RunStatus::Ok
            } else {
                RunStatus::NotConverged
            };
            let status = write_cea(cfg, &model_outcomes(&sols)?)?;
            Ok(status.max(converged))
        }
    }
}

/// Simulation, optimization, sensitivity and cost-effectiveness in one run.
pub fn cmd_all(cfg: &RunConfig) -> Result<RunStatus> {
    let mut status = cmd_simulate(cfg)?;
    let mut masks = cfg.masks.clone();
    for m in ScenarioMask::all() {
        if !masks.contains(&m) {
            masks.push(m);
        }
    }
    let sols = solve_masks(cfg, &masks)?;
    let requested: Vec<OcSolution> = sols
        .iter()
        .filter(|s| cfg.masks.contains(&s.mask))
        .cloned()
        .collect();
    status = status.max(write_solutions(cfg, &requested)?);
    status = status.max(cmd_sensitivity(cfg)?);
    let outcomes = match &cfg.outcomes_file {
        Some(path) => load_outcomes(path)?,
        None => model_outcomes(&sols)?,
    };
    if sols.iter().any(|s| !s.converged) {
        status = status.max(RunStatus::NotConverged);
    }
    Ok(status.max(write_cea(cfg, &outcomes)?))
}

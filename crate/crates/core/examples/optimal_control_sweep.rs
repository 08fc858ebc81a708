//! Optimal intervention schedules for every combination of TPT, nutrition
//! (MN) and diabetes control (D).

use tb_control::cli::RunConfig;
use tb_control::control::{aggregate_controls, solve_scenarios, ScenarioMask};

fn main() -> tb_control::Result<()> {
    let cfg = RunConfig::default();
    let grid = cfg.grid()?;
    let masks = ScenarioMask::all();
    let solutions = solve_scenarios(
        &cfg.params,
        &cfg.weights,
        &cfg.bounds,
        &masks,
        &grid,
        &cfg.model_initial_state(),
        &cfg.fbs,
    );

    println!("{:<16} {:>12} {:>6} {:>10} {:>10}", "scenario", "J", "iters", "T_l(T)", "peak u");
    for sol in solutions {
        let sol = sol?;
        let total = aggregate_controls(&sol.controls, sol.mask).column(3);
        let peak = total.iter().copied().fold(0.0, f64::max);
        println!(
            "{:<16} {:>12.2} {:>6} {:>10.2} {:>10.4}",
            sol.mask.label(),
            sol.objective,
            sol.iterations,
            sol.states.last()[1],
            peak
        );
    }
    Ok(())
}

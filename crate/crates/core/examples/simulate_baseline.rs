//! Uncontrolled five-year projection from the reference initial state.
//!
//! Run with `cargo run --example simulate_baseline`.

use tb_control::cli::RunConfig;
use tb_control::control::simulate_uncontrolled;
use tb_control::econ::{yearly_averages, yearly_pseudo_prevalence};

fn main() -> tb_control::Result<()> {
    let cfg = RunConfig::default();
    let grid = cfg.grid()?;
    let traj = simulate_uncontrolled(&cfg.params, &cfg.model_initial_state(), &grid)?;

    println!("{} nodes, dt = {} months", grid.len(), grid.dt());
    println!("year        U          T_l        T_d        T_t        R   (millions)");
    for (y, avg) in yearly_averages(&traj)?.iter().enumerate() {
        println!(
            "{}  {:>9.2}  {:>9.2}  {:>9.3}  {:>9.3}  {:>9.3}",
            cfg.start_year + y as i32,
            avg[0],
            avg[1],
            avg[2],
            avg[3],
            avg[4]
        );
    }
    let prevalence = yearly_pseudo_prevalence(&traj, cfg.model_n0())?;
    println!("pseudo-prevalence by year: {prevalence:.3?}");
    Ok(())
}

//! Which parameters drive R0: partial rank correlation over a Latin
//! hypercube of ±50% ranges.

use tb_control::model::ModelParams;
use tb_control::sensitivity::{default_r0_ranges, prcc_r0, DEFAULT_SAMPLES};

fn main() -> tb_control::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let p = ModelParams::reference();
    let ranges = default_r0_ranges(&p)?;
    let result = prcc_r0(&p, &ranges, DEFAULT_SAMPLES, seed)?;

    println!("PRCC of R0, n = {}, seed = {}", result.n, result.seed);
    for (id, v) in &result.coefficients {
        let bar = "#".repeat((v.abs() * 40.0).round() as usize);
        println!("{:>8} {v:+.4} {bar}", id.symbol());
    }
    if let Some((id, v)) = result.most_positive() {
        println!("largest positive: {} ({v:+.4})", id.symbol());
    }
    Ok(())
}

//! Cost-effectiveness of seven intervention bundles from a reference
//! cost and averted-case table.

use tb_control::econ::{acer, cost_effectiveness, InterventionOutcome};

const TABLE: [(&str, f64, f64); 7] = [
    ("D", 44051055.14, 77056.52),
    ("TPT", 39565623.05, 87686.68),
    ("TPT and D", 37415260.88, 93801.88),
    ("MN", 36996362.19, 95786.54),
    ("MN and D", 36928638.28, 98524.16),
    ("TPT and MN", 37347577.58, 100105.45),
    ("TPT, MN, and D", 38245965.54, 101743.50),
];

fn main() -> tb_control::Result<()> {
    let cet = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.190);
    let outcomes: Vec<InterventionOutcome> = TABLE
        .iter()
        .map(|(s, c, a)| InterventionOutcome::new(*s, *c, *a))
        .collect();

    let mut ranked: Vec<(String, f64)> = outcomes
        .iter()
        .map(|o| Ok((o.scenario.clone(), acer(o)?)))
        .collect::<tb_control::Result<_>>()?;
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    println!("ACER, cheapest per averted case first:");
    for (s, v) in &ranked {
        println!("  {s:<16} {v:>8.2}");
    }

    let report = cost_effectiveness(&outcomes, cet)?;
    println!("\nscaled plane at CET {cet}:");
    println!("  {:<16} {:>7} {:>7} {:>8}  verdict", "scenario", "cost", "averted", "ICER");
    for p in &report.points {
        let verdict = match (p.cost_effective, p.dominated) {
            (_, true) => "dominated",
            (true, false) => "cost-effective",
            (false, false) => "too expensive",
        };
        println!(
            "  {:<16} {:>7.4} {:>7.4} {:>8.4}  {verdict}",
            p.scenario, p.scaled_cost, p.scaled_averted, p.icer
        );
    }
    match report.recommendation {
        Some(r) => println!("recommended: {r}"),
        None => println!("nothing is cost-effective at this threshold"),
    }
    Ok(())
}

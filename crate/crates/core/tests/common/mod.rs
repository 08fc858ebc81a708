#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use tb_control::econ::InterventionOutcome;

/// Reference 2025 cost and averted-case table, ascending by averted cases.
pub const OUTCOMES_2025: [(&str, f64, f64); 7] = [
    ("D", 44051055.14, 77056.52),
    ("TPT", 39565623.05, 87686.68),
    ("TPT and D", 37415260.88, 93801.88),
    ("MN", 36996362.19, 95786.54),
    ("MN and D", 36928638.28, 98524.16),
    ("TPT and MN", 37347577.58, 100105.45),
    ("TPT, MN, and D", 38245965.54, 101743.50),
];

/// Reference scaled table (four decimals): (scenario, scaled cost, scaled averted, ICER).
pub const SCALED_2025: [(&str, f64, f64, f64); 7] = [
    ("D", 1.1928, 1.0, 1.192),
    ("TPT", 1.0717, 1.1379, -0.87),
    ("TPT and D", 1.0131, 1.2173, -0.73),
    ("MN", 1.0018, 1.2430, -0.43),
    ("MN and D", 1.0000, 1.2786, -0.05),
    ("TPT and MN", 1.0113, 1.2999, 0.53),
    ("TPT, MN, and D", 1.0356, 1.3203, 1.190),
];

/// Reference ACER table in ascending order.
pub const ACER_2025: [(&str, f64); 7] = [
    ("TPT and MN", 379.66),
    ("MN and D", 380.46),
    ("TPT, MN, and D", 383.62),
    ("MN", 390.70),
    ("TPT and D", 402.70),
    ("TPT", 453.71),
    ("D", 572.67),
];

pub fn outcomes_2025() -> Vec<InterventionOutcome> {
    OUTCOMES_2025
        .iter()
        .map(|(s, c, a)| InterventionOutcome::new(*s, *c, *a))
        .collect()
}

pub fn write_outcomes_csv(path: &Path) {
    let mut text = String::from("scenario,total_cost,averted_cases\n");
    for (s, c, a) in OUTCOMES_2025 {
        text.push_str(&format!("\"{s}\",{c},{a}\n"));
    }
    std::fs::write(path, text).unwrap();
}

/// Every file under `root`, keyed by relative path.
pub fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

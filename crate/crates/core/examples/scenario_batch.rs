//! The full batch pipeline driven from code: every output file the
//! command-line tool would write, into a directory of your choice.
//!
//! `cargo run --release --example scenario_batch -- out/`

use std::path::PathBuf;

use tb_control::cli::{cmd_all, RunConfig, RunStatus};

fn main() -> tb_control::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("tb-control-batch"));
    let cfg = RunConfig {
        out_dir,
        seed: 42,
        ..RunConfig::default()
    };
    cfg.validate()?;
    let status = cmd_all(&cfg)?;
    if status != RunStatus::Ok {
        eprintln!("finished with status {status:?}");
    }
    println!("outputs in {}", cfg.out_dir.display());
    Ok(())
}

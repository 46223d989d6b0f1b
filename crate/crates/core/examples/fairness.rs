//! Per-user rates under equal weights and under weights favouring the
//! users far from their BS.
//!
//! ```text
//! cargo run --release --example fairness -- [seeds]
//! ```

use irs_wsr::experiment::{run_points, sweep_points, weight_sets, Experiment, RunOptions};
use irs_wsr::ScenarioConfig;

fn main() -> irs_wsr::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let mut base = ScenarioConfig::two_cell();
    base.elements_per_irs = 20;
    let points = sweep_points(Experiment::WeightsFairness, &base)?;
    let records = run_points(&points, &RunOptions::new(Experiment::WeightsFairness, seeds))?;

    for (i, weights) in weight_sets().iter().enumerate() {
        let runs: Vec<_> = records.iter().filter(|r| r.sweep_value == (i + 1) as f64).collect();
        let mut mean = [0.0; 4];
        for r in &runs {
            for (m, v) in mean.iter_mut().zip(&r.user_rates) {
                *m += v / runs.len() as f64;
            }
        }
        println!("weights {weights:?}");
        for (u, rate) in mean.iter().enumerate() {
            println!("  user {}: {rate:6.3} bits/s/Hz", u + 1);
        }
    }
    Ok(())
}

//! Where to put the IRS: the large-scale gain of the reflected path along
//! the BS-user segment, then a short Monte-Carlo sweep of the IRS position.
//!
//! ```text
//! cargo run --release --example irs_placement -- [seeds]
//! ```

use irs_wsr::experiment::{combined_pathloss_curve, run_points, sweep_points, Experiment, Method, RunOptions};
use irs_wsr::{PhaseMethod, ScenarioConfig};

fn main() -> irs_wsr::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let cfg = ScenarioConfig::two_cell();

    let grid: Vec<f64> = (1..12).map(|i| 50.0 * i as f64).collect();
    let curve = combined_pathloss_curve(600.0, &grid, cfg.alpha_bi, cfg.pl0_db)?;
    println!("reflected-path gain between two points 600 m apart:");
    for (d, pl) in grid.iter().zip(&curve) {
        println!("  d = {d:5.0} m  {pl:8.2} dB");
    }

    let mut opts = RunOptions::new(Experiment::SweepIrsPos, seeds);
    opts.methods = vec![Method::Phase(PhaseMethod::Mm), Method::Phase(PhaseMethod::NoIrs)];
    opts.solve.n_max = 100;
    let mut small = cfg.clone();
    small.elements_per_irs = 20;
    let points = sweep_points(Experiment::SweepIrsPos, &small)?;
    let records = run_points(&points, &opts)?;
    for s in irs_wsr::experiment::summarize(&records) {
        println!("x_IRS = {:5.0} m  {:>6}  WSR {:.3}", s.sweep_value, s.method, s.mean_wsr_bits);
    }
    Ok(())
}

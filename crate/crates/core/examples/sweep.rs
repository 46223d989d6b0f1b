//! A full experiment from code: sweep the number of IRS elements, write the
//! CSV files and print the summary.
//!
//! ```text
//! cargo run --release --example sweep -- [seeds] [out_dir]
//! ```

use std::path::PathBuf;

use irs_wsr::experiment::{run_experiment, Experiment, RunOptions};

fn main() -> irs_wsr::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let out: PathBuf = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("irs-wsr-sweep"));

    let experiment = Experiment::SweepM;
    let mut opts = RunOptions::new(experiment, seeds);
    opts.solve.n_max = 60;
    let output = run_experiment(&experiment.default_config(), experiment, &out, &opts)?;
    for s in &output.summary {
        println!(
            "M = {:3}  {:>8}  WSR {:7.3}  95% [{:7.3}, {:7.3}]",
            s.sweep_value, s.method, s.mean_wsr_bits, s.ci95_low, s.ci95_high
        );
    }
    for f in output.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use irs_wsr::experiment::{run_experiment, Experiment, Method, RunOptions};
use irs_wsr::{Error, ScenarioConfig};

/// Monte-Carlo sweeps for IRS-aided multicell weighted-sum-rate maximization.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV files.
    Run {
        /// convergence, sweep_M, sweep_alpha_irs, sweep_irs_pos, sweep_user_pos,
        /// sweep_eta, weights_fairness, fourcell_single_irs or fourcell_two_irs
        experiment: String,
        /// Scenario JSON; defaults to the built-in layout of the experiment.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Number of seeds per sweep point (seeds 0..n).
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        /// Worker threads, 0 for all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Comma-separated subset of mm, ccm, rand, noirs, netmimo.
        #[arg(long)]
        method: Option<String>,
        /// BCD sweep cap.
        #[arg(long)]
        n_max: Option<usize>,
        /// Write wall_ms as 0 so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Print the built-in two-cell or four-cell config as JSON.
    Config {
        #[arg(default_value = "two_cell")]
        layout: String,
    },
}

fn run(cli: Cli) -> irs_wsr::Result<()> {
    match cli.command {
        Command::Config { layout } => {
            let cfg = match layout.as_str() {
                "two_cell" => ScenarioConfig::two_cell(),
                "four_cell" => ScenarioConfig::four_cell(),
                other => return Err(Error::Config(format!("no built-in layout `{other}`"))),
            };
            println!("{}", cfg.to_json_pretty());
            Ok(())
        }
        Command::Run { experiment, config, out, seeds, jobs, method, n_max, no_timing } => {
            let experiment: Experiment = experiment.parse()?;
            let base = match &config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                    ScenarioConfig::from_json_str(&text)?
                }
                None => experiment.default_config(),
            };
            let mut opts = RunOptions::new(experiment, seeds);
            opts.jobs = jobs;
            opts.timing = !no_timing;
            if let Some(m) = method {
                opts.methods = Method::parse_list(&m).map_err(|e| Error::Config(e.to_string()))?;
            }
            if let Some(n) = n_max {
                opts.solve.n_max = n;
            }
            let output = run_experiment(&base, experiment, &out, &opts)?;
            for s in &output.summary {
                println!(
                    "{:>8} {:<22} WSR {:8.3} [{:.3}, {:.3}] bits/s/Hz  {:6.1} sweeps",
                    s.sweep_value, s.method, s.mean_wsr_bits, s.ci95_low, s.ci95_high, s.mean_iterations
                );
            }
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! BCD trajectories with MM and CCM phase updates, plus the surrogate
//! recorded after each block update.
//!
//! ```text
//! cargo run --release --example convergence -- [M] [seed] [out.csv]
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};

use irs_wsr::scenario::synthesize;
use irs_wsr::solver::bcd_solve;
use irs_wsr::{PhaseMethod, ScenarioConfig, SolveOptions};

fn main() -> irs_wsr::Result<()> {
    let mut args = std::env::args().skip(1);
    let m: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let out = args.next();

    let mut cfg = ScenarioConfig::two_cell();
    cfg.elements_per_irs = m;
    let ch = synthesize(&cfg, seed)?;

    let mut rows = Vec::new();
    for method in [PhaseMethod::Mm, PhaseMethod::Ccm] {
        let opts = SolveOptions { init_seed: seed, record_surrogate: true, ..SolveOptions::with_method(method) };
        let rep = bcd_solve(&ch, &cfg, &opts)?;
        let chain_ok = rep.surrogate_trace.windows(2).all(|w| w[1] >= w[0] - 1e-8 * w[0].abs());
        println!(
            "{:>3}: {:3} sweeps, {:?}, WSR {:.4} -> {:.4}, surrogate chain non-decreasing: {chain_ok}",
            method.name(),
            rep.iterations,
            rep.termination,
            rep.wsr_trace[0],
            rep.wsr()
        );
        for (i, v) in rep.wsr_trace.iter().enumerate() {
            if i < 5 || i % 25 == 0 {
                println!("      sweep {i:3}  {v:.6}");
            }
            rows.push(format!("{},{i},{v}", method.name()));
        }
    }
    if let Some(path) = out {
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "method,iteration,wsr_bits")?;
        for r in rows {
            writeln!(w, "{r}")?;
        }
        println!("wrote {path}");
    }
    Ok(())
}

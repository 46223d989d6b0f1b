//! Coordinated beamforming against network MIMO, where every BS serves
//! every user under its own power budget.
//!
//! ```text
//! cargo run --release --example network_mimo -- [seeds] [M]
//! ```

use irs_wsr::scenario::synthesize;
use irs_wsr::solver::{bcd_solve, network_mimo_solve};
use irs_wsr::{ScenarioConfig, SolveOptions};

fn main() -> irs_wsr::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let m: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let mut cfg = ScenarioConfig::two_cell();
    cfg.elements_per_irs = m;

    let (mut sum_c, mut sum_n) = (0.0, 0.0);
    for seed in 0..seeds {
        let ch = synthesize(&cfg, seed)?;
        let opts = SolveOptions { init_seed: seed, ..SolveOptions::default() };
        let coordinated = bcd_solve(&ch, &cfg, &opts)?;
        let joint = network_mimo_solve(&ch, &cfg, &opts)?;
        let nt = cfg.tx_antennas;
        let powers: Vec<String> = (0..cfg.cells)
            .map(|n| {
                let p: f64 = joint.precoders_final.iter().map(|f| f.rows(n * nt, nt).norm_squared()).sum();
                format!("{p:.4}")
            })
            .collect();
        println!(
            "seed {seed}: coordinated {:7.3}  network MIMO {:7.3}  per-BS power [{}]",
            coordinated.wsr(),
            joint.wsr(),
            powers.join(", ")
        );
        sum_c += coordinated.wsr();
        sum_n += joint.wsr();
    }
    println!("mean: coordinated {:.3}, network MIMO {:.3}", sum_c / seeds as f64, sum_n / seeds as f64);
    Ok(())
}

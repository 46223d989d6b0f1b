//! One channel realization of the two-cell layout, solved with every phase
//! method.
//!
//! ```text
//! cargo run --release --example quickstart -- [M] [seed]
//! ```

use irs_wsr::scenario::synthesize;
use irs_wsr::solver::{bcd_solve, network_mimo_solve};
use irs_wsr::{PhaseMethod, ScenarioConfig, SolveOptions};

fn main() -> irs_wsr::Result<()> {
    let mut args = std::env::args().skip(1);
    let m: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(40);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let mut cfg = ScenarioConfig::two_cell();
    cfg.elements_per_irs = m;
    let ch = synthesize(&cfg, seed)?;
    println!("two cells, M = {m}, seed = {seed}, noise = {:.3e} W", cfg.noise_power_watts());

    for method in [PhaseMethod::Mm, PhaseMethod::Ccm, PhaseMethod::RandPhase, PhaseMethod::NoIrs] {
        let opts = SolveOptions { init_seed: seed, ..SolveOptions::with_method(method) };
        let rep = bcd_solve(&ch, &cfg, &opts)?;
        println!(
            "{:>6}: WSR {:8.4} bits/s/Hz after {:3} sweeps ({:?}, {:.0} ms)",
            method.name(),
            rep.wsr(),
            rep.iterations,
            rep.termination,
            rep.wall_time.as_secs_f64() * 1e3
        );
    }

    let opts = SolveOptions { init_seed: seed, ..SolveOptions::default() };
    let rep = network_mimo_solve(&ch, &cfg, &opts)?;
    println!(
        "netmimo: WSR {:8.4} bits/s/Hz after {:3} sweeps ({:?}, {:.0} ms)",
        rep.wsr(),
        rep.iterations,
        rep.termination,
        rep.wall_time.as_secs_f64() * 1e3
    );
    Ok(())
}

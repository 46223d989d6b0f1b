//! Draw one realization of the two-cell network and look at the link
//! budget of every channel.
//!
//! ```text
//! cargo run --release --example channels -- [seed]
//! ```

use irs_wsr::scenario::{distance, path_loss_db, synthesize};
use irs_wsr::ScenarioConfig;

fn main() -> irs_wsr::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = ScenarioConfig::two_cell();
    let ch = synthesize(&cfg, seed)?;
    let irs = cfg.irs_positions[0];

    println!("noise power {:.3e} W over {} MHz", cfg.noise_power_watts(), cfg.bandwidth_hz / 1e6);
    for n in 0..cfg.cells {
        let d = distance(cfg.bs_positions[n], irs);
        println!(
            "BS{} -> IRS   {:6.1} m  PL {:7.2} dB  |G|_F^2 {:.3e}",
            n + 1,
            d,
            path_loss_db(d, cfg.alpha_bi, &cfg)?,
            ch.g_bs_irs[n][0].norm_squared()
        );
    }
    for l in 0..cfg.cells {
        for k in 0..cfg.users_per_cell {
            let pos = ch.user_positions[ch.user_index(l, k)];
            print!("user ({},{}) at ({:6.1}, {:6.1})", l + 1, k + 1, pos[0], pos[1]);
            for n in 0..cfg.cells {
                print!("  |H_{}|^2 {:.2e}", n + 1, ch.h_direct[n][l][k].norm_squared());
            }
            println!("  |H_r|^2 {:.2e}", ch.h_irs_user[0][l][k].norm_squared());
        }
    }
    Ok(())
}

//! The phase subproblem of the first BCD sweep, solved by MM and by
//! gradient descent on the complex circle manifold.
//!
//! ```text
//! cargo run --release --example phase_solvers -- [seed]
//! ```

use irs_wsr::phasing::{assemble_quadratic, ccm_auto_parameters, ccm_solve, mm_solve, write_trace_csv};
use irs_wsr::precoder::PrecoderSubproblem;
use irs_wsr::scenario::synthesize;
use irs_wsr::solver::initialize;
use irs_wsr::system::EquivalentChannels;
use irs_wsr::wmmse::{mse_matrices, optimal_decoders, optimal_weights};
use irs_wsr::ScenarioConfig;

fn main() -> irs_wsr::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    for m in [10, 30, 50] {
        let mut cfg = ScenarioConfig::two_cell();
        cfg.elements_per_irs = m;
        let sigma2 = cfg.noise_power_watts();
        let ch = synthesize(&cfg, seed)?;

        // one sweep of U, W and F from the standard starting point
        let (mut f, phase) = initialize(&ch, &cfg, seed)?;
        let eq = EquivalentChannels::new(&ch, &phase)?;
        let u = optimal_decoders(&eq, &f, sigma2)?;
        let w = optimal_weights(&mse_matrices(&eq, &f, &u, sigma2))?;
        for l in 0..cfg.cells {
            let sol = PrecoderSubproblem::assemble(&eq, &u, &w, &cfg.weights, l, cfg.p_max)?.solve(1e-10)?;
            f.cell_mut(l).clone_from_slice(&sol.precoders);
        }

        let q = assemble_quadratic(&ch, &f, &u, &w, &cfg.weights, cfg.eta, sigma2)?;
        let (alpha, beta) = ccm_auto_parameters(&q);
        let mm = mm_solve(&q, &phase.phi, 1e-6, 500)?;
        let ccm = ccm_solve(&q, &phase.phi, 1e-6, 500, None, None)?;
        println!("M = {m}: λ_max {:.3e}, CCM α {alpha:.3e} β {beta:.3e}", q.lambda_max);
        for (name, out) in [("MM", &mm), ("CCM", &ccm)] {
            println!(
                "  {name:>3}: {:3} iterations, weighted MSE {:.6} -> {:.6}",
                out.iterations,
                out.trace[0] + q.const_offset,
                out.best_value() + q.const_offset
            );
        }
        if m == 50 {
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, &mm.trace)?;
            let text = String::from_utf8_lossy(&buf);
            println!("  first MM trace rows:");
            for line in text.lines().take(4) {
                println!("    {line}");
            }
        }
    }
    Ok(())
}

//! The per-BS precoder subproblem: the power curve `f(λ)`, the bisection on
//! the multiplier and what happens when `A` loses rank.
//!
//! ```text
//! cargo run --release --example precoder
//! ```

use irs_wsr::linalg::CMat;
use irs_wsr::precoder::PrecoderSubproblem;
use irs_wsr::scenario::{rayleigh_channel, substream, Stream};

fn report(name: &str, sub: &PrecoderSubproblem) -> irs_wsr::Result<()> {
    let sol = sub.solve(1e-10)?;
    println!(
        "{name}: rank {}/{}  λ* = {:.4e}  power {:.6} / {}  objective {:.6}",
        sub.rank(),
        sub.a.nrows(),
        sol.lambda,
        sol.power,
        sub.p_max,
        sub.objective(&sol.precoders)
    );
    for lam in [0.1 * sol.lambda, sol.lambda, 10.0 * sol.lambda] {
        if lam > 0.0 {
            println!("    f({lam:.3e}) = {:.6}", sub.power_curve(lam)?);
        }
    }
    Ok(())
}

fn main() -> irs_wsr::Result<()> {
    let mut rng = substream(7, Stream::Custom(0));
    let nt = 4;

    let g = rayleigh_channel(&mut rng, nt, 6);
    let rhs: Vec<CMat> = (0..2).map(|_| rayleigh_channel(&mut rng, nt, 2)).collect();
    report("full rank, tight budget ", &PrecoderSubproblem::new(&g * g.adjoint(), rhs.clone(), 0.5)?)?;
    report("full rank, loose budget ", &PrecoderSubproblem::new(&g * g.adjoint(), rhs, 1e3)?)?;

    // A of rank 2 with the right-hand side inside its range, as in the BCD
    let h = rayleigh_channel(&mut rng, nt, 2);
    let rhs: Vec<CMat> = (0..2).map(|_| &h * rayleigh_channel(&mut rng, 2, 2)).collect();
    report("rank 2, rhs in range    ", &PrecoderSubproblem::new(&h * h.adjoint(), rhs, 1e3)?)?;

    // the same A with a right-hand side that leaks into the null space
    let rhs: Vec<CMat> = (0..2).map(|_| rayleigh_channel(&mut rng, nt, 2)).collect();
    report("rank 2, rhs off range   ", &PrecoderSubproblem::new(&h * h.adjoint(), rhs, 1.0)?)?;
    Ok(())
}

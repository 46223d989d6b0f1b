//! Reflection-phase subproblem.
//!
//! With `F`, `U` and `W` fixed, the weighted MSE depends on the phases only
//! through `f(φ) = φ^H Ξ φ + 2 Re{φ^H v*}` with `Ξ = B ⊙ C^T`, to be
//! minimized over `|φ_m| = 1`. Two solvers are provided:
//!
//! - [`mm_solve`]: majorization-minimization with the surrogate built from
//!   the largest eigenvalue of `Ξ`; each step is a closed-form phase
//!   alignment.
//! - [`ccm_solve`]: Riemannian gradient descent on the complex circle
//!   manifold with tangent projection and normalization retraction.
//!
//! A reflection amplitude `eta < 1` is folded into the IRS-to-user channels,
//! which keeps the unit-modulus formulation unchanged.

use std::io::Write;

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_part, max_eigenvalue, trace, unit_phase, CMat, CVec};
use crate::scenario::ChannelSet;
use crate::system::{DecoderSet, EquivalentChannels, PhaseVector, PrecoderSet, WeightSet};

/// Default relative objective change that ends an inner solve.
pub const PHASE_TOL: f64 = 1e-6;
pub const PHASE_MAX_ITERS: usize = 500;

/// `f(φ) = φ^H Ξ φ + 2 Re{φ^H v*}` plus the constant dropped from the
/// weighted MSE.
#[derive(Debug, Clone)]
pub struct PhaseQuadratic {
    pub xi: CMat,
    pub v: CVec,
    pub lambda_max: f64,
    /// `Σ ω Tr(W E)` at zero reflection, so that `f + const_offset` is the
    /// full weighted MSE.
    pub const_offset: f64,
}

impl PhaseQuadratic {
    pub fn new(xi: CMat, v: CVec, const_offset: f64) -> Result<Self> {
        if xi.nrows() != xi.ncols() || xi.nrows() != v.len() {
            return Err(Error::Dimension(format!(
                "Ξ is {}x{} but v has {} entries",
                xi.nrows(),
                xi.ncols(),
                v.len()
            )));
        }
        let xi = hermitian_part(&xi);
        let lambda_max = max_eigenvalue(&xi).max(0.0);
        Ok(Self { xi, v, lambda_max, const_offset })
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    fn value(&self, phi: &CVec) -> f64 {
        let quad = phi.dotc(&(&self.xi * phi)).re;
        let lin: f64 = phi.iter().zip(self.v.iter()).map(|(p, v)| (p * v).re).sum();
        quad + 2.0 * lin
    }

    /// Magnitude scale of `f` on the torus, used as an absolute floor for
    /// the stopping test.
    fn scale(&self) -> f64 {
        self.lambda_max * self.len() as f64 + 2.0 * self.v.iter().map(|z| z.norm()).sum::<f64>()
    }

    /// `y(φ | φ^t) = λ φ^H φ - 2 Re{φ^H (λI - Ξ) φ^t} + φ^t^H (λI - Ξ) φ^t`,
    /// the upper bound on `φ^H Ξ φ` that touches it at `φ^t`.
    pub fn majorizer(&self, phi: &CVec, phi_t: &CVec) -> f64 {
        let shifted = phi_t.scale(self.lambda_max) - &self.xi * phi_t;
        self.lambda_max * phi.norm_squared() - 2.0 * phi.dotc(&shifted).re + phi_t.dotc(&shifted).re
    }
}

/// Build `Ξ`, `v` and the constant offset for the current iterate.
pub fn assemble_quadratic(
    ch: &ChannelSet,
    f: &PrecoderSet,
    u: &DecoderSet,
    w: &WeightSet,
    weights: &[f64],
    eta: f64,
    sigma2: f64,
) -> Result<PhaseQuadratic> {
    let am = ch.total_elements();
    let (cells, k_users) = (ch.cells, ch.users_per_cell);
    let g: Vec<CMat> = (0..cells).map(|n| ch.stacked_bs_irs(n)).collect();
    // G_n 𝔽_n with 𝔽_n = Σ_m F_{n,m} F_{n,m}^H
    let gf: Vec<CMat> = (0..cells)
        .map(|n| {
            let mut s = CMat::zeros(ch.tx_antennas, ch.tx_antennas);
            for fm in f.cell(n) {
                s += fm * fm.adjoint();
            }
            &g[n] * s
        })
        .collect();
    let mut cmat = CMat::zeros(am, am);
    for n in 0..cells {
        cmat += &gf[n] * g[n].adjoint();
    }
    let mut b = CMat::zeros(am, am);
    let mut v = CVec::zeros(am);
    for l in 0..cells {
        for k in 0..k_users {
            let omega = weights[l * k_users + k];
            if omega == 0.0 {
                continue;
            }
            let hr = ch.stacked_irs_user(l, k).scale(eta);
            let (uk, wk) = (&u[(l, k)], &w[(l, k)]);
            let q = (uk * wk * uk.adjoint()).scale(omega);
            let qhr = &q * &hr;
            b += hr.adjoint() * &qhr;
            for (n, gfn) in gf.iter().enumerate() {
                let x = gfn * ch.h_direct[n][l][k].adjoint();
                add_diag_of_product(&mut v, &x, &qhr, 1.0);
            }
            let x = &g[l] * &f[(l, k)];
            let y = (wk * uk.adjoint() * &hr).scale(omega);
            add_diag_of_product(&mut v, &x, &y, -1.0);
        }
    }
    let xi = CMat::from_fn(am, am, |i, j| b[(i, j)] * cmat[(j, i)]);
    let direct = EquivalentChannels::new(ch, &PhaseVector::zeros_angle(am, 0.0))?;
    let mut const_offset = 0.0;
    for l in 0..cells {
        for k in 0..k_users {
            let omega = weights[l * k_users + k];
            if omega != 0.0 {
                let e = direct.mse_matrix(f, &u[(l, k)], sigma2, l, k);
                const_offset += omega * trace(&(&w[(l, k)] * e)).re;
            }
        }
    }
    PhaseQuadratic::new(xi, v, const_offset)
}

/// `acc += sign * diag(x y)` without forming the product.
fn add_diag_of_product(acc: &mut CVec, x: &CMat, y: &CMat, sign: f64) {
    for i in 0..acc.len() {
        let mut s = c(0.0, 0.0);
        for j in 0..x.ncols() {
            s += x[(i, j)] * y[(j, i)];
        }
        acc[i] += s * sign;
    }
}

fn check_unit(phi: &CVec) -> Result<()> {
    match phi.iter().find(|z| (z.norm() - 1.0).abs() > 1e-8) {
        Some(z) => Err(Error::Contract(format!("phase entry {z} is off the unit circle"))),
        None => Ok(()),
    }
}

/// `f(φ)`; `φ` must be unit modulus to 1e-8.
pub fn quadratic_value(q: &PhaseQuadratic, phi: &CVec) -> Result<f64> {
    if phi.len() != q.len() {
        return Err(Error::Dimension(format!("phase has {} entries, quadratic {}", phi.len(), q.len())));
    }
    check_unit(phi)?;
    Ok(q.value(phi))
}

/// Result of an inner phase solve.
#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    /// Best iterate seen, unit modulus.
    pub phi: CVec,
    /// `f` at the initial point and after every iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iters` ran out before the stopping test held.
    pub converged: bool,
    /// Whether the monitored objective never increased beyond round-off
    /// (`f` for MM, the augmented `f + αM` for CCM, which differ by a constant).
    pub monotone: bool,
}

impl PhaseOutcome {
    pub fn best_value(&self) -> f64 {
        self.trace.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

struct Progress {
    best_phi: CVec,
    best: f64,
    trace: Vec<f64>,
    monotone: bool,
    slack: f64,
    /// Added to the tracked value before the relative stopping test.
    offset: f64,
}

impl Progress {
    fn new(phi: &CVec, value: f64, scale: f64, offset: f64) -> Self {
        Self {
            best_phi: phi.clone(),
            best: value,
            trace: vec![value],
            monotone: true,
            slack: 1e-10 * scale.max(1e-300),
            offset,
        }
    }

    /// Record a new iterate; returns whether the stopping test holds.
    fn push(&mut self, phi: &CVec, value: f64, tol: f64) -> bool {
        let prev = *self.trace.last().expect("trace starts non-empty");
        if value > prev + self.slack.max(1e-10 * prev.abs()) {
            self.monotone = false;
        }
        if value < self.best {
            self.best = value;
            self.best_phi = phi.clone();
        }
        self.trace.push(value);
        let change = (value - prev).abs();
        change <= tol * (prev + self.offset).abs() || change <= 1e-3 * self.slack
    }

    fn finish(self, converged: bool) -> PhaseOutcome {
        PhaseOutcome {
            iterations: self.trace.len() - 1,
            phi: self.best_phi,
            trace: self.trace,
            converged,
            monotone: self.monotone,
        }
    }
}

fn check_inputs(q: &PhaseQuadratic, phi0: &CVec, tol: f64, max_iters: usize) -> Result<()> {
    if phi0.len() != q.len() {
        return Err(Error::Dimension(format!("phase has {} entries, quadratic {}", phi0.len(), q.len())));
    }
    check_unit(phi0)?;
    if !(tol > 0.0) || max_iters == 0 {
        return Err(Error::Domain("need tol > 0 and max_iters >= 1".into()));
    }
    Ok(())
}

/// Majorization-minimization: `φ ← e^{j arg((λ_max I - Ξ) φ - v*)}`.
pub fn mm_solve(q: &PhaseQuadratic, phi0: &CVec, tol: f64, max_iters: usize) -> Result<PhaseOutcome> {
    check_inputs(q, phi0, tol, max_iters)?;
    let mut phi = phi0.clone();
    let mut progress = Progress::new(&phi, q.value(&phi), q.scale(), q.const_offset);
    let v_conj = q.v.map(|z| z.conj());
    for _ in 0..max_iters {
        let target = phi.scale(q.lambda_max) - &q.xi * &phi - &v_conj;
        if target.iter().all(|z| *z == c(0.0, 0.0)) {
            return Ok(progress.finish(true));
        }
        phi = target.map(unit_phase);
        if progress.push(&phi, q.value(&phi), tol) {
            return Ok(progress.finish(true));
        }
    }
    Ok(progress.finish(false))
}

/// Step parameters at the edge of the monotonicity guarantee:
/// `α = (M/8) λ_max + ‖v‖₂` and `β = 0.99 / (λ_max + α)`.
pub fn ccm_auto_parameters(q: &PhaseQuadratic) -> (f64, f64) {
    let alpha = q.len() as f64 / 8.0 * q.lambda_max + q.v.norm();
    let top = q.lambda_max + alpha;
    let beta = if top > 0.0 { 0.99 / top } else { 0.0 };
    (alpha, beta)
}

/// Whether `(α, β)` satisfies `α ≥ (M/8) λ_max + ‖v‖₂` and `0 < β < 1/(λ_max + α)`.
pub fn ccm_parameters_admissible(q: &PhaseQuadratic, alpha: f64, beta: f64) -> bool {
    let bound = q.len() as f64 / 8.0 * q.lambda_max + q.v.norm();
    alpha >= bound * (1.0 - 1e-12) && beta > 0.0 && beta * (q.lambda_max + alpha) < 1.0
}

/// Riemannian gradient descent on the complex circle manifold.
///
/// `alpha`/`beta` default to [`ccm_auto_parameters`]. Parameters outside the
/// admissible region are accepted with a warning and no monotonicity claim.
pub fn ccm_solve(
    q: &PhaseQuadratic,
    phi0: &CVec,
    tol: f64,
    max_iters: usize,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> Result<PhaseOutcome> {
    check_inputs(q, phi0, tol, max_iters)?;
    let (auto_alpha, _) = ccm_auto_parameters(q);
    let alpha = alpha.unwrap_or(auto_alpha);
    let top = q.lambda_max + alpha;
    let beta = beta.unwrap_or(if top > 0.0 { 0.99 / top } else { 0.0 });
    let admissible = ccm_parameters_admissible(q, alpha, beta);
    if !admissible && top > 0.0 {
        warn!("CCM step parameters alpha={alpha:e}, beta={beta:e} are outside the monotone region");
    }
    let mut phi = phi0.clone();
    let shift = alpha * q.len() as f64;
    // progress is tracked on the augmented objective f + αM
    let mut progress = Progress::new(&phi, q.value(&phi) + shift, q.scale() + shift.abs(), q.const_offset - shift);
    if top <= 0.0 {
        return Ok(unshift(progress.finish(true), shift));
    }
    let v_conj = q.v.map(|z| z.conj());
    for _ in 0..max_iters {
        let eta = (&q.xi * &phi + phi.scale(alpha) + &v_conj).scale(-2.0);
        let mut next = phi.clone();
        for m in 0..phi.len() {
            let radial = (eta[m].conj() * phi[m]).re;
            let step = phi[m] + (eta[m] - phi[m] * radial) * beta;
            if step.norm() > 0.0 {
                next[m] = step / step.norm();
            }
        }
        phi = next;
        if progress.push(&phi, q.value(&phi) + shift, tol) {
            return Ok(unshift(progress.finish(true), shift));
        }
    }
    Ok(unshift(progress.finish(false), shift))
}

fn unshift(mut out: PhaseOutcome, shift: f64) -> PhaseOutcome {
    for t in out.trace.iter_mut() {
        *t -= shift;
    }
    out
}

/// Write `iteration,objective` rows for a convergence plot.
pub fn write_trace_csv<W: Write>(writer: W, trace: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["iteration", "objective"])?;
    for (i, v) in trace.iter().enumerate() {
        out.write_record([i.to_string(), format!("{v:.12e}")])?;
    }
    out.flush()?;
    Ok(())
}

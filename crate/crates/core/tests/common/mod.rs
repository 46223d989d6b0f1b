//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use irs_wsr::linalg::{c, CMat, CVec};
use irs_wsr::phasing::PhaseQuadratic;
use irs_wsr::scenario::{rayleigh_channel, substream, synthesize, Stream};
use irs_wsr::{ChannelSet, PrecoderSet, ScenarioConfig, UserGrid};
use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64, tag: u64) -> ChaCha8Rng {
    substream(seed, Stream::Custom(1000 + tag))
}

/// Two cells, two users each, 4x2 antennas, two streams, one 8-element IRS.
pub fn small_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::two_cell();
    cfg.elements_per_irs = 8;
    cfg
}

pub fn small_instance(seed: u64) -> (ScenarioConfig, ChannelSet) {
    let cfg = small_config();
    let ch = synthesize(&cfg, seed).unwrap();
    (cfg, ch)
}

/// Gaussian precoders with total power `p` per BS.
pub fn random_precoders(ch: &ChannelSet, d: usize, p: f64, seed: u64) -> PrecoderSet {
    let mut r = rng(seed, 1);
    let mut f = UserGrid::from_fn(ch.cells, ch.users_per_cell, |_, _| rayleigh_channel(&mut r, ch.tx_antennas, d));
    for l in 0..ch.cells {
        let total: f64 = f.cell(l).iter().map(|x| x.norm_squared()).sum();
        for x in f.cell_mut(l) {
            *x *= c((p / total).sqrt(), 0.0);
        }
    }
    f
}

/// `G G^H` with `G` of size n x rank.
pub fn random_psd(r: &mut ChaCha8Rng, n: usize, rank: usize) -> CMat {
    let g = rayleigh_channel(r, n, rank);
    &g * g.adjoint()
}

/// `Ξ = B ⊙ C^T` with random PSD `B`, `C`, and a random linear term.
pub fn random_phase_quadratic(seed: u64, m: usize) -> PhaseQuadratic {
    let mut r = rng(seed, 2);
    let b = random_psd(&mut r, m, m);
    let cm = random_psd(&mut r, m, m);
    let xi = CMat::from_fn(m, m, |i, j| b[(i, j)] * cm[(j, i)]);
    let v = rayleigh_channel(&mut r, m, 1).column(0).into_owned();
    PhaseQuadratic::new(xi, v, 0.0).unwrap()
}

pub fn unit_vector(theta: &[f64]) -> CVec {
    CVec::from_iterator(theta.len(), theta.iter().map(|t| Complex64::from_polar(1.0, *t)))
}

/// `φ^H Ξ φ + 2 Re Σ φ_m v_m`, evaluated entrywise.
pub fn phase_objective(xi: &CMat, v: &CVec, phi: &CVec) -> f64 {
    let m = phi.len();
    let mut s = c(0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            s += phi[i].conj() * xi[(i, j)] * phi[j];
        }
        s += c(2.0, 0.0) * c((phi[i] * v[i]).re, 0.0);
    }
    s.re
}

/// Bound on `|∂f/∂θ_m|` over the torus.
pub fn phase_gradient_bound(xi: &CMat, v: &CVec) -> f64 {
    (0..v.len())
        .map(|i| 2.0 * ((0..v.len()).map(|j| xi[(i, j)].norm()).sum::<f64>() + v[i].norm()))
        .fold(0.0, f64::max)
}

/// Exhaustive minimum over `n` phases per element (M = 1 or 2).
pub fn grid_minimum(xi: &CMat, v: &CVec, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    match v.len() {
        1 => (0..n).map(|i| phase_objective(xi, v, &unit_vector(&[i as f64 * h]))).fold(f64::INFINITY, f64::min),
        2 => {
            let mut best = f64::INFINITY;
            for i in 0..n {
                for j in 0..n {
                    best = best.min(phase_objective(xi, v, &unit_vector(&[i as f64 * h, j as f64 * h])));
                }
            }
            best
        }
        m => panic!("grid oracle only for M <= 2, got {m}"),
    }
}

/// `Σ_k Tr(F_k^H A F_k) - 2 Re Tr(R_k^H F_k)`.
pub fn precoder_objective(a: &CMat, rhs: &[CMat], f: &[CMat]) -> f64 {
    let mut s = 0.0;
    for (fk, rk) in f.iter().zip(rhs) {
        s += (fk.adjoint() * a * fk).trace().re - 2.0 * (rk.adjoint() * fk).trace().re;
    }
    s
}

fn largest_eigenvalue(a: &CMat) -> f64 {
    // real symmetric embedding [[Re, -Im], [Im, Re]] shares the spectrum
    let n = a.nrows();
    let emb = nalgebra::DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = a[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    SymmetricEigen::new(emb).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Accelerated projected gradient with restarts on the ball `Σ‖F_k‖² ≤ p`.
pub fn projected_gradient_precoder(a: &CMat, rhs: &[CMat], p: f64, iters: usize) -> Vec<CMat> {
    let d: usize = rhs.iter().map(|r| r.ncols()).sum();
    let n = a.nrows();
    let mut r = CMat::zeros(n, d);
    let mut col = 0;
    for rk in rhs {
        r.columns_mut(col, rk.ncols()).copy_from(rk);
        col += rk.ncols();
    }
    let step = 1.0 / (2.0 * largest_eigenvalue(a)).max(1e-300);
    let project = |x: CMat| {
        let norm = x.norm_squared();
        if norm > p {
            x * c((p / norm).sqrt(), 0.0)
        } else {
            x
        }
    };
    let obj = |x: &CMat| (x.adjoint() * a * x).trace().re - 2.0 * (r.adjoint() * x).trace().re;
    let mut x = CMat::zeros(n, d);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = obj(&x);
    for _ in 0..iters {
        let grad = (a * &y - &r) * c(2.0, 0.0);
        let next = project(&y - grad * c(step, 0.0));
        let fn_ = obj(&next);
        if fn_ > fx {
            // restart momentum
            t = 1.0;
            y = x.clone();
            continue;
        }
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = &next + (&next - &x) * c((t - 1.0) / tn, 0.0);
        x = next;
        fx = fn_;
        t = tn;
    }
    let mut out = Vec::new();
    let mut col = 0;
    for rk in rhs {
        out.push(x.columns(col, rk.ncols()).into_owned());
        col += rk.ncols();
    }
    out
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

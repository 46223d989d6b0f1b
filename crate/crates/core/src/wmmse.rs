//! Closed-form decoder and weight updates and the surrogate `h_{l,k}`.
//!
//! The surrogate is `ω (ln det W - Tr(W E) + d) / ln 2`, so with both
//! closed forms in place it equals the user rate in bits.

use std::f64::consts::LN_2;

use crate::error::Result;
use crate::linalg::{hermitian_part, hpd_inverse, hpd_solve, ln_det_hpd, trace, CMat};
use crate::system::{DecoderSet, EquivalentChannels, PrecoderSet, UserGrid, WeightSet};

/// MMSE receiver `(J + H̄ F F^H H̄^H)^{-1} H̄ F` of user (l, k).
pub fn optimal_decoder(eq: &EquivalentChannels, f: &PrecoderSet, sigma2: f64, l: usize, k: usize) -> Result<CMat> {
    let r = eq.received_covariance(f, sigma2, l, k);
    hpd_solve(&r, &eq.signal(f, l, k))
}

/// `W = E^{-1}`.
pub fn optimal_weight(e: &CMat) -> Result<CMat> {
    hpd_inverse(&hermitian_part(e))
}

/// `ω (log2 det W - (Tr(W E) - d) / ln 2)`.
pub fn surrogate_value(w: &CMat, e: &CMat, weight: f64) -> Result<f64> {
    if weight == 0.0 {
        return Ok(0.0);
    }
    let d = w.nrows() as f64;
    let tr = trace(&(w * e)).re;
    Ok(weight * (ln_det_hpd(w)? - tr + d) / LN_2)
}

pub fn optimal_decoders(eq: &EquivalentChannels, f: &PrecoderSet, sigma2: f64) -> Result<DecoderSet> {
    UserGrid::try_from_fn(eq.cells(), eq.users_per_cell(), |l, k| optimal_decoder(eq, f, sigma2, l, k))
}

pub fn mse_matrices(eq: &EquivalentChannels, f: &PrecoderSet, u: &DecoderSet, sigma2: f64) -> UserGrid<CMat> {
    UserGrid::from_fn(eq.cells(), eq.users_per_cell(), |l, k| eq.mse_matrix(f, &u[(l, k)], sigma2, l, k))
}

pub fn optimal_weights(e: &UserGrid<CMat>) -> Result<WeightSet> {
    UserGrid::try_from_fn(e.cells(), e.users_per_cell(), |l, k| optimal_weight(&e[(l, k)]))
}

/// `Σ ω_{l,k} h_{l,k}` for the iterate `(F, U, W)`.
pub fn surrogate_sum(
    eq: &EquivalentChannels,
    f: &PrecoderSet,
    u: &DecoderSet,
    w: &WeightSet,
    sigma2: f64,
    weights: &[f64],
) -> Result<f64> {
    let e = mse_matrices(eq, f, u, sigma2);
    let mut total = 0.0;
    for (i, (wi, ei)) in w.iter().zip(e.iter()).enumerate() {
        total += surrogate_value(wi, ei, weights[i])?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, frob_sq, identity};
    use crate::scenario::{rayleigh_channel, substream, synthesize, ChannelSet, ScenarioConfig, Stream};
    use crate::system::PhaseVector;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn scalar_set(h: f64) -> ChannelSet {
        ChannelSet {
            cells: 1,
            users_per_cell: 1,
            tx_antennas: 1,
            rx_antennas: 1,
            irs_count: 0,
            elements_per_irs: 1,
            h_direct: vec![vec![vec![CMat::from_element(1, 1, c(h, 0.0))]]],
            h_irs_user: vec![],
            g_bs_irs: vec![vec![]],
            user_positions: vec![[0.0; 3]],
            seed: 0,
        }
    }

    #[test]
    fn scalar_decoder_is_wiener_filter() {
        let (h, f0, sigma2) = (0.9, 0.6, 0.05);
        let ch = scalar_set(h);
        let eq = EquivalentChannels::new(&ch, &PhaseVector::zeros_angle(0, 1.0)).unwrap();
        let f = UserGrid::from_fn(1, 1, |_, _| CMat::from_element(1, 1, c(f0, 0.0)));
        let u = optimal_decoder(&eq, &f, sigma2, 0, 0).unwrap();
        assert_relative_eq!(u[(0, 0)].re, h * f0 / ((h * f0).powi(2) + sigma2), max_relative = 1e-14);
        let zero = UserGrid::from_fn(1, 1, |_, _| CMat::zeros(1, 1));
        assert_eq!(optimal_decoder(&eq, &zero, sigma2, 0, 0).unwrap()[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn weight_examples() {
        assert_eq!(optimal_weight(&identity(3)).unwrap(), identity(3));
        let e = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 0.0), c(4.0, 0.0)]));
        let w = optimal_weight(&e).unwrap();
        assert_relative_eq!(w[(0, 0)].re, 0.5, max_relative = 1e-15);
        assert_relative_eq!(w[(1, 1)].re, 0.25, max_relative = 1e-15);
        let mut rng = substream(4, Stream::Custom(1));
        let g = rayleigh_channel(&mut rng, 4, 4);
        let e = &g * g.adjoint() + identity(4).scale(0.1);
        let back = optimal_weight(&e).unwrap() * &e;
        assert!(frob_sq(&(back - identity(4))).sqrt() < 1e-10);
        assert!(optimal_weight(&CMat::zeros(2, 2)).is_err());
    }

    #[test]
    fn surrogate_examples() {
        assert_eq!(surrogate_value(&identity(2), &identity(2), 1.0).unwrap(), 0.0);
        let mut rng = substream(5, Stream::Custom(1));
        let g = rayleigh_channel(&mut rng, 3, 3);
        let e = &g * g.adjoint() + identity(3);
        let w = optimal_weight(&e).unwrap();
        let expect = -ln_det_hpd(&e).unwrap() / LN_2;
        assert_relative_eq!(surrogate_value(&w, &e, 1.0).unwrap(), expect, max_relative = 1e-12);
        assert_relative_eq!(surrogate_value(&w, &e, 2.5).unwrap(), 2.5 * expect, max_relative = 1e-12);
    }

    #[test]
    fn decoder_is_locally_optimal() {
        let mut cfg = ScenarioConfig::two_cell();
        cfg.elements_per_irs = 6;
        let ch = synthesize(&cfg, 21).unwrap();
        let eq = EquivalentChannels::new(&ch, &PhaseVector::random(6, 1.0, 21)).unwrap();
        let mut rng = substream(21, Stream::Custom(2));
        let f = UserGrid::from_fn(2, 2, |_, _| rayleigh_channel(&mut rng, 4, 2).scale(0.5));
        let sigma2 = cfg.noise_power_watts();
        let u = optimal_decoder(&eq, &f, sigma2, 1, 0).unwrap();
        let base = trace(&eq.mse_matrix(&f, &u, sigma2, 1, 0)).re;
        let scale = frob_sq(&u).sqrt();
        for i in 0..2000 {
            let size = scale * 10f64.powi(-(1 + i % 6));
            let du: DMatrix<_> = rayleigh_channel(&mut rng, 2, 2).scale(size);
            let trial = trace(&eq.mse_matrix(&f, &(&u + du), sigma2, 1, 0)).re;
            assert!(trial >= base - 1e-9 * base.abs().max(1.0), "perturbation improved {base} to {trial}");
        }
    }
}

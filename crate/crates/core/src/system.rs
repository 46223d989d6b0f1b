//! Equivalent channels, interference covariances, per-user rates, MSE
//! matrices and weighted-sum-rate evaluation for a given iterate.
//!
//! Rates are reported in bits/s/Hz. Multiple IRSs are always handled in
//! stacked form, so one IRS is not a special case.

use std::f64::consts::LN_2;
use std::ops::{Index, IndexMut};

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_part, identity, ln_det_hpd, CMat, CVec};
use crate::scenario::{substream, ChannelSet, Stream};

/// Per-user values stored cell-major: entry `(l, k)` lives at `l * K + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserGrid<T> {
    cells: usize,
    users_per_cell: usize,
    items: Vec<T>,
}

impl<T> UserGrid<T> {
    pub fn from_fn(cells: usize, users_per_cell: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut items = Vec::with_capacity(cells * users_per_cell);
        for l in 0..cells {
            for k in 0..users_per_cell {
                items.push(f(l, k));
            }
        }
        Self { cells, users_per_cell, items }
    }

    pub fn try_from_fn(
        cells: usize,
        users_per_cell: usize,
        mut f: impl FnMut(usize, usize) -> Result<T>,
    ) -> Result<Self> {
        let mut items = Vec::with_capacity(cells * users_per_cell);
        for l in 0..cells {
            for k in 0..users_per_cell {
                items.push(f(l, k)?);
            }
        }
        Ok(Self { cells, users_per_cell, items })
    }

    pub fn from_vec(cells: usize, users_per_cell: usize, items: Vec<T>) -> Result<Self> {
        if items.len() != cells * users_per_cell {
            return Err(Error::Dimension(format!(
                "{} items for a {cells} x {users_per_cell} user grid",
                items.len()
            )));
        }
        Ok(Self { cells, users_per_cell, items })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn users_per_cell(&self) -> usize {
        self.users_per_cell
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Users of cell `l`.
    pub fn cell(&self, l: usize) -> &[T] {
        &self.items[l * self.users_per_cell..(l + 1) * self.users_per_cell]
    }

    pub fn cell_mut(&mut self, l: usize) -> &mut [T] {
        let k = self.users_per_cell;
        &mut self.items[l * k..(l + 1) * k]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.items
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.items.iter()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.items
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> UserGrid<U> {
        UserGrid { cells: self.cells, users_per_cell: self.users_per_cell, items: self.items.iter().map(f).collect() }
    }
}

impl<T> Index<(usize, usize)> for UserGrid<T> {
    type Output = T;
    fn index(&self, (l, k): (usize, usize)) -> &T {
        &self.items[l * self.users_per_cell + k]
    }
}

impl<T> IndexMut<(usize, usize)> for UserGrid<T> {
    fn index_mut(&mut self, (l, k): (usize, usize)) -> &mut T {
        &mut self.items[l * self.users_per_cell + k]
    }
}

/// `F[l][k]`, `Nt x d`.
pub type PrecoderSet = UserGrid<CMat>;
/// `U[l][k]`, `Nr x d`.
pub type DecoderSet = UserGrid<CMat>;
/// `W[l][k]`, `d x d`.
pub type WeightSet = UserGrid<CMat>;

/// Reflection coefficients of all IRS elements: `eta * phi_m` with `|phi_m| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    pub phi: CVec,
    pub eta: f64,
}

impl PhaseVector {
    /// Checked constructor; every entry must be unit modulus to 1e-8.
    pub fn new(phi: CVec, eta: f64) -> Result<Self> {
        if let Some(bad) = phi.iter().find(|z| (z.norm() - 1.0).abs() > 1e-8) {
            return Err(Error::Contract(format!("phase entry {bad} is not unit modulus")));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Domain(format!("reflection amplitude {eta} outside [0, 1]")));
        }
        Ok(Self { phi, eta })
    }

    pub fn from_angles(theta: &[f64], eta: f64) -> Self {
        Self { phi: CVec::from_iterator(theta.len(), theta.iter().map(|t| c(t.cos(), t.sin()))), eta }
    }

    /// All phases zero.
    pub fn zeros_angle(len: usize, eta: f64) -> Self {
        Self { phi: CVec::from_element(len, c(1.0, 0.0)), eta }
    }

    /// Uniform random phases in `[0, 2π)` from the init substream of `seed`.
    pub fn random(len: usize, eta: f64, seed: u64) -> Self {
        let mut rng = substream(seed, Stream::InitPhase);
        let theta: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        Self::from_angles(&theta, eta)
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// `eta * phi`.
    pub fn coefficients(&self) -> CVec {
        self.phi.scale(self.eta)
    }

    pub fn angles(&self) -> Vec<f64> {
        self.phi.iter().map(|z| z.arg()).collect()
    }
}

fn check_phase(ch: &ChannelSet, phase: &PhaseVector) -> Result<()> {
    if phase.len() != ch.total_elements() {
        return Err(Error::Dimension(format!(
            "phase vector has {} entries, channel set has {} reflection elements",
            phase.len(),
            ch.total_elements()
        )));
    }
    Ok(())
}

/// `H^r_{l,k} diag(eta phi) G^r_n + H_{n,l,k}`.
pub fn equivalent_channel(ch: &ChannelSet, phase: &PhaseVector, n: usize, l: usize, k: usize) -> Result<CMat> {
    check_phase(ch, phase)?;
    if n >= ch.cells || l >= ch.cells || k >= ch.users_per_cell {
        return Err(Error::Dimension(format!("index ({n}, {l}, {k}) out of range")));
    }
    let coeff = phase.coefficients();
    Ok(reflected(ch, &coeff, n, l, k) + &ch.h_direct[n][l][k])
}

fn reflected(ch: &ChannelSet, coeff: &CVec, n: usize, l: usize, k: usize) -> CMat {
    let mut hr = ch.stacked_irs_user(l, k);
    for (j, z) in coeff.iter().enumerate() {
        hr.column_mut(j).apply(|x| *x *= *z);
    }
    hr * ch.stacked_bs_irs(n)
}

/// All equivalent channels `H̄_{n,l,k}` of one iterate.
#[derive(Debug, Clone)]
pub struct EquivalentChannels {
    cells: usize,
    users_per_cell: usize,
    rx: usize,
    /// `[n][l * K + k]`.
    h: Vec<Vec<CMat>>,
}

impl EquivalentChannels {
    pub fn new(ch: &ChannelSet, phase: &PhaseVector) -> Result<Self> {
        check_phase(ch, phase)?;
        let coeff = phase.coefficients();
        let g: Vec<CMat> = (0..ch.cells).map(|n| ch.stacked_bs_irs(n)).collect();
        let mut h = vec![Vec::with_capacity(ch.num_users()); ch.cells];
        for l in 0..ch.cells {
            for k in 0..ch.users_per_cell {
                let mut hr = ch.stacked_irs_user(l, k);
                for (j, z) in coeff.iter().enumerate() {
                    hr.column_mut(j).apply(|x| *x *= *z);
                }
                for n in 0..ch.cells {
                    h[n].push(&hr * &g[n] + &ch.h_direct[n][l][k]);
                }
            }
        }
        Ok(Self { cells: ch.cells, users_per_cell: ch.users_per_cell, rx: ch.rx_antennas, h })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn users_per_cell(&self) -> usize {
        self.users_per_cell
    }

    /// `H̄_{n,l,k}`.
    pub fn get(&self, n: usize, l: usize, k: usize) -> &CMat {
        &self.h[n][l * self.users_per_cell + k]
    }

    /// `H̄_{l,l,k} F_{l,k}`, the useful signal matrix of user (l, k).
    pub fn signal(&self, f: &PrecoderSet, l: usize, k: usize) -> CMat {
        self.get(l, l, k) * &f[(l, k)]
    }

    /// `J_{l,k}`: interference from every other stream plus `σ² I`.
    pub fn interference_covariance(&self, f: &PrecoderSet, sigma2: f64, l: usize, k: usize) -> CMat {
        let mut j = identity(self.rx).scale(sigma2);
        for n in 0..self.cells {
            let h = self.get(n, l, k);
            for m in 0..self.users_per_cell {
                if n == l && m == k {
                    continue;
                }
                let s = h * &f[(n, m)];
                j += &s * s.adjoint();
            }
        }
        hermitian_part(&j)
    }

    /// `J_{l,k} + H̄ F F^H H̄^H`, the covariance of the received signal.
    pub fn received_covariance(&self, f: &PrecoderSet, sigma2: f64, l: usize, k: usize) -> CMat {
        let s = self.signal(f, l, k);
        hermitian_part(&(self.interference_covariance(f, sigma2, l, k) + &s * s.adjoint()))
    }

    /// Rate of user (l, k) in bits/s/Hz.
    pub fn user_rate(&self, f: &PrecoderSet, sigma2: f64, l: usize, k: usize) -> Result<f64> {
        if !(sigma2 > 0.0) {
            return Err(Error::Domain(format!("noise power must be positive, got {sigma2}")));
        }
        let j = self.interference_covariance(f, sigma2, l, k);
        let s = self.signal(f, l, k);
        let r = hermitian_part(&(&j + &s * s.adjoint()));
        Ok(((ln_det_hpd(&r)? - ln_det_hpd(&j)?) / LN_2).max(0.0))
    }

    pub fn user_rates(&self, f: &PrecoderSet, sigma2: f64) -> Result<UserGrid<f64>> {
        UserGrid::try_from_fn(self.cells, self.users_per_cell, |l, k| self.user_rate(f, sigma2, l, k))
    }

    /// `E_{l,k} = I - U^H S - S^H U + U^H (J + S S^H) U` with `S = H̄ F`.
    pub fn mse_matrix(&self, f: &PrecoderSet, u: &CMat, sigma2: f64, l: usize, k: usize) -> CMat {
        let s = self.signal(f, l, k);
        let r = self.received_covariance(f, sigma2, l, k);
        let uhs = u.adjoint() * &s;
        let e = identity(u.ncols()) - &uhs - uhs.adjoint() + u.adjoint() * r * u;
        hermitian_part(&e)
    }

    pub fn weighted_sum_rate(&self, f: &PrecoderSet, sigma2: f64, weights: &[f64]) -> Result<f64> {
        check_weights(weights, self.cells * self.users_per_cell)?;
        let rates = self.user_rates(f, sigma2)?;
        Ok(rates.iter().zip(weights).map(|(r, w)| r * w).sum())
    }
}

fn check_weights(weights: &[f64], users: usize) -> Result<()> {
    if weights.len() != users {
        return Err(Error::Dimension(format!("{} weights for {users} users", weights.len())));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Domain("weights must be non-negative".into()));
    }
    Ok(())
}

pub fn interference_covariance(
    ch: &ChannelSet,
    phase: &PhaseVector,
    f: &PrecoderSet,
    sigma2: f64,
    l: usize,
    k: usize,
) -> Result<CMat> {
    Ok(EquivalentChannels::new(ch, phase)?.interference_covariance(f, sigma2, l, k))
}

pub fn user_rate(ch: &ChannelSet, phase: &PhaseVector, f: &PrecoderSet, sigma2: f64, l: usize, k: usize) -> Result<f64> {
    EquivalentChannels::new(ch, phase)?.user_rate(f, sigma2, l, k)
}

pub fn mse_matrix(
    ch: &ChannelSet,
    phase: &PhaseVector,
    f: &PrecoderSet,
    u: &CMat,
    sigma2: f64,
    l: usize,
    k: usize,
) -> Result<CMat> {
    Ok(EquivalentChannels::new(ch, phase)?.mse_matrix(f, u, sigma2, l, k))
}

pub fn weighted_sum_rate(
    ch: &ChannelSet,
    phase: &PhaseVector,
    f: &PrecoderSet,
    sigma2: f64,
    weights: &[f64],
) -> Result<f64> {
    EquivalentChannels::new(ch, phase)?.weighted_sum_rate(f, sigma2, weights)
}

/// Total transmit power of each BS, `Σ_k ‖F_{l,k}‖_F²`.
pub fn bs_powers(f: &PrecoderSet) -> Vec<f64> {
    (0..f.cells()).map(|l| f.cell(l).iter().map(crate::linalg::frob_sq).sum()).collect()
}

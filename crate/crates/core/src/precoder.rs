//! Per-BS precoder subproblem.
//!
//! With decoders `U` and weights `W` fixed, BS `l` minimizes
//! `Σ_k Tr(F_k^H A F_k) - 2 Re Tr(R_k^H F_k)` subject to `Σ_k ‖F_k‖² ≤ P`,
//! where `A = Σ ω H̄^H U W U^H H̄` runs over every user the BS reaches and
//! `R_k = ω_k H̄_k^H U_k W_k`. The Lagrangian stationary point is
//! `F_k(λ) = (A + λI)^† R_k`; with `A = Q Λ Q^H` and `Z = Q^H (Σ R R^H) Q`
//! its power is `f(λ) = Σ_i Z_ii / (Λ_i + λ)²`, which is decreasing in λ,
//! so the multiplier is found by bisection.
//!
//! [`solve_blocks`] handles a precoder whose antennas are split into
//! several independently budgeted blocks (network MIMO).

use crate::error::{Error, Result};
use crate::linalg::{frob_sq, hermitian_part, trace, CMat, HermitianEigen};
use crate::system::{DecoderSet, EquivalentChannels, WeightSet};

/// Eigenvalues below this fraction of the largest count as zero.
pub const RANK_THRESHOLD: f64 = 1e-10;
/// Default relative width of the final λ interval.
pub const BISECTION_TOL: f64 = 1e-10;
/// Null-space entries of `Z` below this fraction of `tr Z` are round-off.
const NULL_DUST: f64 = 1e-20;

/// Per-BS precoder problem with its cached eigendecomposition.
#[derive(Debug, Clone)]
pub struct PrecoderSubproblem {
    pub a: CMat,
    pub rhs: Vec<CMat>,
    pub p_max: f64,
    /// Eigendecomposition of `A` with eigenvalues under the rank threshold
    /// (and negative round-off) set to zero.
    pub eigen: HermitianEigen,
    pub z: CMat,
    rank: usize,
    z_diag: Vec<f64>,
}

/// Solution of one subproblem.
#[derive(Debug, Clone)]
pub struct PrecoderSolution {
    pub precoders: Vec<CMat>,
    pub lambda: f64,
    pub power: f64,
}

impl PrecoderSubproblem {
    pub fn new(a: CMat, rhs: Vec<CMat>, p_max: f64) -> Result<Self> {
        let nt = a.nrows();
        if a.ncols() != nt || rhs.iter().any(|r| r.nrows() != nt) {
            return Err(Error::Dimension("A must be square and match the rhs rows".into()));
        }
        if !(p_max > 0.0) {
            return Err(Error::Domain(format!("power budget must be positive, got {p_max}")));
        }
        let a = hermitian_part(&a);
        let mut eigen = HermitianEigen::new(&a);
        let rank = eigen.rank(RANK_THRESHOLD);
        for v in eigen.values.iter_mut().skip(rank) {
            *v = 0.0;
        }
        let mut s = CMat::zeros(nt, nt);
        for r in &rhs {
            s += r * r.adjoint();
        }
        let z = hermitian_part(&(eigen.vectors.adjoint() * s * &eigen.vectors));
        let z_diag = z.diagonal().iter().map(|v| v.re.max(0.0)).collect();
        Ok(Self { a, rhs, p_max, eigen, z, rank, z_diag })
    }

    /// Subproblem of BS `l` for the current decoders and weights.
    pub fn assemble(
        eq: &EquivalentChannels,
        u: &DecoderSet,
        w: &WeightSet,
        weights: &[f64],
        l: usize,
        p_max: f64,
    ) -> Result<Self> {
        let k_users = eq.users_per_cell();
        let nt = eq.get(l, 0, 0).ncols();
        let mut a = CMat::zeros(nt, nt);
        let mut rhs = Vec::with_capacity(k_users);
        for n in 0..eq.cells() {
            for m in 0..k_users {
                let omega = weights[n * k_users + m];
                let x = eq.get(l, n, m).adjoint() * &u[(n, m)];
                let xw = &x * &w[(n, m)];
                if omega != 0.0 {
                    a += (&xw * x.adjoint()).scale(omega);
                }
                if n == l {
                    rhs.push(xw.scale(omega));
                }
            }
        }
        Self::new(a, rhs, p_max)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.a.nrows()
    }

    /// Diagonal of `Z`.
    pub fn z_diag(&self) -> &[f64] {
        &self.z_diag
    }

    fn null_mass(&self) -> f64 {
        self.z_diag[self.rank..].iter().sum()
    }

    fn null_is_dust(&self) -> bool {
        let total: f64 = self.z_diag.iter().sum();
        self.null_mass() <= NULL_DUST * total
    }

    /// `F_k(λ) = (A + λI)^† R_k` for every user of the BS.
    pub fn precoder_at(&self, lambda: f64) -> Result<Vec<CMat>> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("multiplier must be non-negative, got {lambda}")));
        }
        let q = &self.eigen.vectors;
        let inv: Vec<f64> = self
            .eigen
            .values
            .iter()
            .map(|&v| if v + lambda > 0.0 { 1.0 / (v + lambda) } else { 0.0 })
            .collect();
        Ok(self
            .rhs
            .iter()
            .map(|r| {
                let mut t = q.adjoint() * r;
                for (i, s) in inv.iter().enumerate() {
                    t.row_mut(i).scale_mut(*s);
                }
                q * t
            })
            .collect())
    }

    /// `f(λ) = Σ_i Z_ii / (Λ_i + λ)²`.
    pub fn power_curve(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("multiplier must be non-negative, got {lambda}")));
        }
        if lambda == 0.0 && !self.is_full_rank() && !self.null_is_dust() {
            return Err(Error::Domain("power curve diverges at λ = 0 for rank-deficient A".into()));
        }
        Ok(self
            .eigen
            .values
            .iter()
            .zip(&self.z_diag)
            .map(|(&v, &z)| if v + lambda > 0.0 { z / (v + lambda).powi(2) } else { 0.0 })
            .sum())
    }

    /// Upper end of the bisection bracket, `sqrt(Σ Z_ii / P)`.
    pub fn lambda_upper_bound(&self) -> f64 {
        (self.z_diag.iter().sum::<f64>() / self.p_max).sqrt()
    }

    /// `Σ_k Tr(F_k^H A F_k) - 2 Re Tr(R_k^H F_k)`, the part of the weighted
    /// MSE that depends on this BS's precoders.
    pub fn objective(&self, f: &[CMat]) -> f64 {
        f.iter()
            .zip(&self.rhs)
            .map(|(fk, rk)| trace(&(fk.adjoint() * &self.a * fk)).re - 2.0 * trace(&(rk.adjoint() * fk)).re)
            .sum()
    }

    /// Bisection on the multiplier until the λ interval is `tol`-relative.
    pub fn solve(&self, tol: f64) -> Result<PrecoderSolution> {
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("bisection tolerance must be positive, got {tol}")));
        }
        let total: f64 = self.z_diag.iter().sum();
        if total == 0.0 {
            let precoders = self.rhs.iter().map(|r| CMat::zeros(r.nrows(), r.ncols())).collect();
            return Ok(PrecoderSolution { precoders, lambda: 0.0, power: 0.0 });
        }
        let range_only = self.is_full_rank() || self.null_is_dust();
        if range_only && self.power_curve(0.0)? <= self.p_max {
            return self.finish(0.0);
        }
        let mut ub = self.lambda_upper_bound();
        let mut lb = if self.is_full_rank() { 0.0 } else { 1e-12 * ub };
        while lb > 0.0 && self.power_curve(lb)? <= self.p_max {
            ub = lb;
            lb /= 10.0;
            if lb < f64::MIN_POSITIVE * 1e10 {
                // the crossing is below any representable multiplier
                return self.finish(ub);
            }
        }
        while ub - lb > tol * ub {
            let mid = 0.5 * (lb + ub);
            if self.power_curve(mid)? > self.p_max {
                lb = mid;
            } else {
                ub = mid;
            }
        }
        self.finish(ub)
    }

    fn finish(&self, lambda: f64) -> Result<PrecoderSolution> {
        let mut precoders = self.precoder_at(lambda)?;
        let mut power: f64 = precoders.iter().map(frob_sq).sum();
        if power > self.p_max {
            let s = (self.p_max / power).sqrt();
            for f in precoders.iter_mut() {
                f.scale_mut(s);
            }
            power = precoders.iter().map(frob_sq).sum();
        }
        Ok(PrecoderSolution { precoders, lambda, power })
    }
}

/// A contiguous range of transmit antennas sharing one power budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBlock {
    pub start: usize,
    pub len: usize,
    pub p_max: f64,
}

/// Solution of a block-constrained precoder problem.
#[derive(Debug, Clone)]
pub struct BlockSolution {
    pub precoders: Vec<CMat>,
    pub lambdas: Vec<f64>,
    pub powers: Vec<f64>,
}

/// Power of each block of rows.
pub fn block_powers(f: &[CMat], blocks: &[PowerBlock]) -> Vec<f64> {
    blocks
        .iter()
        .map(|b| f.iter().map(|fk| fk.rows(b.start, b.len).iter().map(|z| z.norm_sqr()).sum::<f64>()).sum())
        .collect()
}

struct BlockProblem<'a> {
    a: &'a CMat,
    rhs: &'a [CMat],
    blocks: &'a [PowerBlock],
    stacked: CMat,
}

impl BlockProblem<'_> {
    fn precoders(&self, lambdas: &[f64]) -> Vec<CMat> {
        let mut m = self.a.clone();
        for (b, &lam) in self.blocks.iter().zip(lambdas) {
            for i in b.start..b.start + b.len {
                m[(i, i)].re += lam;
            }
        }
        let x = match nalgebra::Cholesky::new(m.clone()) {
            Some(chol) => chol.solve(&self.stacked),
            None => {
                let eig = HermitianEigen::new(&m);
                let top = eig.max().abs();
                let mut t = eig.vectors.adjoint() * &self.stacked;
                for (i, &v) in eig.values.iter().enumerate() {
                    let s = if v > RANK_THRESHOLD * top { 1.0 / v } else { 0.0 };
                    t.row_mut(i).scale_mut(s);
                }
                &eig.vectors * t
            }
        };
        let mut out = Vec::with_capacity(self.rhs.len());
        let mut col = 0;
        for r in self.rhs {
            out.push(x.columns(col, r.ncols()).into_owned());
            col += r.ncols();
        }
        out
    }

    fn block_power(&self, lambdas: &[f64], b: usize) -> f64 {
        block_powers(&self.precoders(lambdas), &self.blocks[b..b + 1])[0]
    }

    /// Root of `p_b(λ_b) = P_b` in λ_b with the other multipliers fixed.
    fn update_block(&self, lambdas: &mut [f64], b: usize) {
        let p = self.blocks[b].p_max;
        lambdas[b] = 0.0;
        let p0 = self.block_power(lambdas, b);
        if p0 <= p {
            return;
        }
        let (mut lo, mut g_lo) = (0.0, p0 - p);
        let rhs_mass: f64 = self.rhs.iter().map(frob_sq).sum();
        let mut hi = (rhs_mass / p).sqrt().max(f64::MIN_POSITIVE);
        lambdas[b] = hi;
        let mut g_hi = self.block_power(lambdas, b) - p;
        while g_hi > 0.0 {
            lo = hi;
            g_lo = g_hi;
            hi *= 2.0;
            lambdas[b] = hi;
            g_hi = self.block_power(lambdas, b) - p;
        }
        // Illinois false position keeps the bracket [lo, hi] with g(hi) <= 0
        let mut side = 0i8;
        for _ in 0..200 {
            if hi - lo <= 1e-13 * hi || -g_hi <= 1e-12 * p {
                break;
            }
            let mut mid = hi - g_hi * (hi - lo) / (g_hi - g_lo);
            if !(mid > lo && mid < hi) {
                mid = 0.5 * (lo + hi);
            }
            lambdas[b] = mid;
            let g = self.block_power(lambdas, b) - p;
            if g > 0.0 {
                lo = mid;
                g_lo = g;
                if side == -1 {
                    g_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = mid;
                g_hi = g;
                if side == 1 {
                    g_lo *= 0.5;
                }
                side = 1;
            }
        }
        lambdas[b] = hi;
    }
}

/// Minimize `Σ_k Tr(F_k^H A F_k) - 2 Re Tr(R_k^H F_k)` with one power
/// budget per block of antenna rows. A single block covering every antenna
/// is solved exactly as [`PrecoderSubproblem::solve`]; several blocks use
/// cyclic per-block multiplier updates, warm-started from `warm`.
pub fn solve_blocks(a: &CMat, rhs: &[CMat], blocks: &[PowerBlock], tol: f64, warm: Option<&[f64]>) -> Result<BlockSolution> {
    let nt = a.nrows();
    let covered: usize = blocks.iter().map(|b| b.len).sum();
    if covered != nt || blocks.iter().any(|b| b.start + b.len > nt) {
        return Err(Error::Dimension("power blocks must partition the antenna rows".into()));
    }
    if blocks.len() == 1 {
        let sol = PrecoderSubproblem::new(a.clone(), rhs.to_vec(), blocks[0].p_max)?.solve(tol)?;
        return Ok(BlockSolution { precoders: sol.precoders, lambdas: vec![sol.lambda], powers: vec![sol.power] });
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let a = hermitian_part(a);
    let d_total: usize = rhs.iter().map(|r| r.ncols()).sum();
    let mut stacked = CMat::zeros(nt, d_total);
    let mut col = 0;
    for r in rhs {
        stacked.columns_mut(col, r.ncols()).copy_from(r);
        col += r.ncols();
    }
    let problem = BlockProblem { a: &a, rhs, blocks, stacked };
    let mut lambdas = match warm {
        Some(w) if w.len() == blocks.len() => w.to_vec(),
        _ => vec![0.0; blocks.len()],
    };
    let kkt_tol = 1e-9;
    for _ in 0..500 {
        for b in 0..blocks.len() {
            problem.update_block(&mut lambdas, b);
        }
        let powers = block_powers(&problem.precoders(&lambdas), blocks);
        let satisfied = blocks.iter().zip(&powers).zip(&lambdas).all(|((blk, &p), &lam)| {
            if lam > 0.0 {
                (p - blk.p_max).abs() <= kkt_tol * blk.p_max
            } else {
                p <= blk.p_max * (1.0 + kkt_tol)
            }
        });
        if satisfied {
            break;
        }
    }
    let mut precoders = problem.precoders(&lambdas);
    let powers = block_powers(&precoders, blocks);
    for (blk, &p) in blocks.iter().zip(&powers) {
        if p > blk.p_max {
            let s = (blk.p_max / p).sqrt();
            for f in precoders.iter_mut() {
                f.rows_mut(blk.start, blk.len).scale_mut(s);
            }
        }
    }
    let powers = block_powers(&precoders, blocks);
    Ok(BlockSolution { precoders, lambdas, powers })
}

/// Objective of [`solve_blocks`] for arbitrary precoders.
pub fn block_objective(a: &CMat, rhs: &[CMat], f: &[CMat]) -> f64 {
    f.iter()
        .zip(rhs)
        .map(|(fk, rk)| trace(&(fk.adjoint() * a * fk)).re - 2.0 * trace(&(rk.adjoint() * fk)).re)
        .sum()
}

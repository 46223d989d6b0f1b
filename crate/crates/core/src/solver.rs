//! Block coordinate descent over decoders, weights, precoders and phases,
//! together with the RandPhase / No-IRS baselines and network MIMO.
//!
//! Every block update maximizes the surrogate `Σ ω h` with the others held
//! fixed, so the weighted sum rate recorded after each sweep never
//! decreases.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use log::debug;

use crate::error::{Error, Result};
use crate::linalg::{identity, leading_right_singular_vectors};
use crate::phasing::{assemble_quadratic, ccm_solve, mm_solve, PHASE_MAX_ITERS, PHASE_TOL};
use crate::precoder::{block_objective, block_powers, solve_blocks, PowerBlock, PrecoderSubproblem, BISECTION_TOL};
use crate::scenario::{ChannelSet, ScenarioConfig};
use crate::system::{EquivalentChannels, PhaseVector, PrecoderSet, UserGrid, WeightSet};
use crate::wmmse::{mse_matrices, optimal_decoders, optimal_weights, surrogate_sum};

/// How the reflection phases are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseMethod {
    /// Majorization-minimization phase updates.
    Mm,
    /// Complex circle manifold gradient descent.
    Ccm,
    /// Random phases drawn once and kept fixed.
    RandPhase,
    /// All IRS channels set to zero.
    NoIrs,
}

impl PhaseMethod {
    pub fn name(self) -> &'static str {
        match self {
            PhaseMethod::Mm => "mm",
            PhaseMethod::Ccm => "ccm",
            PhaseMethod::RandPhase => "rand",
            PhaseMethod::NoIrs => "noirs",
        }
    }
}

impl fmt::Display for PhaseMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhaseMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mm" => Ok(PhaseMethod::Mm),
            "ccm" => Ok(PhaseMethod::Ccm),
            "rand" | "randphase" => Ok(PhaseMethod::RandPhase),
            "noirs" | "no-irs" => Ok(PhaseMethod::NoIrs),
            other => Err(Error::Config(format!("unknown phase method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub phase_method: PhaseMethod,
    /// Cap on BCD sweeps.
    pub n_max: usize,
    /// Relative WSR change that counts as converged.
    pub epsilon: f64,
    /// Absolute WSR change in bits that also counts as converged, so that
    /// near-zero rates terminate.
    pub abs_tol: f64,
    pub bisection_tol: f64,
    pub phase_tol: f64,
    pub phase_max_iters: usize,
    /// CCM step parameters; `None` picks the automatic values.
    pub ccm_alpha: Option<f64>,
    pub ccm_beta: Option<f64>,
    /// Seed of the random initial phases.
    pub init_seed: u64,
    /// Record `Σ ω h` after each of the four block updates.
    pub record_surrogate: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            phase_method: PhaseMethod::Mm,
            n_max: 300,
            epsilon: 1e-6,
            abs_tol: 1e-9,
            bisection_tol: BISECTION_TOL,
            phase_tol: PHASE_TOL,
            phase_max_iters: PHASE_MAX_ITERS,
            ccm_alpha: None,
            ccm_beta: None,
            init_seed: 0,
            record_surrogate: false,
        }
    }
}

impl SolveOptions {
    pub fn with_method(method: PhaseMethod) -> Self {
        Self { phase_method: method, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 || !(self.epsilon > 0.0) {
            return Err(Error::Config("need n_max >= 1 and epsilon > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterCap,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// WSR in bits/s/Hz at the initial point and after every sweep.
    pub wsr_trace: Vec<f64>,
    /// `Σ ω h` after the decoder, weight, precoder and phase updates of
    /// every sweep (empty unless requested).
    pub surrogate_trace: Vec<f64>,
    pub per_user_rates: UserGrid<f64>,
    pub iterations: usize,
    pub phase_final: PhaseVector,
    pub precoders_final: PrecoderSet,
    pub wall_time: Duration,
    pub termination: Termination,
    /// Inner phase solves that hit their iteration cap.
    pub inner_not_converged: usize,
}

impl SolveReport {
    /// Final weighted sum rate.
    pub fn wsr(&self) -> f64 {
        *self.wsr_trace.last().expect("trace is never empty")
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Uniform random phases and full-power precoders along the leading right
/// singular vectors of each user's own equivalent channel.
pub fn initialize(ch: &ChannelSet, cfg: &ScenarioConfig, seed: u64) -> Result<(PrecoderSet, PhaseVector)> {
    let phase = PhaseVector::random(ch.total_elements(), cfg.eta, seed);
    let eq = EquivalentChannels::new(ch, &phase)?;
    let d = cfg.streams;
    let scale = (cfg.p_max / (ch.users_per_cell * d) as f64).sqrt();
    let f = UserGrid::from_fn(ch.cells, ch.users_per_cell, |l, k| {
        leading_right_singular_vectors(eq.get(l, l, k), d).scale(scale)
    });
    Ok((f, phase))
}

/// Power layout of the precoder block.
enum PowerLayout {
    /// One budget per cell, each solved on its own.
    PerCell,
    /// A single virtual transmitter whose antenna rows split into budgets.
    Blocks(Vec<PowerBlock>),
}

/// Block coordinate descent with the configured phase method.
pub fn bcd_solve(ch: &ChannelSet, cfg: &ScenarioConfig, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let stripped;
    let ch = if opts.phase_method == PhaseMethod::NoIrs {
        stripped = ch.without_irs();
        &stripped
    } else {
        ch
    };
    let (f, phase) = initialize(ch, cfg, opts.init_seed)?;
    run(ch, cfg, opts, PowerLayout::PerCell, f, phase)
}

/// Network MIMO: every BS serves every user jointly, each BS keeping its own
/// power budget. Runs the same BCD on the joint-transmission view of the
/// network with per-BS multipliers in the precoder block.
pub fn network_mimo_solve(ch: &ChannelSet, cfg: &ScenarioConfig, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let base = if opts.phase_method == PhaseMethod::NoIrs { ch.without_irs() } else { ch.clone() };
    let joint = base.joint_transmission();
    let nt = ch.tx_antennas;
    let blocks: Vec<PowerBlock> =
        (0..ch.cells).map(|n| PowerBlock { start: n * nt, len: nt, p_max: cfg.p_max }).collect();
    let phase = PhaseVector::random(joint.total_elements(), cfg.eta, opts.init_seed);
    let eq = EquivalentChannels::new(&joint, &phase)?;
    let d = cfg.streams;
    let mut f = UserGrid::from_fn(1, joint.users_per_cell, |_, k| leading_right_singular_vectors(eq.get(0, 0, k), d));
    let powers = block_powers(f.as_slice(), &blocks);
    for (b, p) in blocks.iter().zip(powers) {
        if p > 0.0 {
            let s = (b.p_max / p).sqrt();
            for fk in f.cell_mut(0) {
                fk.rows_mut(b.start, b.len).scale_mut(s);
            }
        }
    }
    let mut report = run(&joint, cfg, opts, PowerLayout::Blocks(blocks), f, phase)?;
    // report rates in the original (cell, user) shape
    report.per_user_rates = UserGrid::from_vec(ch.cells, ch.users_per_cell, report.per_user_rates.into_vec())?;
    Ok(report)
}

fn run(
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    opts: &SolveOptions,
    layout: PowerLayout,
    mut f: PrecoderSet,
    mut phase: PhaseVector,
) -> Result<SolveReport> {
    let start = Instant::now();
    let sigma2 = cfg.noise_power_watts();
    let weights = &cfg.weights;
    let update_phase = matches!(opts.phase_method, PhaseMethod::Mm | PhaseMethod::Ccm) && ch.total_elements() > 0;
    let mut eq = EquivalentChannels::new(ch, &phase)?;
    let mut wsr = eq.weighted_sum_rate(&f, sigma2, weights)?;
    let mut wsr_trace = vec![wsr];
    let mut surrogate_trace = Vec::new();
    let mut w: WeightSet = UserGrid::from_fn(ch.cells, ch.users_per_cell, |_, _| identity(cfg.streams));
    let mut lambdas: Option<Vec<f64>> = None;
    let mut termination = Termination::IterCap;
    let mut inner_not_converged = 0;

    for it in 1..=opts.n_max {
        let u = optimal_decoders(&eq, &f, sigma2)?;
        if opts.record_surrogate {
            surrogate_trace.push(surrogate_sum(&eq, &f, &u, &w, sigma2, weights)?);
        }
        w = optimal_weights(&mse_matrices(&eq, &f, &u, sigma2))?;
        if opts.record_surrogate {
            surrogate_trace.push(surrogate_sum(&eq, &f, &u, &w, sigma2, weights)?);
        }

        match &layout {
            PowerLayout::PerCell => {
                for l in 0..ch.cells {
                    let sub = PrecoderSubproblem::assemble(&eq, &u, &w, weights, l, cfg.p_max)?;
                    let sol = sub.solve(opts.bisection_tol)?;
                    f.cell_mut(l).clone_from_slice(&sol.precoders);
                }
            }
            PowerLayout::Blocks(blocks) => {
                let sub = PrecoderSubproblem::assemble(&eq, &u, &w, weights, 0, cfg.p_max)?;
                let sol = solve_blocks(&sub.a, &sub.rhs, blocks, opts.bisection_tol, lambdas.as_deref())?;
                let keep_old = blocks.len() > 1
                    && block_objective(&sub.a, &sub.rhs, f.cell(0)) < block_objective(&sub.a, &sub.rhs, &sol.precoders);
                if !keep_old {
                    f.cell_mut(0).clone_from_slice(&sol.precoders);
                }
                lambdas = Some(sol.lambdas);
            }
        }
        if opts.record_surrogate {
            surrogate_trace.push(surrogate_sum(&eq, &f, &u, &w, sigma2, weights)?);
        }

        if update_phase {
            let q = assemble_quadratic(ch, &f, &u, &w, weights, phase.eta, sigma2)?;
            let out = match opts.phase_method {
                PhaseMethod::Ccm => {
                    ccm_solve(&q, &phase.phi, opts.phase_tol, opts.phase_max_iters, opts.ccm_alpha, opts.ccm_beta)?
                }
                _ => mm_solve(&q, &phase.phi, opts.phase_tol, opts.phase_max_iters)?,
            };
            if !out.converged {
                inner_not_converged += 1;
            }
            phase.phi = out.phi;
            eq = EquivalentChannels::new(ch, &phase)?;
        }
        if opts.record_surrogate {
            surrogate_trace.push(surrogate_sum(&eq, &f, &u, &w, sigma2, weights)?);
        }

        let next = eq.weighted_sum_rate(&f, sigma2, weights)?;
        wsr_trace.push(next);
        let change = (next - wsr).abs();
        wsr = next;
        if change <= opts.epsilon * wsr.abs() || change <= opts.abs_tol {
            debug!("BCD converged after {it} sweeps at {wsr:.6} bits/s/Hz");
            termination = Termination::Converged;
            break;
        }
    }

    Ok(SolveReport {
        iterations: wsr_trace.len() - 1,
        per_user_rates: eq.user_rates(&f, sigma2)?,
        wsr_trace,
        surrogate_trace,
        phase_final: phase,
        precoders_final: f,
        wall_time: start.elapsed(),
        termination,
        inner_not_converged,
    })
}

/// Per-BS transmit powers of a precoder set, for reports.
pub fn precoder_powers(f: &PrecoderSet) -> Vec<f64> {
    crate::system::bs_powers(f)
}

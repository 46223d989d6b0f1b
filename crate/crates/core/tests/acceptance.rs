//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). The process fails when a
//! criterion fails unexpectedly; criteria listed in `KNOWN_RED` still print
//! FAIL but do not fail the run.

mod common;

use std::time::Instant;

use common::*;
use irs_wsr::experiment::combined_pathloss_curve;
use irs_wsr::phasing::{ccm_auto_parameters, ccm_solve, mm_solve};
use irs_wsr::precoder::PrecoderSubproblem;
use irs_wsr::scenario::{rayleigh_channel, synthesize};
use irs_wsr::solver::{bcd_solve, network_mimo_solve};
use irs_wsr::system::EquivalentChannels;
use irs_wsr::wmmse::{mse_matrices, optimal_decoders, optimal_weights, surrogate_sum};
use irs_wsr::{PhaseMethod, PhaseVector, ScenarioConfig, SolveOptions, SolveReport};
use rayon::prelude::*;

/// Criteria that fail for reasons recorded in the project notes.
const KNOWN_RED: &[u32] = &[2];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn solve_many(cfg: &ScenarioConfig, method: PhaseMethod, seeds: std::ops::Range<u64>) -> Vec<SolveReport> {
    seeds
        .into_par_iter()
        .map(|s| {
            let ch = synthesize(cfg, s).unwrap();
            bcd_solve(&ch, cfg, &SolveOptions { init_seed: s, ..SolveOptions::with_method(method) }).unwrap()
        })
        .collect()
}

fn mean_wsr(reps: &[SolveReport]) -> f64 {
    mean(&reps.iter().map(|r| r.wsr()).collect::<Vec<_>>())
}

fn with_m(m: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::two_cell();
    cfg.elements_per_irs = m;
    cfg
}

/// Results shared between criteria, computed once.
#[derive(Default)]
struct Cache {
    mm10: Option<Vec<SolveReport>>,
    mm40: Option<Vec<SolveReport>>,
    mm50: Option<Vec<SolveReport>>,
    noirs: Option<Vec<SolveReport>>,
}

impl Cache {
    fn mm10(&mut self) -> &[SolveReport] {
        self.mm10.get_or_insert_with(|| solve_many(&with_m(10), PhaseMethod::Mm, 0..100))
    }
    fn mm40(&mut self) -> &[SolveReport] {
        self.mm40.get_or_insert_with(|| solve_many(&with_m(40), PhaseMethod::Mm, 0..100))
    }
    fn mm50(&mut self) -> &[SolveReport] {
        self.mm50.get_or_insert_with(|| solve_many(&with_m(50), PhaseMethod::Mm, 0..50))
    }
    /// No-IRS runs do not depend on M.
    fn noirs(&mut self) -> &[SolveReport] {
        self.noirs.get_or_insert_with(|| solve_many(&with_m(10), PhaseMethod::NoIrs, 0..100))
    }
}

fn reformulation_identity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (cfg, ch) = small_instance(seed);
        let sigma2 = cfg.noise_power_watts();
        let f = random_precoders(&ch, cfg.streams, cfg.p_max, seed);
        let eq = EquivalentChannels::new(&ch, &PhaseVector::random(ch.total_elements(), cfg.eta, seed)).unwrap();
        let u = optimal_decoders(&eq, &f, sigma2).unwrap();
        let w = optimal_weights(&mse_matrices(&eq, &f, &u, sigma2)).unwrap();
        let h = surrogate_sum(&eq, &f, &u, &w, sigma2, &cfg.weights).unwrap();
        let wsr = eq.weighted_sum_rate(&f, sigma2, &cfg.weights).unwrap();
        worst = worst.max((h - wsr).abs() / wsr.abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-8 && secs < 10.0, format!("max relative gap {worst:.2e} over 100 instances, {secs:.2} s"))
}

fn bcd_monotone_and_converged(cache: &mut Cache) -> Outcome {
    let start = Instant::now();
    let reps = &cache.mm10()[..50];
    let non_monotone = reps
        .iter()
        .filter(|r| r.wsr_trace.windows(2).any(|w| w[1] < w[0] - 1e-8))
        .count();
    let converged: Vec<_> = reps.iter().filter(|r| r.converged() && r.iterations <= 300).collect();
    let slowest = reps.iter().map(|r| r.iterations).max().unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        non_monotone == 0 && converged.len() == reps.len() && secs < 300.0,
        format!(
            "{non_monotone} non-monotone traces, {}/{} converged within 300 sweeps (max {slowest}), {secs:.1} s",
            converged.len(),
            reps.len()
        ),
    )
}

fn precoder_oracle() -> Outcome {
    let mut worst_obj: f64 = 0.0;
    let mut worst_power: f64 = 0.0;
    let mut worst_slack: f64 = 0.0;
    let mut deficient = 0;
    for seed in 0..50u64 {
        let mut r = rng(seed, 30);
        let kind = seed % 5;
        let (nt, users, d) = (4 + (seed % 3) as usize * 2, 2, 2);
        let p = [0.1, 1.0, 10.0][(seed % 3) as usize];
        let (a, rhs) = match kind {
            // full rank
            0 => {
                let a = random_psd(&mut r, nt, nt + 2);
                (a, (0..users).map(|_| rayleigh_channel(&mut r, nt, d)).collect::<Vec<_>>())
            }
            // rank deficient, rhs in the range of A (as in the BCD)
            1 => {
                let g = rayleigh_channel(&mut r, nt, 2);
                let rhs = (0..users).map(|_| &g * rayleigh_channel(&mut r, 2, d)).collect();
                (&g * g.adjoint(), rhs)
            }
            // rank deficient, rhs with a null-space component
            2 => {
                let a = random_psd(&mut r, nt, nt / 2);
                (a, (0..users).map(|_| rayleigh_channel(&mut r, nt, d)).collect())
            }
            // assembled from a channel realization
            3 => {
                let (cfg, ch) = small_instance(seed);
                let sigma2 = cfg.noise_power_watts();
                let f = random_precoders(&ch, cfg.streams, cfg.p_max, seed);
                let eq = EquivalentChannels::new(&ch, &PhaseVector::random(ch.total_elements(), 1.0, seed)).unwrap();
                let u = optimal_decoders(&eq, &f, sigma2).unwrap();
                let w = optimal_weights(&mse_matrices(&eq, &f, &u, sigma2)).unwrap();
                let sub = PrecoderSubproblem::assemble(&eq, &u, &w, &cfg.weights, (seed % 2) as usize, p).unwrap();
                (sub.a, sub.rhs)
            }
            // large budget: interior solution when A is full rank
            _ => {
                let a = random_psd(&mut r, nt, nt) + irs_wsr::linalg::identity(nt);
                (a, (0..users).map(|_| rayleigh_channel(&mut r, nt, d).scale(0.1)).collect())
            }
        };
        let sub = PrecoderSubproblem::new(a.clone(), rhs.clone(), p).unwrap();
        if !sub.is_full_rank() {
            deficient += 1;
        }
        let sol = sub.solve(1e-10).unwrap();
        let oracle = projected_gradient_precoder(&a, &rhs, p, 40_000);
        let (ob, oo) = (precoder_objective(&a, &rhs, &sol.precoders), precoder_objective(&a, &rhs, &oracle));
        worst_obj = worst_obj.max((ob - oo).abs() / oo.abs());
        let power: f64 = sol.precoders.iter().map(|f| f.norm_squared()).sum();
        worst_power = worst_power.max(power / p - 1.0);
        worst_slack = worst_slack.max((sol.lambda * (power - p)).abs() / p);
    }
    outcome(
        worst_obj <= 1e-4 && worst_power <= 1e-6 && worst_slack < 1e-6 && deficient >= 10,
        format!(
            "objective gap {worst_obj:.2e}, power excess {worst_power:.2e}, |λ(f-P)|/P {worst_slack:.2e}, {deficient} rank-deficient"
        ),
    )
}

fn phase_grid_oracle() -> Outcome {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut failures = 0;
    for m in [1usize, 2] {
        for seed in 0..20u64 {
            let q = random_phase_quadratic(seed + 100 * m as u64, m);
            let grid = grid_minimum(&q.xi, &q.v, 720);
            let bound = 2.0 * phase_gradient_bound(&q.xi, &q.v) * 2.0 * std::f64::consts::PI / 720.0;
            let mut r = rng(seed, 40 + m as u64);
            let theta: Vec<f64> = (0..m).map(|_| rayleigh_channel(&mut r, 1, 1)[(0, 0)].arg()).collect();
            let phi0 = unit_vector(&theta);
            let mm = mm_solve(&q, &phi0, 1e-12, 20_000).unwrap();
            let ccm = ccm_solve(&q, &phi0, 1e-12, 20_000, None, None).unwrap();
            for out in [mm, ccm] {
                let value = phase_objective(&q.xi, &q.v, &out.phi);
                let excess = (value - grid) / bound;
                worst = worst.max(excess);
                if value > grid + bound {
                    failures += 1;
                }
            }
        }
    }
    outcome(failures == 0, format!("{failures}/80 runs above the grid bound, worst excess {worst:.3} bounds"))
}

fn majorization_and_ccm_descent() -> Outcome {
    let mut worst_violation: f64 = 0.0;
    let mut worst_touch: f64 = 0.0;
    for seed in 0..1000u64 {
        let mut r = rng(seed, 50);
        let m = 1 + (seed % 16) as usize;
        let xi = random_psd(&mut r, m, 1 + (seed % 5) as usize);
        let q = irs_wsr::phasing::PhaseQuadratic::new(xi.clone(), irs_wsr::CVec::zeros(m), 0.0).unwrap();
        let angle = |r: &mut rand_chacha::ChaCha8Rng| rayleigh_channel(r, m, 1).map(|z| z.arg());
        let phi = unit_vector(angle(&mut r).as_slice());
        let phi_t = unit_vector(angle(&mut r).as_slice());
        let zero = irs_wsr::CVec::zeros(m);
        worst_violation = worst_violation.max(phase_objective(&xi, &zero, &phi) - q.majorizer(&phi, &phi_t));
        worst_touch = worst_touch.max((q.majorizer(&phi_t, &phi_t) - phase_objective(&xi, &zero, &phi_t)).abs());
    }
    let mut ccm_rises = 0;
    for seed in 0..100u64 {
        let m = 2 + (seed % 30) as usize;
        let q = random_phase_quadratic(seed + 5000, m);
        let (alpha, _) = ccm_auto_parameters(&q);
        let shift = alpha * m as f64;
        let mut r = rng(seed, 51);
        let phi0 = unit_vector(rayleigh_channel(&mut r, m, 1).map(|z| z.arg()).as_slice());
        let out = ccm_solve(&q, &phi0, 1e-12, 3000, None, None).unwrap();
        let scale = q.lambda_max * m as f64 + shift + 2.0 * q.v.iter().map(|z| z.norm()).sum::<f64>();
        if out.trace.windows(2).any(|w| (w[1] + shift) > (w[0] + shift) + 1e-12 * scale) {
            ccm_rises += 1;
        }
    }
    outcome(
        worst_violation < 1e-9 && worst_touch < 1e-9 && ccm_rises == 0,
        format!(
            "majorizer violation {worst_violation:.2e}, touching error {worst_touch:.2e} (1000 instances); {ccm_rises}/100 CCM runs with a rise"
        ),
    )
}

fn method_hierarchy(cache: &mut Cache) -> Outcome {
    let mm40 = mean_wsr(cache.mm40());
    let mm10 = mean_wsr(cache.mm10());
    let noirs = mean_wsr(cache.noirs());
    let rand = mean_wsr(&solve_many(&with_m(40), PhaseMethod::RandPhase, 0..100));
    let order = mm40 > rand && rand >= noirs - 0.2 && mm40 > mm10;

    let noirs50 = mean_wsr(&cache.noirs()[..50]);
    let gain_m80 = mean_wsr(&solve_many(&with_m(80), PhaseMethod::Mm, 0..50)) - noirs50;
    let mut steep = ScenarioConfig::two_cell();
    steep.alpha_bi = 2.0;
    steep.alpha_iu = 2.0;
    let gain_a2 = mean_wsr(&solve_many(&steep, PhaseMethod::Mm, 0..50)) - noirs50;
    let band = |g: f64, target: f64| (g - target).abs() <= 0.4 * target;
    outcome(
        order && band(gain_m80, 13.0) && band(gain_a2, 14.5),
        format!(
            "MM40 {mm40:.3} > rand {rand:.3} >= noirs {noirs:.3} - 0.2, MM10 {mm10:.3}; gain M=80 {gain_m80:.2} (band 7.8..18.2), gain α=2 {gain_a2:.2} (band 8.7..20.3)"
        ),
    )
}

fn mm_matches_ccm(cache: &mut Cache) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for m in [10usize, 40] {
        let mm = if m == 10 { mean_wsr(&cache.mm10()[..50]) } else { mean_wsr(&cache.mm40()[..50]) };
        let ccm = mean_wsr(&solve_many(&with_m(m), PhaseMethod::Ccm, 0..50));
        let rel = (mm - ccm).abs() / mm.abs().max(ccm.abs());
        pass &= rel < 0.02;
        parts.push(format!("M={m}: MM {mm:.3} CCM {ccm:.3} ({:.2}%)", 100.0 * rel));
    }
    outcome(pass, parts.join(", "))
}

fn midpoint_pathloss() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for total in [200.0, 600.0, 1000.0] {
        let grid: Vec<f64> = (1..total as usize).map(|d| d as f64).collect();
        let curve = combined_pathloss_curve(total, &grid, 2.2, -30.0).unwrap();
        let i = (0..grid.len()).min_by(|&a, &b| curve[a].total_cmp(&curve[b])).unwrap();
        pass &= (grid[i] - total / 2.0).abs() <= 1.0;
        parts.push(format!("D={total}: argmin {}", grid[i]));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(pass && secs < 1.0, format!("{}, {secs:.3} s", parts.join(", ")))
}

fn network_mimo(cache: &mut Cache) -> Outcome {
    let cfg = ScenarioConfig::two_cell();
    let coordinated = mean_wsr(cache.mm50());
    let joint: Vec<f64> = (0..50u64)
        .into_par_iter()
        .map(|s| {
            let ch = synthesize(&cfg, s).unwrap();
            network_mimo_solve(&ch, &cfg, &SolveOptions { init_seed: s, ..SolveOptions::default() }).unwrap().wsr()
        })
        .collect();
    let joint = mean(&joint);

    let mut single = ScenarioConfig::two_cell();
    single.cells = 1;
    single.bs_positions.truncate(1);
    single.user_cluster_centers.truncate(1);
    single.weights.truncate(2);
    let mut worst: f64 = 0.0;
    for s in 0..5u64 {
        let ch = synthesize(&single, s).unwrap();
        let opts = SolveOptions { init_seed: s, ..SolveOptions::default() };
        let a = bcd_solve(&ch, &single, &opts).unwrap().wsr();
        let b = network_mimo_solve(&ch, &single, &opts).unwrap().wsr();
        worst = worst.max((a - b).abs());
    }
    outcome(
        joint >= coordinated && worst <= 1e-8,
        format!("network MIMO {joint:.3} vs coordinated {coordinated:.3}; L=1 max gap {worst:.1e}"),
    )
}

fn eta_sweep(cache: &mut Cache) -> Outcome {
    let at = |eta: f64| {
        let mut cfg = ScenarioConfig::two_cell();
        cfg.eta = eta;
        cfg
    };
    let zero = mean_wsr(&solve_many(&at(0.0), PhaseMethod::Mm, 0..50));
    let noirs = mean_wsr(&cache.noirs()[..50]);
    let low = mean_wsr(&solve_many(&at(0.2), PhaseMethod::Mm, 0..50));
    let mid = mean_wsr(&solve_many(&at(0.6), PhaseMethod::Mm, 0..50));
    let full = mean_wsr(cache.mm50());
    outcome(
        (zero - noirs).abs() <= 1e-6 && low <= mid && mid <= full,
        format!("η=0 {zero:.6} vs noirs {noirs:.6}; η=0.2 {low:.3}, 0.6 {mid:.3}, 1.0 {full:.3}"),
    )
}

fn main() {
    let mut cache = Cache::default();
    type Check = Box<dyn FnOnce(&mut Cache) -> Outcome>;
    let criteria: Vec<(u32, &str, Check)> = vec![
        (1, "reformulation identity", Box::new(|_| reformulation_identity())),
        (2, "BCD monotone and converged at M=10", Box::new(bcd_monotone_and_converged)),
        (3, "precoder matches projected-gradient oracle", Box::new(|_| precoder_oracle())),
        (4, "phase solvers reach the grid optimum", Box::new(|_| phase_grid_oracle())),
        (5, "majorization and CCM descent", Box::new(|_| majorization_and_ccm_descent())),
        (6, "method hierarchy and IRS gains", Box::new(method_hierarchy)),
        (7, "MM and CCM agree at the BCD level", Box::new(mm_matches_ccm)),
        (8, "combined path loss minimized at the midpoint", Box::new(|_| midpoint_pathloss())),
        (9, "network MIMO dominance", Box::new(network_mimo)),
        (10, "reflection amplitude sweep", Box::new(eta_sweep)),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        let start = Instant::now();
        let out = check(&mut cache);
        let secs = start.elapsed().as_secs_f64();
        let tag = match (out.pass, KNOWN_RED.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected.push(id);
                "FAIL"
            }
        };
        println!("[{tag}] criterion {id:>2}: {name}: {} [{secs:.1} s]", out.detail);
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}

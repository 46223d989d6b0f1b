//! Seeded Monte-Carlo sweeps over scenario parameters, written as CSV.
//!
//! Every experiment expands a base [`ScenarioConfig`] into a list of
//! [`SweepPoint`]s, runs each (point, method, seed) triple independently and
//! collects the results in a fixed order, so the output only depends on the
//! configuration and the seed list.

use std::fmt;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{path_loss_db_raw, synthesize, ScenarioConfig};
use crate::solver::{bcd_solve, network_mimo_solve, PhaseMethod, SolveOptions, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Convergence,
    SweepM,
    SweepAlphaIrs,
    SweepIrsPos,
    SweepUserPos,
    SweepEta,
    WeightsFairness,
    FourcellSingleIrs,
    FourcellTwoIrs,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Convergence,
        Experiment::SweepM,
        Experiment::SweepAlphaIrs,
        Experiment::SweepIrsPos,
        Experiment::SweepUserPos,
        Experiment::SweepEta,
        Experiment::WeightsFairness,
        Experiment::FourcellSingleIrs,
        Experiment::FourcellTwoIrs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Convergence => "convergence",
            Experiment::SweepM => "sweep_M",
            Experiment::SweepAlphaIrs => "sweep_alpha_irs",
            Experiment::SweepIrsPos => "sweep_irs_pos",
            Experiment::SweepUserPos => "sweep_user_pos",
            Experiment::SweepEta => "sweep_eta",
            Experiment::WeightsFairness => "weights_fairness",
            Experiment::FourcellSingleIrs => "fourcell_single_irs",
            Experiment::FourcellTwoIrs => "fourcell_two_irs",
        }
    }

    /// Whether the experiment expects the four-cell layout as its base.
    pub fn is_four_cell(self) -> bool {
        matches!(self, Experiment::FourcellSingleIrs | Experiment::FourcellTwoIrs)
    }

    /// Built-in base configuration used when no config file is given.
    pub fn default_config(self) -> ScenarioConfig {
        if self.is_four_cell() {
            ScenarioConfig::four_cell()
        } else {
            ScenarioConfig::two_cell()
        }
    }

    /// Methods compared when the caller does not pick any.
    pub fn default_methods(self) -> Vec<Method> {
        use PhaseMethod::*;
        let phase = |ms: &[PhaseMethod]| ms.iter().map(|m| Method::Phase(*m)).collect::<Vec<_>>();
        match self {
            Experiment::Convergence => phase(&[Mm, Ccm]),
            Experiment::SweepM => {
                let mut ms = phase(&[Mm, Ccm, RandPhase, NoIrs]);
                ms.push(Method::NetMimo);
                ms
            }
            Experiment::WeightsFairness => phase(&[Mm]),
            _ => phase(&[Mm, Ccm, RandPhase, NoIrs]),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

/// A solver run inside an experiment: BCD with one of the phase methods, or
/// network MIMO with MM phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Phase(PhaseMethod),
    NetMimo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Phase(m) => m.name(),
            Method::NetMimo => "netmimo",
        }
    }

    pub fn solve(self, cfg: &ScenarioConfig, seed: u64, base: &SolveOptions) -> Result<SolveReport> {
        let ch = synthesize(cfg, seed)?;
        match self {
            Method::Phase(m) => bcd_solve(&ch, cfg, &SolveOptions { phase_method: m, init_seed: seed, ..base.clone() }),
            Method::NetMimo => network_mimo_solve(
                &ch,
                cfg,
                &SolveOptions { phase_method: PhaseMethod::Mm, init_seed: seed, ..base.clone() },
            ),
        }
    }

    /// Parses a comma-separated list such as `mm,rand,netmimo`.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "netmimo" || t == "net-mimo" {
            return Ok(Method::NetMimo);
        }
        t.parse::<PhaseMethod>().map(Method::Phase)
    }
}

/// One abscissa of a sweep together with the scenario it produces.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    /// Optional series tag, e.g. the deployment scheme of the four-cell runs.
    pub series: Option<String>,
    pub config: ScenarioConfig,
}

impl SweepPoint {
    fn plain(value: f64, config: ScenarioConfig) -> Self {
        Self { value, series: None, config }
    }
}

fn lerp(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Midpoints between neighbouring BSs of the four-cell square.
pub mod four_cell_points {
    pub const BS: [[f64; 2]; 4] = [[0.0, 0.0], [600.0, 0.0], [0.0, 600.0], [600.0, 600.0]];
    pub const A: [f64; 2] = [300.0, 0.0];
    pub const B: [f64; 2] = [0.0, 300.0];
    pub const C: [f64; 2] = [300.0, 600.0];
    pub const D: [f64; 2] = [600.0, 300.0];
}

/// Position parameter along the four-cell IRS trajectories.
pub const TRAJECTORY_STEPS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

/// Sweep grid of each experiment, applied on top of `base`.
pub fn sweep_points(experiment: Experiment, base: &ScenarioConfig) -> Result<Vec<SweepPoint>> {
    base.validate()?;
    let with = |value: f64, edit: &dyn Fn(&mut ScenarioConfig)| {
        let mut cfg = base.clone();
        edit(&mut cfg);
        SweepPoint::plain(value, cfg)
    };
    let need_irs = || {
        if base.irs_count == 0 {
            Err(Error::Config(format!("{experiment} needs at least one IRS in the base config")))
        } else {
            Ok(())
        }
    };
    let points = match experiment {
        Experiment::Convergence => {
            [10usize, 30, 50].iter().map(|&m| with(m as f64, &|c| c.elements_per_irs = m)).collect()
        }
        Experiment::SweepM => {
            [10usize, 20, 40, 60, 80].iter().map(|&m| with(m as f64, &|c| c.elements_per_irs = m)).collect()
        }
        Experiment::SweepAlphaIrs => [2.0, 2.4, 2.8, 3.2, 3.6]
            .iter()
            .map(|&a| {
                with(a, &|c| {
                    c.alpha_bi = a;
                    c.alpha_iu = a;
                })
            })
            .collect(),
        Experiment::SweepIrsPos => {
            need_irs()?;
            [50.0, 100.0, 150.0, 200.0, 250.0, 300.0]
                .iter()
                .map(|&x| with(x, &|c| c.irs_positions[0] = [x, 0.0, c.heights.irs]))
                .collect()
        }
        Experiment::SweepUserPos => {
            if base.cells != 2 {
                return Err(Error::Config("sweep_user_pos needs the two-cell layout".into()));
            }
            let span = base.bs_positions[1][0] - base.bs_positions[0][0];
            [200.0, 220.0, 240.0, 260.0, 280.0]
                .iter()
                .map(|&x| {
                    with(x, &|c| {
                        c.user_positions = None;
                        c.user_cluster_centers = vec![[x, 0.0], [span - x, 0.0]];
                    })
                })
                .collect()
        }
        Experiment::SweepEta => [0.0, 0.2, 0.4, 0.6, 0.8, 1.0].iter().map(|&e| with(e, &|c| c.eta = e)).collect(),
        Experiment::WeightsFairness => {
            if base.cells != 2 || base.users_per_cell != 2 {
                return Err(Error::Config("weights_fairness needs two cells with two users each".into()));
            }
            weight_sets()
                .iter()
                .enumerate()
                .map(|(i, ws)| {
                    with((i + 1) as f64, &|c| {
                        c.weights = ws.to_vec();
                        c.user_positions = Some(FAIRNESS_USERS.to_vec());
                    })
                })
                .collect()
        }
        Experiment::FourcellSingleIrs => four_cell_single(base)?,
        Experiment::FourcellTwoIrs => four_cell_two(base)?,
    };
    Ok(points)
}

/// User coordinates of the fairness example, cell-major.
pub const FAIRNESS_USERS: [[f64; 2]; 4] = [[100.0, 0.0], [250.0, 0.0], [350.0, 0.0], [500.0, 0.0]];

/// Equal weights, then weights favouring the users far from their BS.
pub fn weight_sets() -> [[f64; 4]; 2] {
    [[0.5; 4], [0.15, 0.85, 0.3, 0.7]]
}

fn check_four_cell(base: &ScenarioConfig) -> Result<()> {
    if base.cells != 4 {
        return Err(Error::Config("four-cell experiments need L = 4".into()));
    }
    Ok(())
}

fn four_cell_single(base: &ScenarioConfig) -> Result<Vec<SweepPoint>> {
    use four_cell_points::*;
    check_four_cell(base)?;
    let schemes = [("scheme-1", BS[0], BS[1]), ("scheme-2", B, D), ("scheme-3", BS[2], BS[1])];
    let m = base.total_elements().max(1);
    let mut out = Vec::new();
    for (name, from, to) in schemes {
        for t in TRAJECTORY_STEPS {
            let mut cfg = base.clone();
            let p = lerp(from, to, t);
            cfg.irs_count = 1;
            cfg.elements_per_irs = m;
            cfg.irs_positions = vec![[p[0], p[1], cfg.heights.irs]];
            out.push(SweepPoint { value: t, series: Some(name.to_string()), config: cfg });
        }
    }
    Ok(out)
}

fn four_cell_two(base: &ScenarioConfig) -> Result<Vec<SweepPoint>> {
    use four_cell_points::*;
    check_four_cell(base)?;
    let schemes = [
        ("scheme-1", (BS[0], BS[1]), (BS[2], BS[3])),
        ("scheme-2", (BS[0], BS[3]), (BS[2], BS[1])),
        ("scheme-3", (B, D), (C, A)),
    ];
    // same total element count as the single-IRS deployment
    let m = (base.total_elements() / 2).max(1);
    let mut out = Vec::new();
    for (name, first, second) in schemes {
        for t in TRAJECTORY_STEPS {
            let mut cfg = base.clone();
            let (p, q) = (lerp(first.0, first.1, t), lerp(second.0, second.1, t));
            cfg.irs_count = 2;
            cfg.elements_per_irs = m;
            cfg.irs_positions = vec![[p[0], p[1], cfg.heights.irs], [q[0], q[1], cfg.heights.irs]];
            out.push(SweepPoint { value: t, series: Some(name.to_string()), config: cfg });
        }
    }
    Ok(out)
}

/// `2 PL0 - 10 α log10(d) - 10 α log10(D - d)` for each `d` on the grid:
/// the large-scale gain of the reflected path with the IRS on the segment
/// between a BS and its users.
pub fn combined_pathloss_curve(total: f64, d_grid: &[f64], alpha_irs: f64, pl0: f64) -> Result<Vec<f64>> {
    d_grid
        .iter()
        .map(|&d| {
            if !(d > 0.0 && d < total) {
                return Err(Error::Domain(format!("grid point {d} outside (0, {total})")));
            }
            Ok(path_loss_db_raw(d, alpha_irs, pl0, 1.0)? + path_loss_db_raw(total - d, alpha_irs, pl0, 1.0)?)
        })
        .collect()
}

/// Settings shared by every run of an experiment.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    /// Worker threads; 0 uses all available cores.
    pub jobs: usize,
    /// Record wall-clock time per run. Disable for byte-identical CSVs.
    pub timing: bool,
    pub solve: SolveOptions,
}

impl RunOptions {
    /// Seeds `0..count` with the experiment's default methods.
    pub fn new(experiment: Experiment, count: u64) -> Self {
        Self {
            seeds: (0..count).collect(),
            methods: experiment.default_methods(),
            jobs: 0,
            timing: true,
            solve: SolveOptions::default(),
        }
    }
}

/// One solver run.
#[derive(Debug, Clone)]
pub struct Record {
    pub sweep_value: f64,
    pub series: Option<String>,
    pub method: Method,
    pub seed: u64,
    pub wsr_bits: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub converged: bool,
    pub wsr_trace: Vec<f64>,
    /// Per-user rates in bits/s/Hz, cell-major.
    pub user_rates: Vec<f64>,
}

impl Record {
    /// Method column: the method name, prefixed by the series when present.
    pub fn label(&self) -> String {
        match &self.series {
            Some(s) => format!("{}/{}", s, self.method),
            None => self.method.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub sweep_value: f64,
    pub method: String,
    pub n: usize,
    pub mean_wsr_bits: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub mean_iterations: f64,
    pub converged_fraction: f64,
}

/// Runs every (point, method, seed) triple; the result order is points, then
/// methods, then seeds, regardless of scheduling.
pub fn run_points(points: &[SweepPoint], opts: &RunOptions) -> Result<Vec<Record>> {
    opts.solve.validate()?;
    let mut tasks = Vec::new();
    for p in points {
        for &m in &opts.methods {
            for &s in &opts.seeds {
                tasks.push((p, m, s));
            }
        }
    }
    let work = || -> Result<Vec<Record>> {
        tasks
            .par_iter()
            .map(|&(p, method, seed)| {
                let rep = method.solve(&p.config, seed, &opts.solve)?;
                Ok(Record {
                    sweep_value: p.value,
                    series: p.series.clone(),
                    method,
                    seed,
                    wsr_bits: rep.wsr(),
                    iterations: rep.iterations,
                    wall_ms: if opts.timing { rep.wall_time.as_secs_f64() * 1e3 } else { 0.0 },
                    converged: rep.converged(),
                    wsr_trace: rep.wsr_trace,
                    user_rates: rep.per_user_rates.into_vec(),
                })
            })
            .collect()
    };
    if opts.jobs == 0 {
        work()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", opts.jobs)))?;
        pool.install(work)
    }
}

/// Per-(point, method) mean with a normal-approximation 95% interval.
pub fn summarize(records: &[Record]) -> Vec<Summary> {
    let mut groups: Vec<(f64, String, Vec<&Record>)> = Vec::new();
    for r in records {
        let label = r.label();
        match groups.iter_mut().find(|(v, l, _)| *v == r.sweep_value && *l == label) {
            Some(g) => g.2.push(r),
            None => groups.push((r.sweep_value, label, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(value, method, rs)| {
            let n = rs.len();
            let mean = rs.iter().map(|r| r.wsr_bits).sum::<f64>() / n as f64;
            let half = if n > 1 {
                let var = rs.iter().map(|r| (r.wsr_bits - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                1.96 * (var / n as f64).sqrt()
            } else {
                0.0
            };
            Summary {
                sweep_value: value,
                method,
                n,
                mean_wsr_bits: mean,
                ci95_low: mean - half,
                ci95_high: mean + half,
                mean_iterations: rs.iter().map(|r| r.iterations as f64).sum::<f64>() / n as f64,
                converged_fraction: rs.iter().filter(|r| r.converged).count() as f64 / n as f64,
            }
        })
        .collect()
}

#[derive(Serialize)]
struct Row<'a> {
    sweep_value: f64,
    method: &'a str,
    seed: u64,
    wsr_bits: f64,
    iterations: usize,
    wall_ms: f64,
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    for r in records {
        let label = r.label();
        w.serialize(Row {
            sweep_value: r.sweep_value,
            method: &label,
            seed: r.seed,
            wsr_bits: r.wsr_bits,
            iterations: r.iterations,
            wall_ms: r.wall_ms,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, summary: &[Summary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    for s in summary {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format BCD traces: one row per (run, sweep).
pub fn write_traces(path: &Path, records: &[Record]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["sweep_value", "method", "seed", "iteration", "wsr_bits"])?;
    for r in records {
        let label = r.label();
        for (i, v) in r.wsr_trace.iter().enumerate() {
            w.write_record([r.sweep_value.to_string(), label.clone(), r.seed.to_string(), i.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Long-format per-user rates: one row per (run, user).
pub fn write_user_rates(path: &Path, records: &[Record], users_per_cell: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["sweep_value", "method", "seed", "user", "cell", "rate_bits"])?;
    for r in records {
        let label = r.label();
        for (i, v) in r.user_rates.iter().enumerate() {
            w.write_record([
                r.sweep_value.to_string(),
                label.clone(),
                r.seed.to_string(),
                (i + 1).to_string(),
                (i / users_per_cell + 1).to_string(),
                v.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<Record>,
    pub summary: Vec<Summary>,
    pub files: Vec<PathBuf>,
}

/// Runs `experiment` on top of `base` and writes `<experiment>.csv` and
/// `<experiment>_summary.csv` (plus traces or per-user rates where the
/// experiment calls for them) into `out_dir`.
pub fn run_experiment(
    base: &ScenarioConfig,
    experiment: Experiment,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<ExperimentOutput> {
    let points = sweep_points(experiment, base)?;
    fs::create_dir_all(out_dir)?;
    info!(
        "{experiment}: {} points x {} methods x {} seeds",
        points.len(),
        opts.methods.len(),
        opts.seeds.len()
    );
    let records = run_points(&points, opts)?;
    let summary = summarize(&records);

    let name = experiment.name();
    let mut files = vec![out_dir.join(format!("{name}.csv")), out_dir.join(format!("{name}_summary.csv"))];
    write_records(&files[0], &records)?;
    write_summary(&files[1], &summary)?;
    match experiment {
        Experiment::Convergence => {
            let path = out_dir.join(format!("{name}_traces.csv"));
            write_traces(&path, &records)?;
            files.push(path);
        }
        Experiment::WeightsFairness => {
            let path = out_dir.join(format!("{name}_users.csv"));
            write_user_rates(&path, &records, base.users_per_cell)?;
            files.push(path);
        }
        _ => {}
    }
    Ok(ExperimentOutput { records, summary, files })
}

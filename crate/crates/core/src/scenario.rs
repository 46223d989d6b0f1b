//! Scenario geometry, large-scale path loss, small-scale fading and seeded
//! synthesis of one [`ChannelSet`] per Monte-Carlo realization.
//!
//! Distances are 3D Euclidean: BS and IRS coordinates carry their own
//! height, users sit at `heights.user`. Path loss is applied to the
//! small-scale matrices as the amplitude factor `sqrt(10^(PL/10))`.
//!
//! Every link draws from its own ChaCha substream keyed by the realization
//! seed and the link identity, so a realization does not depend on the
//! order in which links are synthesized, and links whose dimensions do not
//! change keep their fading across parameter sweeps.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};

/// Device heights in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heights {
    pub bs: f64,
    pub irs: f64,
    pub user: f64,
}

/// Everything needed to draw channel realizations for one experiment point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Number of cells (one BS per cell).
    #[serde(rename = "L")]
    pub cells: usize,
    /// Users per cell.
    #[serde(rename = "K")]
    pub users_per_cell: usize,
    #[serde(rename = "Nt")]
    pub tx_antennas: usize,
    #[serde(rename = "Nr")]
    pub rx_antennas: usize,
    /// Data streams per user.
    #[serde(rename = "d")]
    pub streams: usize,
    /// Number of IRSs.
    #[serde(rename = "A")]
    pub irs_count: usize,
    /// Reflection elements per IRS.
    #[serde(rename = "M")]
    pub elements_per_irs: usize,
    pub bs_positions: Vec<[f64; 3]>,
    pub irs_positions: Vec<[f64; 3]>,
    /// Per-cell horizontal center of the user disk.
    pub user_cluster_centers: Vec<[f64; 2]>,
    pub user_cluster_radius: f64,
    /// Fixed horizontal user coordinates, cell-major (`l * K + k`). When
    /// present they replace the random drop inside the cluster disks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_positions: Option<Vec<[f64; 2]>>,
    pub heights: Heights,
    /// Per-BS power budget in watts.
    #[serde(rename = "P_max")]
    pub p_max: f64,
    pub noise_density_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub alpha_bu: f64,
    pub alpha_bi: f64,
    pub alpha_iu: f64,
    pub pl0_db: f64,
    pub d0_m: f64,
    pub rician_beta: f64,
    pub eta: f64,
    /// Rate weights, cell-major (`l * K + k`).
    pub weights: Vec<f64>,
    pub antenna_spacing_ratio: f64,
}

impl ScenarioConfig {
    /// Two-cell layout: BSs at x = 0 and 600 m, one IRS at the cell
    /// boundary, two users per cell around x_u = 280 m and 600 - x_u.
    pub fn two_cell() -> Self {
        let heights = Heights { bs: 30.0, irs: 10.0, user: 1.5 };
        Self {
            cells: 2,
            users_per_cell: 2,
            tx_antennas: 4,
            rx_antennas: 2,
            streams: 2,
            irs_count: 1,
            elements_per_irs: 50,
            bs_positions: vec![[0.0, 0.0, heights.bs], [600.0, 0.0, heights.bs]],
            irs_positions: vec![[300.0, 0.0, heights.irs]],
            user_cluster_centers: vec![[280.0, 0.0], [320.0, 0.0]],
            user_cluster_radius: 20.0,
            user_positions: None,
            heights,
            p_max: 1.0,
            noise_density_dbm_hz: -174.0,
            bandwidth_hz: 10e6,
            alpha_bu: 3.75,
            alpha_bi: 2.2,
            alpha_iu: 2.2,
            pl0_db: -30.0,
            d0_m: 1.0,
            rician_beta: 3.0,
            eta: 1.0,
            weights: vec![1.0; 4],
            antenna_spacing_ratio: 0.5,
        }
    }

    /// Four-cell square layout with BSs at the corners of a 600 m square,
    /// two-antenna BSs and three users per cell.
    pub fn four_cell() -> Self {
        let heights = Heights { bs: 30.0, irs: 10.0, user: 1.5 };
        let bs = [[0.0, 0.0], [600.0, 0.0], [0.0, 600.0], [600.0, 600.0]];
        Self {
            cells: 4,
            users_per_cell: 3,
            tx_antennas: 2,
            rx_antennas: 2,
            streams: 2,
            irs_count: 1,
            elements_per_irs: 50,
            bs_positions: bs.iter().map(|p| [p[0], p[1], heights.bs]).collect(),
            irs_positions: vec![[300.0, 0.0, heights.irs]],
            user_cluster_centers: vec![[280.0, 0.0], [320.0, 0.0], [280.0, 600.0], [320.0, 600.0]],
            user_cluster_radius: 20.0,
            user_positions: None,
            heights,
            p_max: 1.0,
            noise_density_dbm_hz: -174.0,
            bandwidth_hz: 10e6,
            alpha_bu: 3.75,
            alpha_bi: 2.2,
            alpha_iu: 2.2,
            pl0_db: -30.0,
            d0_m: 1.0,
            rician_beta: 3.0,
            eta: 1.0,
            weights: vec![1.0; 12],
            antenna_spacing_ratio: 0.5,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn num_users(&self) -> usize {
        self.cells * self.users_per_cell
    }

    /// Total reflection elements across all IRSs.
    pub fn total_elements(&self) -> usize {
        self.irs_count * self.elements_per_irs
    }

    pub fn noise_power_watts(&self) -> f64 {
        noise_power_watts(self)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.cells < 1 || self.users_per_cell < 1 {
            return fail("L and K must be at least 1".into());
        }
        if self.elements_per_irs < 1 {
            return fail("M must be at least 1".into());
        }
        if self.streams < 1 || self.tx_antennas < self.streams || self.rx_antennas < self.streams {
            return fail(format!(
                "need Nt >= d >= 1 and Nr >= d (Nt={}, Nr={}, d={})",
                self.tx_antennas, self.rx_antennas, self.streams
            ));
        }
        if !(self.p_max > 0.0) {
            return fail(format!("P_max must be positive, got {}", self.p_max));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return fail(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        if !(self.rician_beta >= 0.0) {
            return fail(format!("rician_beta must be non-negative, got {}", self.rician_beta));
        }
        if !(self.user_cluster_radius >= 0.0) {
            return fail("user_cluster_radius must be non-negative".into());
        }
        if !(self.bandwidth_hz > 0.0) || !(self.d0_m > 0.0) {
            return fail("bandwidth_hz and d0_m must be positive".into());
        }
        if self.bs_positions.len() != self.cells {
            return fail(format!("bs_positions has {} entries, L = {}", self.bs_positions.len(), self.cells));
        }
        if self.irs_positions.len() != self.irs_count {
            return fail(format!("irs_positions has {} entries, A = {}", self.irs_positions.len(), self.irs_count));
        }
        if self.user_cluster_centers.len() != self.cells {
            return fail("user_cluster_centers needs one center per cell".into());
        }
        if self.weights.len() != self.num_users() {
            return fail(format!("weights has {} entries, L*K = {}", self.weights.len(), self.num_users()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return fail("weights must be non-negative".into());
        }
        if let Some(pos) = &self.user_positions {
            if pos.len() != self.num_users() {
                return fail("user_positions needs L*K entries".into());
            }
        }
        Ok(())
    }
}

/// `PL0 - 10 α log10(d / d0)` in dB.
pub fn path_loss_db(distance_m: f64, alpha: f64, cfg: &ScenarioConfig) -> Result<f64> {
    path_loss_db_raw(distance_m, alpha, cfg.pl0_db, cfg.d0_m)
}

pub fn path_loss_db_raw(distance_m: f64, alpha: f64, pl0_db: f64, d0_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::Domain(format!("link distance must be positive, got {distance_m}")));
    }
    Ok(pl0_db - 10.0 * alpha * (distance_m / d0_m).log10())
}

/// Amplitude gain corresponding to a path loss in dB.
pub fn amplitude_gain(pl_db: f64) -> f64 {
    10f64.powf(pl_db / 20.0)
}

/// Uniform linear array response `[1, e^{j 2π s sin θ}, ..., e^{j 2π s (n-1) sin θ}]`.
pub fn steering_vector(angle: f64, count: usize, spacing_ratio: f64) -> CVec {
    let step = 2.0 * PI * spacing_ratio * angle.sin();
    CVec::from_fn(count, |i, _| {
        if i == 0 {
            c(1.0, 0.0)
        } else {
            let phase = step * i as f64;
            c(phase.cos(), phase.sin())
        }
    })
}

/// Matrix of i.i.d. circularly-symmetric standard complex Gaussians.
pub fn rayleigh_channel<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * scale, im * scale)
    })
}

/// `sqrt(β/(β+1)) a_r(aoa) a_t(aod)^H + sqrt(1/(β+1)) W` with W Rayleigh.
pub fn rician_channel<R: Rng + ?Sized>(
    rng: &mut R,
    beta: f64,
    rows: usize,
    cols: usize,
    aoa: f64,
    aod: f64,
    spacing_ratio: f64,
) -> Result<CMat> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("Rician factor must be non-negative, got {beta}")));
    }
    let los = steering_vector(aoa, rows, spacing_ratio) * steering_vector(aod, cols, spacing_ratio).adjoint();
    let nlos = rayleigh_channel(rng, rows, cols);
    Ok(los.scale((beta / (beta + 1.0)).sqrt()) + nlos.scale((1.0 / (beta + 1.0)).sqrt()))
}

/// Thermal noise power over the configured bandwidth, in watts.
pub fn noise_power_watts(cfg: &ScenarioConfig) -> f64 {
    let dbm = cfg.noise_density_dbm_hz + 10.0 * cfg.bandwidth_hz.log10();
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Identity of an independent random substream within one realization.
#[derive(Debug, Clone, Copy)]
pub enum Stream {
    UserDrop { user: usize },
    Direct { bs: usize, user: usize },
    IrsUser { irs: usize, user: usize },
    BsIrs { bs: usize, irs: usize },
    InitPhase,
    Custom(u64),
}

impl Stream {
    fn id(self) -> u64 {
        let pack = |tag: u64, i: usize, j: usize| (tag << 56) | ((i as u64) << 28) | j as u64;
        match self {
            Stream::UserDrop { user } => pack(1, user, 0),
            Stream::Direct { bs, user } => pack(2, bs, user),
            Stream::IrsUser { irs, user } => pack(3, irs, user),
            Stream::BsIrs { bs, irs } => pack(4, bs, irs),
            Stream::InitPhase => pack(5, 0, 0),
            Stream::Custom(x) => pack(6, 0, 0) ^ (x & ((1 << 56) - 1)),
        }
    }
}

/// Deterministic RNG for one substream of the realization `seed`.
pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// One realization of every channel in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub cells: usize,
    pub users_per_cell: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub irs_count: usize,
    pub elements_per_irs: usize,
    /// `[n][l][k]`: BS n to user (l, k), `Nr x Nt`.
    pub h_direct: Vec<Vec<Vec<CMat>>>,
    /// `[a][l][k]`: IRS a to user (l, k), `Nr x M`.
    pub h_irs_user: Vec<Vec<Vec<CMat>>>,
    /// `[n][a]`: BS n to IRS a, `M x Nt`.
    pub g_bs_irs: Vec<Vec<CMat>>,
    /// 3D user coordinates, cell-major.
    pub user_positions: Vec<[f64; 3]>,
    pub seed: u64,
}

impl ChannelSet {
    pub fn num_users(&self) -> usize {
        self.cells * self.users_per_cell
    }

    pub fn total_elements(&self) -> usize {
        self.irs_count * self.elements_per_irs
    }

    /// Cell-major flat index of user (l, k).
    pub fn user_index(&self, l: usize, k: usize) -> usize {
        l * self.users_per_cell + k
    }

    /// `[H_{1,l,k}^r ... H_{A,l,k}^r]`, `Nr x AM`.
    pub fn stacked_irs_user(&self, l: usize, k: usize) -> CMat {
        let m = self.elements_per_irs;
        let mut out = CMat::zeros(self.rx_antennas, self.total_elements());
        for a in 0..self.irs_count {
            out.columns_mut(a * m, m).copy_from(&self.h_irs_user[a][l][k]);
        }
        out
    }

    /// `[G_{n,1}; ...; G_{n,A}]`, `AM x Nt`.
    pub fn stacked_bs_irs(&self, n: usize) -> CMat {
        let m = self.elements_per_irs;
        let mut out = CMat::zeros(self.total_elements(), self.tx_antennas);
        for a in 0..self.irs_count {
            out.rows_mut(a * m, m).copy_from(&self.g_bs_irs[n][a]);
        }
        out
    }

    /// The same realization with every IRS-related channel set to zero.
    pub fn without_irs(&self) -> Self {
        let mut out = self.clone();
        for per_irs in out.h_irs_user.iter_mut() {
            for per_cell in per_irs.iter_mut() {
                for h in per_cell.iter_mut() {
                    h.fill(c(0.0, 0.0));
                }
            }
        }
        for per_bs in out.g_bs_irs.iter_mut() {
            for g in per_bs.iter_mut() {
                g.fill(c(0.0, 0.0));
            }
        }
        out
    }

    /// View of the network as one transmitter with `L * Nt` antennas serving
    /// all `L * K` users as a single cell. BS n occupies antenna columns
    /// `n * Nt .. (n + 1) * Nt`.
    pub fn joint_transmission(&self) -> Self {
        let nt = self.tx_antennas;
        let lnt = self.cells * nt;
        let mut direct = Vec::with_capacity(self.num_users());
        for l in 0..self.cells {
            for k in 0..self.users_per_cell {
                let mut h = CMat::zeros(self.rx_antennas, lnt);
                for n in 0..self.cells {
                    h.columns_mut(n * nt, nt).copy_from(&self.h_direct[n][l][k]);
                }
                direct.push(h);
            }
        }
        let irs_user = self
            .h_irs_user
            .iter()
            .map(|per_irs| vec![per_irs.iter().flatten().cloned().collect::<Vec<_>>()])
            .collect();
        let g = (0..self.irs_count)
            .map(|a| {
                let mut g = CMat::zeros(self.elements_per_irs, lnt);
                for n in 0..self.cells {
                    g.columns_mut(n * nt, nt).copy_from(&self.g_bs_irs[n][a]);
                }
                g
            })
            .collect();
        Self {
            cells: 1,
            users_per_cell: self.num_users(),
            tx_antennas: lnt,
            rx_antennas: self.rx_antennas,
            irs_count: self.irs_count,
            elements_per_irs: self.elements_per_irs,
            h_direct: vec![vec![direct]],
            h_irs_user: irs_user,
            g_bs_irs: vec![g],
            user_positions: self.user_positions.clone(),
            seed: self.seed,
        }
    }

    pub fn is_finite(&self) -> bool {
        let ok = |m: &CMat| m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        self.h_direct.iter().flatten().flatten().all(ok)
            && self.h_irs_user.iter().flatten().flatten().all(ok)
            && self.g_bs_irs.iter().flatten().all(ok)
    }
}

fn uniform_angle(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.0..2.0 * PI)
}

/// Horizontal user coordinates for a realization, cell-major.
pub fn drop_users(cfg: &ScenarioConfig, seed: u64) -> Vec<[f64; 3]> {
    let z = cfg.heights.user;
    if let Some(fixed) = &cfg.user_positions {
        return fixed.iter().map(|p| [p[0], p[1], z]).collect();
    }
    let mut out = Vec::with_capacity(cfg.num_users());
    for l in 0..cfg.cells {
        for k in 0..cfg.users_per_cell {
            let mut rng = substream(seed, Stream::UserDrop { user: l * cfg.users_per_cell + k });
            let r = cfg.user_cluster_radius * rng.random::<f64>().sqrt();
            let t = uniform_angle(&mut rng);
            let center = cfg.user_cluster_centers[l];
            out.push([center[0] + r * t.cos(), center[1] + r * t.sin(), z]);
        }
    }
    out
}

/// Draw every channel of one realization. Pure in `(cfg, seed)`.
pub fn synthesize(cfg: &ScenarioConfig, seed: u64) -> Result<ChannelSet> {
    cfg.validate()?;
    let (l_cells, k_users) = (cfg.cells, cfg.users_per_cell);
    let (nt, nr, m) = (cfg.tx_antennas, cfg.rx_antennas, cfg.elements_per_irs);
    let users = drop_users(cfg, seed);
    let spacing = cfg.antenna_spacing_ratio;

    let mut h_direct = Vec::with_capacity(l_cells);
    for (n, &bs) in cfg.bs_positions.iter().enumerate() {
        let mut per_cell = Vec::with_capacity(l_cells);
        for l in 0..l_cells {
            let mut row = Vec::with_capacity(k_users);
            for k in 0..k_users {
                let u = l * k_users + k;
                let mut rng = substream(seed, Stream::Direct { bs: n, user: u });
                let gain = amplitude_gain(path_loss_db(distance(bs, users[u]), cfg.alpha_bu, cfg)?);
                row.push(rayleigh_channel(&mut rng, nr, nt).scale(gain));
            }
            per_cell.push(row);
        }
        h_direct.push(per_cell);
    }

    let mut h_irs_user = Vec::with_capacity(cfg.irs_count);
    for (a, &irs) in cfg.irs_positions.iter().enumerate() {
        let mut per_cell = Vec::with_capacity(l_cells);
        for l in 0..l_cells {
            let mut row = Vec::with_capacity(k_users);
            for k in 0..k_users {
                let u = l * k_users + k;
                let mut rng = substream(seed, Stream::IrsUser { irs: a, user: u });
                let (aoa, aod) = (uniform_angle(&mut rng), uniform_angle(&mut rng));
                let gain = amplitude_gain(path_loss_db(distance(irs, users[u]), cfg.alpha_iu, cfg)?);
                let h = rician_channel(&mut rng, cfg.rician_beta, nr, m, aoa, aod, spacing)?;
                row.push(h.scale(gain));
            }
            per_cell.push(row);
        }
        h_irs_user.push(per_cell);
    }

    let mut g_bs_irs = Vec::with_capacity(l_cells);
    for (n, &bs) in cfg.bs_positions.iter().enumerate() {
        let mut row = Vec::with_capacity(cfg.irs_count);
        for (a, &irs) in cfg.irs_positions.iter().enumerate() {
            let mut rng = substream(seed, Stream::BsIrs { bs: n, irs: a });
            let (aoa, aod) = (uniform_angle(&mut rng), uniform_angle(&mut rng));
            let gain = amplitude_gain(path_loss_db(distance(bs, irs), cfg.alpha_bi, cfg)?);
            let g = rician_channel(&mut rng, cfg.rician_beta, m, nt, aoa, aod, spacing)?;
            row.push(g.scale(gain));
        }
        g_bs_irs.push(row);
    }

    Ok(ChannelSet {
        cells: l_cells,
        users_per_cell: k_users,
        tx_antennas: nt,
        rx_antennas: nr,
        irs_count: cfg.irs_count,
        elements_per_irs: m,
        h_direct,
        h_irs_user,
        g_bs_irs,
        user_positions: users,
        seed,
    })
}

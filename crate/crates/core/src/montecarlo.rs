//! Monte Carlo experiments: size, power under local alternatives, and the
//! distribution of the selected trend order.
//!
//! Every replication owns a ChaCha20 stream keyed by `(cell seed, replication
//! index)`, and the cell seed is derived from the run seed and the true `δ`.
//! Results therefore do not depend on the worker count or on where a `δ`
//! sits in the grid.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fracsim::{FracParams, SimMethod, Simulator};
use crate::fractest::{asymptotic_local_power, p_value, t_from_periodogram, Alternative, Bandwidth, TrendOrder};
use crate::io::RunManifest;
use crate::selection::{select_order, Penalty};
use crate::spectral::periodogram;
use crate::{build_basis, ChebyshevBasis, Error, Result, TimeSeries};

/// Replications per cell when none are requested (the full design uses 5,000).
pub const DESK_REPS: usize = 1_000;
pub const FULL_REPS: usize = 5_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub t_len: usize,
    pub reps: usize,
    pub bandwidth: Bandwidth,
    /// True memory parameters to simulate.
    pub delta_grid: Vec<f64>,
    /// Trend coefficients `(β₀, β₁, …)` on `P_t(0), P_t(1), …`.
    pub beta: Vec<f64>,
    pub k_fit: TrendOrder,
    pub level: f64,
    pub alternative: Alternative,
    pub seed: u64,
    pub sim_method: SimMethod,
    /// Worker threads; `None` uses the global pool. Has no effect on results.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl McConfig {
    /// Null design: `δ = 0`, no trend, `k = 1`, two-sided LM at 5%, Type I noise.
    pub fn new(t_len: usize, reps: usize, bandwidth: Bandwidth, seed: u64) -> Self {
        McConfig {
            t_len,
            reps,
            bandwidth,
            delta_grid: vec![0.0],
            beta: vec![0.0, 0.0],
            k_fit: TrendOrder::Fixed(1),
            level: 0.05,
            alternative: Alternative::TwoSided,
            seed,
            sim_method: SimMethod::TypeI,
            threads: None,
        }
    }

    fn validate(&self) -> Result<usize> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.delta_grid.is_empty() {
            return Err(Error::Config("delta grid is empty".into()));
        }
        if let Some(d) = self.delta_grid.iter().find(|d| !(d.is_finite() && d.abs() < 0.5)) {
            return Err(Error::Config(format!("grid value δ = {d} outside (−0.5, 0.5)")));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("level {} must lie in (0, 1)", self.level)));
        }
        let k_needed = match self.k_fit {
            TrendOrder::Fixed(k) => k,
            TrendOrder::Auto { k_star, .. } => k_star,
        };
        if k_needed + 1 > self.t_len || self.beta.len() > self.t_len {
            return Err(Error::Config(format!(
                "trend orders do not fit in T = {} observations",
                self.t_len
            )));
        }
        Ok(self.bandwidth.resolve(self.t_len)?.m)
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub t_stat: f64,
    pub reject: bool,
    pub k_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCell {
    pub delta: f64,
    /// `c = δ √m`
    pub c: f64,
    pub rejections: usize,
    pub rejection_freq: f64,
    /// `√(p(1 − p)/reps)`
    pub mc_se: f64,
    pub asymptotic_power: f64,
    pub mean_t: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub config: McConfig,
    pub m: usize,
    pub cells: Vec<McCell>,
    pub wall_seconds: f64,
}

impl McReport {
    pub fn cell(&self, delta: f64) -> Option<&McCell> {
        self.cells.iter().find(|c| c.delta == delta)
    }

    /// Curve table with columns `delta,c,rejection_freq,mc_se,asymptotic_power`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "delta,c,rejection_freq,mc_se,asymptotic_power")?;
        for cell in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{}",
                cell.delta, cell.c, cell.rejection_freq, cell.mc_se, cell.asymptotic_power
            )?;
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the cell simulating true memory `delta`.
pub fn cell_seed(seed: u64, delta: f64) -> u64 {
    // normalise −0.0 so it shares a stream with 0.0
    let bits = if delta == 0.0 { 0 } else { delta.to_bits() };
    splitmix64(seed ^ splitmix64(bits))
}

/// Generator for replication `rep` of a cell.
pub fn replication_rng(cell_seed: u64, rep: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(cell_seed);
    rng.set_stream(rep as u64);
    rng
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

struct CellPlan<'a> {
    config: &'a McConfig,
    m: usize,
    basis: ChebyshevBasis,
    trend: Vec<f64>,
}

impl<'a> CellPlan<'a> {
    fn new(config: &'a McConfig, m: usize) -> Result<Self> {
        let k_basis = match config.k_fit {
            TrendOrder::Fixed(k) => k,
            TrendOrder::Auto { k_star, .. } => k_star,
        }
        .max(config.beta.len().saturating_sub(1));
        let basis = build_basis(config.t_len, k_basis)?;
        let trend = basis.combine(&config.beta)?;
        Ok(CellPlan {
            config,
            m,
            basis,
            trend,
        })
    }

    fn replicate(&self, sim: &Simulator, seed: u64, rep: usize) -> Result<RepOutcome> {
        let mut rng = replication_rng(seed, rep);
        let u = sim.sample(&mut rng);
        let y: Vec<f64> = u.values().iter().zip(&self.trend).map(|(a, b)| a + b).collect();
        let y = TimeSeries::new(y)?;
        let k = match self.config.k_fit {
            TrendOrder::Fixed(k) => k,
            TrendOrder::Auto { k_star, penalty } => select_order(&y, k_star, penalty)?.k_hat,
        };
        let fit = self.basis.fit(&y, k)?;
        let t_stat = t_from_periodogram(&periodogram(&fit.residuals, self.m)?, 0.0)?;
        Ok(RepOutcome {
            t_stat,
            reject: p_value(t_stat, self.config.alternative) < self.config.level,
            k_used: k,
        })
    }

    fn run_cell(&self, delta: f64) -> Result<(u64, Vec<RepOutcome>)> {
        let params = FracParams::new(delta, 1.0, self.config.sim_method)?;
        let sim = Simulator::new(&params, self.config.t_len)?;
        let seed = cell_seed(self.config.seed, delta);
        let outcomes = (0..self.config.reps)
            .into_par_iter()
            .map(|rep| self.replicate(&sim, seed, rep))
            .collect::<Result<Vec<_>>>()?;
        Ok((seed, outcomes))
    }
}

/// Per-replication outcomes for a single true `δ` (null hypothesis `δ₀ = 0`).
pub fn run_cell_outcomes(config: &McConfig, delta: f64) -> Result<Vec<RepOutcome>> {
    let m = config.validate()?;
    let plan = CellPlan::new(config, m)?;
    in_pool(config.threads, || plan.run_cell(delta))?.map(|(_, o)| o)
}

fn run_grid(config: &McConfig) -> Result<McReport> {
    let start = Instant::now();
    let m = config.validate()?;
    let plan = CellPlan::new(config, m)?;
    let sqrt_m = (m as f64).sqrt();
    let mut cells = Vec::with_capacity(config.delta_grid.len());
    for &delta in &config.delta_grid {
        let (seed, outcomes) = in_pool(config.threads, || plan.run_cell(delta))??;
        let reps = outcomes.len() as f64;
        let rejections = outcomes.iter().filter(|o| o.reject).count();
        let p = rejections as f64 / reps;
        let c = delta * sqrt_m;
        cells.push(McCell {
            delta,
            c,
            rejections,
            rejection_freq: p,
            mc_se: (p * (1.0 - p) / reps).sqrt(),
            asymptotic_power: asymptotic_local_power(c, config.level, config.alternative)?,
            // sequential sum keeps the value independent of scheduling
            mean_t: outcomes.iter().map(|o| o.t_stat).sum::<f64>() / reps,
            seed,
        });
    }
    Ok(McReport {
        config: config.clone(),
        m,
        cells,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Rejection frequency under the null `δ = 0`.
pub fn run_size(config: &McConfig) -> Result<McReport> {
    if config.delta_grid != [0.0] {
        return Err(Error::Config("size experiments use the grid {0}".into()));
    }
    run_grid(config)
}

/// Rejection frequencies across the `δ` grid with the asymptotic overlay.
pub fn run_power_curve(config: &McConfig) -> Result<McReport> {
    run_grid(config)
}

/// `δ = c/√m` for `c` in `c_grid`.
pub fn delta_grid_for(c_grid: &[f64], m: usize) -> Vec<f64> {
    let s = (m as f64).sqrt();
    c_grid.iter().map(|c| c / s).collect()
}

/// `c ∈ {−3, −2.5, …, 3}`
pub fn default_c_grid() -> Vec<f64> {
    (-6..=6).map(|i| i as f64 * 0.5).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcExperimentConfig {
    pub t_len: usize,
    pub reps: usize,
    pub delta: f64,
    pub beta: Vec<f64>,
    pub k_star: usize,
    pub penalty: Penalty,
    pub seed: u64,
    pub sim_method: SimMethod,
    #[serde(default)]
    pub threads: Option<usize>,
}

/// Empirical distribution of `k̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KhatDistribution {
    pub reps: usize,
    /// `counts[k]` replications selected order `k`.
    pub counts: Vec<usize>,
}

impl KhatDistribution {
    pub fn freq(&self, k: usize) -> f64 {
        self.counts.get(k).copied().unwrap_or(0) as f64 / self.reps as f64
    }

    pub fn freq_above(&self, k: usize) -> f64 {
        self.counts.iter().skip(k + 1).sum::<usize>() as f64 / self.reps as f64
    }
}

pub fn run_ic_experiment(config: &IcExperimentConfig) -> Result<KhatDistribution> {
    if config.reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    if config.k_star + 1 > config.t_len || config.beta.len() > config.k_star + 1 {
        return Err(Error::Config(format!(
            "k* = {} with {} trend coefficients does not fit T = {}",
            config.k_star,
            config.beta.len(),
            config.t_len
        )));
    }
    let params = FracParams::new(config.delta, 1.0, config.sim_method)?;
    let sim = Simulator::new(&params, config.t_len)?;
    let trend = build_basis(config.t_len, config.k_star)?.combine(&config.beta)?;
    let seed = cell_seed(config.seed, config.delta);
    let picks = in_pool(config.threads, || {
        (0..config.reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = replication_rng(seed, rep);
                let u = sim.sample(&mut rng);
                let y = TimeSeries::new(u.values().iter().zip(&trend).map(|(a, b)| a + b).collect())?;
                Ok(select_order(&y, config.k_star, config.penalty)?.k_hat)
            })
            .collect::<Result<Vec<usize>>>()
    })??;
    let mut counts = vec![0; config.k_star + 1];
    for k in picks {
        counts[k] += 1;
    }
    Ok(KhatDistribution {
        reps: config.reps,
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigurePreset {
    /// No trend in the data (`β₁ = 0`).
    FigS1,
    /// One Chebyshev term in the data (`β₁ = 1`).
    FigS2,
}

impl FigurePreset {
    pub fn beta1(&self) -> f64 {
        match self {
            FigurePreset::FigS1 => 0.0,
            FigurePreset::FigS2 => 1.0,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            FigurePreset::FigS1 => "fig_s1",
            FigurePreset::FigS2 => "fig_s2",
        }
    }
}

impl std::str::FromStr for FigurePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" | "fig_s1" | "fig-s1" => Ok(FigurePreset::FigS1),
            "s2" | "fig_s2" | "fig-s2" => Ok(FigurePreset::FigS2),
            other => Err(Error::Config(format!("unknown figure preset '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureOptions {
    pub reps: usize,
    pub seed: u64,
    pub c_grid: Vec<f64>,
    /// Also run the test that ignores the trend (`k = 0`).
    pub include_k0: bool,
    pub sim_method: SimMethod,
    pub threads: Option<usize>,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions {
            reps: DESK_REPS,
            seed: 20_240_101,
            c_grid: default_c_grid(),
            include_k0: false,
            sim_method: SimMethod::TypeI,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePanel {
    pub t_len: usize,
    pub alpha: f64,
    pub k_fit: usize,
    pub file: PathBuf,
    pub report: McReport,
}

/// Runs the (T ∈ {256, 512}) × (α ∈ {0.65, 0.80}) grid for a preset, writing
/// one curve CSV per panel and test plus a `manifest.json`.
pub fn replicate_figures(preset: FigurePreset, options: &FigureOptions, out_dir: &Path) -> Result<Vec<FigurePanel>> {
    let start = Instant::now();
    fs::create_dir_all(out_dir)?;
    let k_fits: &[usize] = if options.include_k0 { &[1, 0] } else { &[1] };
    let mut panels = Vec::new();
    for &t_len in &[256usize, 512] {
        for &alpha in &[0.65, 0.80] {
            let m = Bandwidth::Exponent(alpha).resolve(t_len)?.m;
            for &k in k_fits {
                let config = McConfig {
                    t_len,
                    reps: options.reps,
                    bandwidth: Bandwidth::Exponent(alpha),
                    delta_grid: delta_grid_for(&options.c_grid, m),
                    beta: vec![0.0, preset.beta1()],
                    k_fit: TrendOrder::Fixed(k),
                    level: 0.05,
                    alternative: Alternative::TwoSided,
                    seed: options.seed,
                    sim_method: options.sim_method,
                    threads: options.threads,
                };
                let report = run_power_curve(&config)?;
                let file = out_dir.join(format!(
                    "{}_T{}_a{:03}_k{}.csv",
                    preset.tag(),
                    t_len,
                    (alpha * 100.0).round() as u32,
                    k
                ));
                report.write_csv(fs::File::create(&file)?)?;
                panels.push(FigurePanel {
                    t_len,
                    alpha,
                    k_fit: k,
                    file,
                    report,
                });
            }
        }
    }
    let manifest = RunManifest::new(
        format!("figure {}", preset.tag()),
        serde_json::json!({ "preset": preset, "options": options }),
        Some(options.seed),
        None,
    )
    .with_wall_seconds(start.elapsed().as_secs_f64())
    .with_outputs(panels.iter().map(|p| p.file.display().to_string()).collect());
    manifest.write_to(&out_dir.join("manifest.json"))?;
    Ok(panels)
}

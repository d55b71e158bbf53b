//! Command implementations for the `fractrend` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::fracsim::{simulate, FracParams, SimMethod};
use crate::fractest::{test_with_detrend, Alternative, Bandwidth, TestConfig, TestResult, TrendOrder};
use crate::io::{DataFile, RunManifest, Transform};
use crate::montecarlo::{
    default_c_grid, delta_grid_for, replicate_figures, run_power_curve, run_size, FigureOptions, FigurePreset,
    McConfig, McReport, FULL_REPS,
};
use crate::selection::{select_order, IcTrace, Penalty};
use crate::{build_basis, Error, Result};

/// Environment variable holding the worker count for Monte Carlo commands.
pub const THREADS_ENV: &str = "FRACTREND_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "fractrend",
    version,
    about = "Tests for fractional integration around smooth Chebyshev trends"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test H0: δ = δ0 on a CSV column after removing a Chebyshev trend.
    Test(TestArgs),
    /// Simulate a trend plus fractional noise and write it as CSV.
    Simulate(SimulateArgs),
    /// Print the information-criterion trace for the trend order.
    Select(SelectArgs),
    /// Monte Carlo rejection frequency under δ = 0.
    Size(McArgs),
    /// Monte Carlo power curve under local alternatives.
    Power(PowerArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AltArg {
    TwoSided,
    Greater,
    Less,
}

impl From<AltArg> for Alternative {
    fn from(a: AltArg) -> Self {
        match a {
            AltArg::TwoSided => Alternative::TwoSided,
            AltArg::Greater => Alternative::Greater,
            AltArg::Less => Alternative::Less,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PenaltyArg {
    Bic,
    Hq,
}

impl From<PenaltyArg> for Penalty {
    fn from(p: PenaltyArg) -> Self {
        match p {
            PenaltyArg::Bic => Penalty::Bic,
            PenaltyArg::Hq => Penalty::Hq,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Type1,
    Type2,
}

impl From<MethodArg> for SimMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Type1 => SimMethod::TypeI,
            MethodArg::Type2 => SimMethod::TypeII,
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Column to analyse.
    #[arg(long, required_unless_present = "ratio")]
    pub column: Option<String>,
    /// Take natural logs of the column.
    #[arg(long, conflicts_with = "ratio")]
    pub log: bool,
    /// Analyse ln(NUM/DEN) built from two columns.
    #[arg(long, value_name = "NUM,DEN", value_parser = parse_ratio)]
    pub ratio: Option<(String, String)>,
}

fn parse_ratio(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once(',') {
        Some((n, d)) if !n.trim().is_empty() && !d.trim().is_empty() && !d.contains(',') => {
            Ok((n.trim().to_string(), d.trim().to_string()))
        }
        _ => Err(format!("expected NUM,DEN, got '{s}'")),
    }
}

impl InputArgs {
    fn transform(&self) -> Transform {
        match &self.ratio {
            Some((num, den)) => Transform::LogRatio {
                numerator: num.clone(),
                denominator: den.clone(),
            },
            None if self.log => Transform::Log,
            None => Transform::None,
        }
    }

    fn load(&self) -> Result<(crate::TimeSeries, String)> {
        let file = DataFile::open(&self.input)?;
        let series = file.series(self.column.as_deref().unwrap_or(""), &self.transform())?;
        Ok((series, file.digest().to_string()))
    }
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta0: f64,
    /// Bandwidth exponent, m = floor(T^alpha).
    #[arg(long, default_value_t = crate::fractest::DEFAULT_ALPHA, conflicts_with = "m")]
    pub alpha: f64,
    /// Explicit bandwidth.
    #[arg(long)]
    pub m: Option<usize>,
    /// Fixed trend order.
    #[arg(long, conflicts_with = "auto_k")]
    pub k: Option<usize>,
    /// Select the trend order by information criterion (the default).
    #[arg(long)]
    pub auto_k: bool,
    #[arg(long, default_value_t = 10)]
    pub k_star: usize,
    #[arg(long, value_enum, default_value_t = PenaltyArg::Bic)]
    pub penalty: PenaltyArg,
    #[arg(long, value_enum, default_value_t = AltArg::Greater)]
    pub alternative: AltArg,
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    /// Write the result as JSON to PATH ('-' for stdout instead of the text report).
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Write a run manifest (JSON) to PATH.
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "T")]
    pub t_len: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Type1)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Chebyshev coefficients β0,β1,... added to the noise.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sd: f64,
    /// Permit |δ| < 1 with the truncated (type2) filter.
    #[arg(long)]
    pub allow_nonstationary: bool,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Write a run manifest (JSON) to PATH.
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 10)]
    pub k_star: usize,
    #[arg(long, value_enum, default_value_t = PenaltyArg::Bic)]
    pub penalty: PenaltyArg,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long = "T", default_value_t = 512)]
    pub t_len: usize,
    #[arg(long, default_value_t = crate::montecarlo::DESK_REPS)]
    pub reps: usize,
    /// Use the full 5,000 replications.
    #[arg(long, conflicts_with = "reps")]
    pub full: bool,
    #[arg(long, default_value_t = 0.8, conflicts_with = "m")]
    pub alpha: f64,
    /// Explicit bandwidth.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 1, conflicts_with = "auto_k")]
    pub k: usize,
    #[arg(long)]
    pub auto_k: bool,
    #[arg(long, default_value_t = 10)]
    pub k_star: usize,
    #[arg(long, value_enum, default_value_t = PenaltyArg::Bic)]
    pub penalty: PenaltyArg,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0")]
    pub beta: Vec<f64>,
    #[arg(long, default_value_t = 20_240_101)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    #[arg(long, value_enum, default_value_t = AltArg::TwoSided)]
    pub alternative: AltArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Type1)]
    pub method: MethodArg,
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Output directory for the curve CSV, report JSON and manifest.
    #[arg(long, default_value = "mc_out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    pub mc: McArgs,
    /// Local-alternative constants c; δ = c/√m.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "delta_grid"
    )]
    pub c_grid: Option<Vec<f64>>,
    /// Explicit δ values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub delta_grid: Option<Vec<f64>>,
    /// Run a figure preset: the T ∈ {256, 512} × α ∈ {0.65, 0.80} panels.
    #[arg(long, value_name = "s1|s2")]
    pub figure: Option<String>,
    /// With --figure, also run the trend-ignoring k = 0 test.
    #[arg(long, requires = "figure")]
    pub include_k0: bool,
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<()> {
    match cli.command {
        Command::Test(a) => cmd_test(&a, out).map(|_| ()),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Select(a) => cmd_select(&a, out).map(|_| ()),
        Command::Size(a) => cmd_size(&a, out).map(|_| ()),
        Command::Power(a) => cmd_power(&a, out),
    }
}

fn write_json<T: Serialize, W: Write>(value: &T, dest: &Path, out: &mut W) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if dest == Path::new("-") {
        writeln!(out, "{text}")?;
    } else {
        fs::write(dest, text + "\n")?;
    }
    Ok(())
}

pub fn test_config(a: &TestArgs) -> TestConfig {
    TestConfig {
        delta0: a.delta0,
        bandwidth: match a.m {
            Some(m) => Bandwidth::Fixed(m),
            None => Bandwidth::Exponent(a.alpha),
        },
        trend_order: match a.k {
            Some(k) => TrendOrder::Fixed(k),
            None => TrendOrder::Auto {
                k_star: a.k_star,
                penalty: a.penalty.into(),
            },
        },
        alternative: a.alternative.into(),
        level: a.level,
    }
}

pub fn cmd_test<W: Write>(a: &TestArgs, out: &mut W) -> Result<TestResult> {
    let (series, digest) = a.input.load()?;
    let config = test_config(a);
    let result = test_with_detrend(&series, &config)?;
    let json_to_stdout = a.json.as_deref() == Some(Path::new("-"));
    if !json_to_stdout {
        write_test_report(&result, &config, out)?;
    }
    if let Some(path) = &a.json {
        write_json(&result, path, out)?;
    }
    if let Some(path) = &a.manifest {
        RunManifest::new("test", serde_json::to_value(config)?, None, Some(digest)).write_to(path)?;
    }
    Ok(result)
}

fn write_test_report<W: Write>(r: &TestResult, config: &TestConfig, out: &mut W) -> Result<()> {
    writeln!(out, "T          {}", r.t_len)?;
    match config.bandwidth {
        Bandwidth::Exponent(alpha) => writeln!(
            out,
            "m          {} (floor(T^{alpha}){})",
            r.m,
            if r.bandwidth_clamped { ", clamped to T/2" } else { "" }
        )?,
        Bandwidth::Fixed(_) => writeln!(out, "m          {}", r.m)?,
    }
    match &r.ic_trace {
        Some(trace) => writeln!(
            out,
            "k          {} (selected by {}, k* = {})",
            r.k_used, trace.penalty_name, trace.k_max
        )?,
        None => writeln!(out, "k          {}", r.k_used)?,
    }
    writeln!(out, "delta0     {}", r.delta0)?;
    writeln!(out, "t          {}", r.t_stat)?;
    writeln!(out, "LM         {}", r.lm_stat)?;
    writeln!(out, "p-value    {} ({})", r.p_value, r.alternative)?;
    writeln!(
        out,
        "decision   {} H0 at level {}",
        if r.reject_at_level { "reject" } else { "do not reject" },
        r.level
    )?;
    if let Some(trace) = &r.ic_trace {
        writeln!(out)?;
        write_trace(trace, out)?;
    }
    Ok(())
}

fn write_trace<W: Write>(trace: &IcTrace, out: &mut W) -> Result<()> {
    writeln!(out, "{} penalty A(T) = {}", trace.penalty_name, trace.penalty_value)?;
    writeln!(out, "k,sigma2,ic,selected")?;
    for (k, (ic, s2)) in trace.ic_values.iter().zip(&trace.sigma2).enumerate() {
        let ic = ic.map_or_else(|| "exact_fit".to_string(), |v| v.to_string());
        writeln!(out, "{k},{s2},{ic},{}", if k == trace.k_hat { "*" } else { "" })?;
    }
    Ok(())
}

pub fn cmd_select<W: Write>(a: &SelectArgs, out: &mut W) -> Result<IcTrace> {
    let (series, _) = a.input.load()?;
    if a.k_star + 1 > series.len() {
        return Err(Error::Config(format!(
            "k* = {} needs more than T = {} observations",
            a.k_star,
            series.len()
        )));
    }
    let trace = select_order(&series, a.k_star, a.penalty.into())?;
    let json_to_stdout = a.json.as_deref() == Some(Path::new("-"));
    if !json_to_stdout {
        write_trace(&trace, out)?;
    }
    if let Some(path) = &a.json {
        write_json(&trace, path, out)?;
    }
    Ok(trace)
}

pub fn cmd_simulate<W: Write>(a: &SimulateArgs, out: &mut W) -> Result<()> {
    let params = if a.allow_nonstationary && matches!(a.method, MethodArg::Type2) {
        FracParams::nonstationary_type2(a.delta, a.sd)?
    } else {
        FracParams::new(a.delta, a.sd, a.method.into())?
    };
    if a.t_len < 2 {
        return Err(Error::Config(format!("T = {} must be at least 2", a.t_len)));
    }
    if a.beta.len() > a.t_len {
        return Err(Error::Config("more trend coefficients than observations".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(a.seed);
    let u = simulate(&params, a.t_len, &mut rng)?;
    let trend = if a.beta.is_empty() {
        vec![0.0; a.t_len]
    } else {
        build_basis(a.t_len, a.beta.len() - 1)?.combine(&a.beta)?
    };
    let mut text = String::from("t,y\n");
    for (t, (u, b)) in u.values().iter().zip(&trend).enumerate() {
        text.push_str(&format!("{},{}\n", t + 1, u + b));
    }
    match &a.output {
        Some(path) => fs::write(path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    if let Some(path) = &a.manifest {
        let config = serde_json::json!({
            "T": a.t_len,
            "delta": a.delta,
            "method": SimMethod::from(a.method),
            "beta": a.beta,
            "sd": a.sd,
        });
        RunManifest::new("simulate", config, Some(a.seed), None).write_to(path)?;
    }
    Ok(())
}

fn mc_config(a: &McArgs, delta_grid: Vec<f64>) -> McConfig {
    McConfig {
        t_len: a.t_len,
        reps: if a.full { FULL_REPS } else { a.reps },
        bandwidth: match a.m {
            Some(m) => Bandwidth::Fixed(m),
            None => Bandwidth::Exponent(a.alpha),
        },
        delta_grid,
        beta: a.beta.clone(),
        k_fit: if a.auto_k {
            TrendOrder::Auto {
                k_star: a.k_star,
                penalty: a.penalty.into(),
            }
        } else {
            TrendOrder::Fixed(a.k)
        },
        level: a.level,
        alternative: a.alternative.into(),
        seed: a.seed,
        sim_method: a.method.into(),
        threads: a.threads,
    }
}

fn write_mc_outputs<W: Write>(command: &str, report: &McReport, dir: &Path, out: &mut W) -> Result<()> {
    fs::create_dir_all(dir)?;
    let curve = dir.join("curve.csv");
    report.write_csv(fs::File::create(&curve)?)?;
    let report_path = dir.join("report.json");
    fs::write(&report_path, serde_json::to_string_pretty(report)?)?;
    RunManifest::new(
        command,
        serde_json::to_value(&report.config)?,
        Some(report.config.seed),
        None,
    )
    .with_wall_seconds(report.wall_seconds)
    .with_outputs(vec![curve.display().to_string(), report_path.display().to_string()])
    .write_to(&dir.join("manifest.json"))?;
    writeln!(
        out,
        "T = {}, m = {}, reps = {}",
        report.config.t_len, report.m, report.config.reps
    )?;
    report.write_csv(&mut *out)?;
    Ok(())
}

pub fn cmd_size<W: Write>(a: &McArgs, out: &mut W) -> Result<McReport> {
    let report = run_size(&mc_config(a, vec![0.0]))?;
    write_mc_outputs("size", &report, &a.out, out)?;
    Ok(report)
}

pub fn cmd_power<W: Write>(a: &PowerArgs, out: &mut W) -> Result<()> {
    if let Some(fig) = &a.figure {
        let preset: FigurePreset = fig.parse()?;
        let options = FigureOptions {
            reps: if a.mc.full { FULL_REPS } else { a.mc.reps },
            seed: a.mc.seed,
            c_grid: a.c_grid.clone().unwrap_or_else(default_c_grid),
            include_k0: a.include_k0,
            sim_method: a.mc.method.into(),
            threads: a.mc.threads,
        };
        for panel in replicate_figures(preset, &options, &a.mc.out)? {
            writeln!(
                out,
                "T = {}, alpha = {}, k = {}, m = {} -> {}",
                panel.t_len,
                panel.alpha,
                panel.k_fit,
                panel.report.m,
                panel.file.display()
            )?;
        }
        return Ok(());
    }
    let m = match a.mc.m {
        Some(m) => Bandwidth::Fixed(m),
        None => Bandwidth::Exponent(a.mc.alpha),
    }
    .resolve(a.mc.t_len)?
    .m;
    let grid = match (&a.delta_grid, &a.c_grid) {
        (Some(d), _) => d.clone(),
        (None, Some(c)) => delta_grid_for(c, m),
        (None, None) => delta_grid_for(&default_c_grid(), m),
    };
    let report = run_power_curve(&mc_config(&a.mc, grid))?;
    write_mc_outputs("power", &report, &a.mc.out, out)
}

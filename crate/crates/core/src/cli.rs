//! Command-line front end: JSON run configurations, subcommands and the
//! CSV/JSON artifacts they write.
//!
//! Every subcommand reads an optional JSON [`RunConfig`], applies flag
//! overrides, writes the effective configuration to `run_config.json` in the
//! output directory and then its own artifacts. Exit codes: 0 on success,
//! 2 for configuration errors, 3 for runtime errors.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::approx::{sup_error, ApproxKind};
use crate::error::{Error, Result};
use crate::estim::{
    default_hill_k, eigen_ratio_report, lagged_panels, lamyao_report, rank_transform, tail_pairs, EigenRatioRow,
    Layout, ReturnsPanel, RANK_BAND_ALPHA, RAW_BAND_ALPHA,
};
use crate::limits::Law;
use crate::linfield::{m_matrix, separable_coeffs, simulate_field, sum_squares_m, CoeffMatrix, FieldSpec, DEFAULT_CELL_CAP};
use crate::mc::{kde, run_ensemble, silverman_bandwidth, EnsembleSpec};
use crate::rand_heavy::{NormalizingSeq, TailModel};
use crate::spectra::autocov_spectrum;
use crate::tracyw::{default_grid, solve_painleve, DEFAULT_X0, DEFAULT_X_MIN};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "HEAVYSPEC_OUT";
/// Output directory when neither flag, config nor environment name one.
pub const DEFAULT_OUT: &str = "heavyspec-out";
/// Name of the effective-configuration file written by every subcommand.
pub const RUN_CONFIG_FILE: &str = "run_config.json";

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Simulate,
    Mmatrix,
    Spectra,
    Ensemble,
    Limits,
    Tw,
    Analyze,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Simulate => "simulate",
            CommandName::Mmatrix => "mmatrix",
            CommandName::Spectra => "spectra",
            CommandName::Ensemble => "ensemble",
            CommandName::Limits => "limits",
            CommandName::Tw => "tw",
            CommandName::Analyze => "analyze",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "heavyspec", version, about = "Extreme eigenvalues of heavy-tailed sample covariance matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one field realization and write the noise core and the lagged panels.
    Simulate(RunArgs),
    /// Singular values of the coefficient matrices M(s).
    Mmatrix(RunArgs),
    /// Spectra of one realization and their order-statistic approximations.
    Spectra(RunArgs),
    /// Monte Carlo ensemble of one statistic.
    Ensemble(RunArgs),
    /// Tabulate a limit law on a grid.
    Limits(RunArgs),
    /// Tabulate the Tracy–Widom distribution F1.
    Tw(RunArgs),
    /// Tail indices, eigenvalue ratios and sum-of-squares reports for a returns panel.
    Analyze(RunArgs),
}

impl Command {
    pub fn split(self) -> (CommandName, RunArgs) {
        match self {
            Command::Simulate(a) => (CommandName::Simulate, a),
            Command::Mmatrix(a) => (CommandName::Mmatrix, a),
            Command::Spectra(a) => (CommandName::Spectra, a),
            Command::Ensemble(a) => (CommandName::Ensemble, a),
            Command::Limits(a) => (CommandName::Limits, a),
            Command::Tw(a) => (CommandName::Tw, a),
            Command::Analyze(a) => (CommandName::Analyze, a),
        }
    }
}

/// Flags shared by all subcommands; each overrides the matching config key.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: config `out`, then $HEAVYSPEC_OUT, then ./heavyspec-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Ensemble size.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Hill estimator order statistic count (default floor(0.05 n)).
    #[arg(long)]
    pub hill_k: Option<usize>,
}

/// Where the coefficients `h_kl` come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CoeffSource {
    /// Inline list of `{k, l, h}` terms.
    Terms(CoeffMatrix),
    /// CSV file of `k,l,h` triples.
    Csv(PathBuf),
    /// `h_kl = theta_l c_k`.
    Separable { theta: Vec<f64>, c: Vec<f64> },
}

impl CoeffSource {
    pub fn load(&self) -> Result<CoeffMatrix> {
        match self {
            CoeffSource::Terms(c) => Ok(c.clone()),
            CoeffSource::Csv(path) => CoeffMatrix::read_csv(File::open(path)?),
            CoeffSource::Separable { theta, c } => separable_coeffs(theta, c),
        }
    }
}

/// Dimensions and noise of a simulated field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldBlock {
    pub noise: TailModel,
    /// Number of rows; derived as `round(n^beta)` when omitted.
    #[serde(default)]
    pub p: Option<usize>,
    /// Growth exponent with `p = n^beta`; checked against `p` when both are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub n: usize,
    #[serde(default)]
    pub s_max: usize,
    #[serde(default = "default_cell_cap")]
    pub cell_cap: usize,
}

fn default_cell_cap() -> usize {
    DEFAULT_CELL_CAP
}

impl FieldBlock {
    fn resolve_p(&mut self) -> Result<()> {
        let from_beta = match self.beta {
            Some(b) if !(b > 0.0 && b.is_finite()) => return Err(Error::invalid("beta must be positive")),
            Some(b) => Some((self.n as f64).powf(b).round() as usize),
            None => None,
        };
        self.p = match (self.p, from_beta) {
            (Some(p), Some(q)) if p != q => {
                return Err(Error::invalid(format!("p = {p} does not match round(n^beta) = {q}")));
            }
            (Some(p), _) => Some(p),
            (None, Some(q)) => Some(q),
            (None, None) => return Err(Error::invalid("field needs p or beta")),
        };
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MMatrixBlock {
    #[serde(default)]
    pub s_max: usize,
    /// `[s0, s1]` for the eigenvalues `v_j(s0, s1)`.
    #[serde(default)]
    pub sum_squares: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraBlock {
    /// Number of leading values compared.
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<ApproxKind>,
}

fn default_m() -> usize {
    10
}

fn default_kinds() -> Vec<ApproxKind> {
    vec![ApproxKind::Delta, ApproxKind::GammaRight, ApproxKind::GammaDown]
}

impl Default for SpectraBlock {
    fn default() -> Self {
        SpectraBlock {
            m: default_m(),
            kinds: default_kinds(),
        }
    }
}

/// Evaluation grid `from, from + h, ..., to` with `points` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl Grid {
    pub fn nodes(&self) -> Result<Vec<f64>> {
        if !(self.from.is_finite() && self.to.is_finite()) || self.to < self.from {
            return Err(Error::invalid("grid needs finite from <= to"));
        }
        match self.points {
            0 => Err(Error::invalid("grid needs at least one point")),
            1 => Ok(vec![self.from]),
            k => {
                let h = (self.to - self.from) / (k - 1) as f64;
                Ok((0..k).map(|i| if i + 1 == k { self.to } else { self.from + i as f64 * h }).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsBlock {
    pub law: Law,
    pub grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwBlock {
    #[serde(default = "default_tw_grid")]
    pub grid: Grid,
    /// Painlevé step; the cached default table is used when omitted.
    #[serde(default)]
    pub step: Option<f64>,
}

fn default_tw_grid() -> Grid {
    Grid {
        from: -8.0,
        to: 6.0,
        points: 561,
    }
}

impl Default for TwBlock {
    fn default() -> Self {
        TwBlock {
            grid: default_tw_grid(),
            step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeBlock {
    /// Returns CSV.
    pub returns: PathBuf,
    #[serde(default)]
    pub layout: Layout,
    /// Hill `k`; `floor(0.05 n)` when omitted.
    #[serde(default)]
    pub hill_k: Option<usize>,
    /// Number of eigenvalue ratios reported.
    #[serde(default = "default_ratios")]
    pub ratios: usize,
    #[serde(default = "default_rank_alpha")]
    pub rank_band_alpha: f64,
    #[serde(default = "default_raw_alpha")]
    pub raw_band_alpha: f64,
    /// Largest lag of the sum-of-squares report.
    #[serde(default = "default_lamyao_lag")]
    pub s_max: usize,
}

fn default_ratios() -> usize {
    30
}
fn default_rank_alpha() -> f64 {
    RANK_BAND_ALPHA
}
fn default_raw_alpha() -> f64 {
    RAW_BAND_ALPHA
}
fn default_lamyao_lag() -> usize {
    5
}

/// A JSON run configuration. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Must match the subcommand when present.
    #[serde(default)]
    pub command: Option<CommandName>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<CoeffSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mmatrix: Option<MMatrixBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectra: Option<SpectraBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<LimitsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tw: Option<TwBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analyze: Option<AnalyzeBlock>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads a config file; relative paths inside it are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = RunConfig::from_json(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                let joined = base.join(&*p);
                *p = joined.canonicalize().unwrap_or(joined);
            }
        };
        if let Some(CoeffSource::Csv(p)) = &mut self.coeffs {
            fix(p);
        }
        if let Some(a) = &mut self.analyze {
            fix(&mut a.returns);
        }
    }

    /// Applies flags and defaults and checks the blocks `command` needs.
    pub fn effective(mut self, command: CommandName, args: &RunArgs) -> Result<Self> {
        if let Some(c) = self.command {
            if c != command {
                return Err(Error::invalid(format!(
                    "config is for `{}`, not `{}`",
                    c.as_str(),
                    command.as_str()
                )));
            }
        }
        self.command = Some(command);
        if args.seed.is_some() {
            self.seed = args.seed;
        }
        if args.out.is_some() {
            self.out = args.out.clone();
        }
        if self.out.is_none() {
            self.out = Some(std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from));
        }
        if args.threads.is_some() {
            self.threads = args.threads;
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads must be at least 1"));
        }
        let seed = self.seed.get_or_insert(0);
        let seed = *seed;
        let need = |present: bool, block: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::invalid(format!("`{}` needs a `{block}` block", command.as_str())))
            }
        };
        match command {
            CommandName::Simulate | CommandName::Spectra => {
                need(self.field.is_some(), "field")?;
                if let Some(f) = &mut self.field {
                    f.resolve_p()?;
                    f.noise.validate()?;
                }
                if command == CommandName::Spectra && self.spectra.is_none() {
                    self.spectra = Some(SpectraBlock::default());
                }
            }
            CommandName::Mmatrix => {
                need(self.coeffs.is_some(), "coeffs")?;
                if self.mmatrix.is_none() {
                    self.mmatrix = Some(MMatrixBlock {
                        s_max: 0,
                        sum_squares: None,
                    });
                }
            }
            CommandName::Ensemble => {
                need(self.ensemble.is_some(), "ensemble")?;
                let e = self.ensemble.as_mut().expect("checked");
                if let Some(r) = args.replicates {
                    e.replicates = r;
                }
                e.base_seed = seed;
                e.validate()?;
            }
            CommandName::Limits => need(self.limits.is_some(), "limits")?,
            CommandName::Tw => {
                if self.tw.is_none() {
                    self.tw = Some(TwBlock::default());
                }
            }
            CommandName::Analyze => {
                need(self.analyze.is_some(), "analyze")?;
                let a = self.analyze.as_mut().expect("checked");
                if args.hill_k.is_some() {
                    a.hill_k = args.hill_k;
                }
            }
        }
        Ok(self)
    }

    fn out_dir(&self) -> &Path {
        self.out.as_deref().unwrap_or(Path::new(DEFAULT_OUT))
    }
}

/// Failure of a CLI run, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Config(Error),
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Runtime(e) => write!(f, "runtime error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Loads, validates and runs one subcommand; returns the output directory.
pub fn run(command: CommandName, args: &RunArgs) -> std::result::Result<PathBuf, CliError> {
    let cfg = match &args.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
    .and_then(|c| c.effective(command, args))
    .map_err(CliError::Config)?;
    // inputs that can only be checked by reading them count as configuration
    let coeffs = match &cfg.coeffs {
        Some(src) => Some(src.load().map_err(CliError::Config)?),
        None => None,
    };
    let out = cfg.out_dir().to_path_buf();
    let work = || -> Result<()> {
        fs::create_dir_all(&out)?;
        let mut f = BufWriter::new(File::create(out.join(RUN_CONFIG_FILE))?);
        writeln!(f, "{}", cfg.to_json()?)?;
        f.flush()?;
        execute(&cfg, coeffs.unwrap_or_else(CoeffMatrix::identity), &out)
    };
    let result = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Config(Error::invalid(e.to_string())))?
            .install(work),
        None => work(),
    };
    result.map_err(CliError::Runtime)?;
    Ok(out)
}

/// Parses `argv`, runs and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (command, args) = cli.command.split();
    match run(command, &args) {
        Ok(out) => {
            eprintln!("wrote {}", out.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("heavyspec {}: {e}", command.as_str());
            e.exit_code()
        }
    }
}

fn execute(cfg: &RunConfig, coeffs: CoeffMatrix, out: &Path) -> Result<()> {
    let seed = cfg.seed.unwrap_or(0);
    match cfg.command.expect("effective config has a command") {
        CommandName::Simulate => cmd_simulate(cfg.field.as_ref().expect("checked"), coeffs, seed, out),
        CommandName::Mmatrix => cmd_mmatrix(cfg.mmatrix.as_ref().expect("checked"), &coeffs, out),
        CommandName::Spectra => cmd_spectra(
            cfg.field.as_ref().expect("checked"),
            cfg.spectra.as_ref().expect("checked"),
            coeffs,
            seed,
            out,
        ),
        CommandName::Ensemble => cmd_ensemble(cfg.ensemble.as_ref().expect("checked"), out),
        CommandName::Limits => cmd_limits(cfg.limits.as_ref().expect("checked"), out),
        CommandName::Tw => cmd_tw(cfg.tw.as_ref().expect("checked"), out),
        CommandName::Analyze => cmd_analyze(cfg.analyze.as_ref().expect("checked"), out),
    }
}

/// Fixed full-precision number format used in every CSV.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?)))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn field_spec(field: &FieldBlock, coeffs: CoeffMatrix, seed: u64) -> FieldSpec {
    FieldSpec {
        coeffs,
        noise: field.noise,
        p: field.p.expect("resolved"),
        n: field.n,
        s_max: field.s_max,
        seed,
        cell_cap: field.cell_cap,
    }
}

/// Writes `noise.csv` (the core `Z`) and `x_<s>.csv` for `s = 0..=s_max`.
pub fn cmd_simulate(field: &FieldBlock, coeffs: CoeffMatrix, seed: u64, out: &Path) -> Result<()> {
    let real = simulate_field(&field_spec(field, coeffs, seed))?;
    real.noise.write_csv(BufWriter::new(File::create(out.join("noise.csv"))?))?;
    for panel in &real.panels {
        panel.write_csv(BufWriter::new(File::create(out.join(format!("x_{}.csv", panel.lag())))?))?;
    }
    Ok(())
}

/// Writes `mmatrix.csv` with `lag,j,singular_value` rows and, when asked,
/// `sum_squares.csv` with `j,v`.
pub fn cmd_mmatrix(block: &MMatrixBlock, coeffs: &CoeffMatrix, out: &Path) -> Result<()> {
    let mut w = csv_writer(&out.join("mmatrix.csv"))?;
    w.write_record(["lag", "j", "singular_value"])?;
    for s in 0..=block.s_max {
        let m = m_matrix(coeffs, s)?;
        for (j, v) in m.singular_values.iter().enumerate() {
            w.write_record([s.to_string(), (j + 1).to_string(), fmt_num(*v)])?;
        }
    }
    w.flush()?;
    if let Some([s0, s1]) = block.sum_squares {
        let mut w = csv_writer(&out.join("sum_squares.csv"))?;
        w.write_record(["j", "v"])?;
        for (j, v) in sum_squares_m(coeffs, s0, s1)?.iter().enumerate() {
            w.write_record([(j + 1).to_string(), fmt_num(*v)])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Writes `spectra.csv` (`lag,j,value,normalized`) and `approx.csv`
/// (`kind,lag,j,value,approx,error`) for one realization.
pub fn cmd_spectra(field: &FieldBlock, block: &SpectraBlock, coeffs: CoeffMatrix, seed: u64, out: &Path) -> Result<()> {
    let spec = field_spec(field, coeffs.clone(), seed);
    let real = simulate_field(&spec)?;
    let a2 = match field.noise.tail_index() {
        Some(_) => Some(NormalizingSeq::new(field.noise)?.a_np_squared(spec.n, spec.p)?),
        None => None,
    };
    let mut w = csv_writer(&out.join("spectra.csv"))?;
    w.write_record(["lag", "j", "value", "normalized"])?;
    for s in 0..=field.s_max {
        let sp = autocov_spectrum(&real.panels[0].matrix, &real.panels[s].matrix, s)?;
        for (j, v) in sp.values.iter().enumerate() {
            let norm = a2.map_or_else(String::new, |a| fmt_num(v / a));
            w.write_record([s.to_string(), (j + 1).to_string(), fmt_num(*v), norm])?;
        }
    }
    w.flush()?;
    let Some(a2) = a2 else {
        return Ok(());
    };
    let mut w = csv_writer(&out.join("approx.csv"))?;
    w.write_record(["kind", "lag", "j", "value", "approx", "error"])?;
    for &kind in &block.kinds {
        for s in 0..=field.s_max {
            let (values, approx, power) = crate::mc::spectrum_and_approx(&real, &coeffs, kind, s, block.m)?;
            let err = sup_error(&values, &approx, a2.powi(power), 1)?;
            for (j, ((v, a), e)) in values.iter().zip(&approx).zip(&err.errors).enumerate() {
                w.write_record([
                    kind.name().to_string(),
                    s.to_string(),
                    (j + 1).to_string(),
                    fmt_num(*v),
                    fmt_num(*a),
                    fmt_num(*e),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `summary.json`, `values.csv`, `ecdf.csv`, `histogram.csv` and `kde.csv`.
pub fn cmd_ensemble(spec: &EnsembleSpec, out: &Path) -> Result<()> {
    let summary = run_ensemble(spec)?;
    fs::write(out.join("summary.json"), summary.to_json()? + "\n")?;
    summary.write_values_csv(BufWriter::new(File::create(out.join("values.csv"))?))?;
    let mut w = csv_writer(&out.join("ecdf.csv"))?;
    w.write_record(["x", "ecdf", "law"])?;
    for (x, f) in summary.ecdf().steps() {
        let law = match &spec.law {
            Some(l) => fmt_num(l.cdf(x)?),
            None => String::new(),
        };
        w.write_record([fmt_num(x), fmt_num(f), law])?;
    }
    w.flush()?;
    let h = &summary.histogram;
    let mut w = csv_writer(&out.join("histogram.csv"))?;
    w.write_record(["left", "right", "mass", "density"])?;
    for (i, m) in h.mass.iter().enumerate() {
        let width = h.edges[i + 1] - h.edges[i];
        w.write_record([fmt_num(h.edges[i]), fmt_num(h.edges[i + 1]), fmt_num(*m), fmt_num(m / width)])?;
    }
    w.flush()?;
    let bw = silverman_bandwidth(&summary.values);
    if bw > 0.0 {
        let (lo, hi) = (h.edges[0] - 3.0 * bw, h.edges[h.edges.len() - 1] + 3.0 * bw);
        let grid = Grid {
            from: lo,
            to: hi,
            points: 256,
        }
        .nodes()?;
        let dens = kde(&summary.values, &grid, bw)?;
        let mut w = csv_writer(&out.join("kde.csv"))?;
        w.write_record(["x", "density"])?;
        for (x, d) in grid.iter().zip(dens) {
            w.write_record([fmt_num(*x), fmt_num(d)])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Writes `law.csv` with `x,<cdf|density|probability>`.
pub fn cmd_limits(block: &LimitsBlock, out: &Path) -> Result<()> {
    let mut w = csv_writer(&out.join("law.csv"))?;
    w.write_record(["x", block.law.column_name()])?;
    for x in block.grid.nodes()? {
        let y = match block.law.column_name() {
            "cdf" => block.law.cdf(x)?,
            _ => block.law.eval(x)?,
        };
        w.write_record([fmt_num(x), fmt_num(y)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `tw.csv` with `s,cdf,density`; the density is a central difference
/// of the CDF.
pub fn cmd_tw(block: &TwBlock, out: &Path) -> Result<()> {
    let nodes = block.grid.nodes()?;
    let owned;
    let grid = match block.step {
        Some(h) => {
            let x_min = (nodes[0] - 0.1).min(DEFAULT_X_MIN);
            owned = solve_painleve(DEFAULT_X0, x_min, h)?;
            &owned
        }
        None => default_grid()?,
    };
    let dh = 1e-3;
    let f = |s: f64| grid.cdf_extended(s);
    let mut w = csv_writer(&out.join("tw.csv"))?;
    w.write_record(["s", "cdf", "density"])?;
    for s in nodes {
        if s - 2.0 * dh < grid.x_min {
            return Err(Error::OutOfRange {
                what: "s",
                value: s,
                range: format!("[{}, inf)", grid.x_min + 2.0 * dh),
            });
        }
        let d = (f(s - 2.0 * dh) - 8.0 * f(s - dh) + 8.0 * f(s + dh) - f(s + 2.0 * dh)) / (12.0 * dh);
        w.write_record([fmt_num(s), fmt_num(f(s)), fmt_num(d.max(0.0))])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct AnalyzeSummary {
    p: usize,
    n: usize,
    rejected: Vec<String>,
    hill_k: usize,
    /// Share of finite tail-index estimates below four.
    share_below_four: f64,
    rank_band_coverage: f64,
    raw_band_coverage: f64,
}

fn write_ratio_rows(path: &Path, rows: &[EigenRatioRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["i", "log_ratio", "q01", "q50", "q99"])?;
    for r in rows {
        w.write_record([
            r.i.to_string(),
            fmt_num(r.log_ratio),
            fmt_num(r.q01),
            fmt_num(r.q50),
            fmt_num(r.q99),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn coverage(rows: &[EigenRatioRow]) -> f64 {
    if rows.is_empty() {
        return f64::NAN;
    }
    rows.iter().filter(|r| r.inside_band()).count() as f64 / rows.len() as f64
}

/// Writes `tail_pairs.csv`, `eigen_ratios_rank.csv`, `eigen_ratios_raw.csv`,
/// `lamyao.csv` and `analyze.json`.
pub fn cmd_analyze(block: &AnalyzeBlock, out: &Path) -> Result<()> {
    let panel = ReturnsPanel::read_csv(File::open(&block.returns)?, block.layout)?;
    let k = block.hill_k.unwrap_or_else(|| default_hill_k(panel.n()));
    let pairs = tail_pairs(&panel, k)?;
    let mut w = csv_writer(&out.join("tail_pairs.csv"))?;
    w.write_record(["label", "k", "alpha_lower", "alpha_upper", "note"])?;
    let opt = |x: Option<f64>| x.map_or_else(String::new, fmt_num);
    for t in &pairs {
        w.write_record([
            t.label.clone(),
            t.k.to_string(),
            opt(t.alpha_lower),
            opt(t.alpha_upper),
            t.note.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    let estimates: Vec<f64> = pairs.iter().flat_map(|t| [t.alpha_lower, t.alpha_upper]).flatten().collect();
    let share_below_four = if estimates.is_empty() {
        f64::NAN
    } else {
        estimates.iter().filter(|&&a| a < 4.0).count() as f64 / estimates.len() as f64
    };
    let m = block.ratios.min(panel.p().saturating_sub(1));
    let ranked = rank_transform(&panel.data)?;
    let rank_rows = eigen_ratio_report(&ranked, m, block.rank_band_alpha)?;
    let raw_rows = eigen_ratio_report(&panel.data, m, block.raw_band_alpha)?;
    write_ratio_rows(&out.join("eigen_ratios_rank.csv"), &rank_rows)?;
    write_ratio_rows(&out.join("eigen_ratios_raw.csv"), &raw_rows)?;
    let panels = lagged_panels(&panel.data, block.s_max)?;
    let mut w = csv_writer(&out.join("lamyao.csv"))?;
    w.write_record(["s1", "largest_of_sum", "sum_of_largest", "ratio"])?;
    for r in lamyao_report(&panels)? {
        w.write_record([
            r.s1.to_string(),
            fmt_num(r.largest_of_sum),
            fmt_num(r.sum_of_largest),
            fmt_num(r.ratio),
        ])?;
    }
    w.flush()?;
    write_json(
        &out.join("analyze.json"),
        &AnalyzeSummary {
            p: panel.p(),
            n: panel.n(),
            rejected: panel.rejected.clone(),
            hill_k: k,
            share_below_four,
            rank_band_coverage: coverage(&rank_rows),
            raw_band_coverage: coverage(&raw_rows),
        },
    )
}

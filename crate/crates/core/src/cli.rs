//! Command-line front end: configuration, subcommand dispatch and emission
//! of CSV, JSON and SVG.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 solver failure
//! (including a failed self-test), 64 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::experiments::{
    default_n_eta_grid, fig2_g2_curves, fig2_sweep, implementation_scenario, log_grid, model_equivalence,
    solve_two_mode, EquivalenceReport, Method, SolverSettings, SweepRecord,
};
use crate::lindblad::CorrelationTrace;
use crate::model::{derive_rates, reduce_four_mode, FourModeParams, TwoModeParams};
use crate::par::Workers;
use crate::scattering::{transmission_closed_form, transmission_resonant, Scattering};
use crate::{Error, C64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("solver failure: {0}")]
    Solver(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_solver_failure() {
            CliError::Solver(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Unit of every rate in the model section.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    #[serde(rename = "MHz")]
    MHz,
    /// Rates already divided by `γ₂ = γ_2R + γ_2L`.
    #[default]
    #[serde(rename = "gamma2")]
    Gamma2,
}

/// Reduced-model section: either the four collective rates or the
/// asymmetry form `(gamma_2, x, y)` with mode 1 coupled symmetrically.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoModeSection {
    #[serde(rename = "gamma_1R", default, skip_serializing_if = "Option::is_none")]
    pub gamma_1r: Option<f64>,
    #[serde(rename = "gamma_1L", default, skip_serializing_if = "Option::is_none")]
    pub gamma_1l: Option<f64>,
    #[serde(rename = "gamma_2R", default, skip_serializing_if = "Option::is_none")]
    pub gamma_2r: Option<f64>,
    #[serde(rename = "gamma_2L", default, skip_serializing_if = "Option::is_none")]
    pub gamma_2l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    pub g: f64,
    #[serde(default)]
    pub kappa_0: f64,
    #[serde(rename = "Delta", default)]
    pub delta: f64,
}

impl TwoModeSection {
    /// The reference set (y = 0.01, x = 0.004, g = 4e-4) in the asymmetry form.
    pub fn fig2() -> Self {
        Self {
            gamma_2: Some(1.0),
            x: Some(0.004),
            y: Some(0.01),
            g: 4e-4,
            ..Self::default()
        }
    }

    pub fn params(&self) -> CliResult<TwoModeParams> {
        let rates = [self.gamma_1r, self.gamma_1l, self.gamma_2r, self.gamma_2l];
        let asym = [self.gamma_2, self.x, self.y];
        let p = match (rates.iter().any(Option::is_some), asym.iter().any(Option::is_some)) {
            (true, true) => {
                return Err(CliError::Config(
                    "two_mode: give either gamma_1R..gamma_2L or gamma_2, x, y, not both".into(),
                ))
            }
            (true, false) => {
                let names = ["gamma_1R", "gamma_1L", "gamma_2R", "gamma_2L"];
                let mut v = [0.0; 4];
                for (k, r) in rates.iter().enumerate() {
                    v[k] = r.ok_or_else(|| CliError::Config(format!("two_mode: missing field {}", names[k])))?;
                }
                TwoModeParams {
                    gamma_1r: v[0],
                    gamma_1l: v[1],
                    gamma_2r: v[2],
                    gamma_2l: v[3],
                    kappa_0: self.kappa_0,
                    g: self.g,
                    delta: self.delta,
                    eta: 0.0,
                }
            }
            (false, true) => {
                let names = ["gamma_2", "x", "y"];
                let mut v = [0.0; 3];
                for (k, r) in asym.iter().enumerate() {
                    v[k] = r.ok_or_else(|| CliError::Config(format!("two_mode: missing field {}", names[k])))?;
                }
                if !(v[1].abs() <= 1.0) {
                    return Err(CliError::Config(format!("two_mode: x = {} must lie in [-1, 1]", v[1])));
                }
                TwoModeParams::from_asymmetry(v[0], v[1], v[2], self.g)
                    .with_kappa_0(self.kappa_0)
                    .with_delta(self.delta)
            }
            (false, false) => {
                return Err(CliError::Config(
                    "two_mode: rates missing (gamma_1R..gamma_2L or gamma_2, x, y)".into(),
                ))
            }
        };
        p.validate().map_err(|e| CliError::Config(format!("two_mode: {e}")))?;
        Ok(p)
    }
}

/// Circuit-model section; the drive lives in [`Drive`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourModeSection {
    #[serde(rename = "lambda_1R")]
    pub lambda_1r: f64,
    #[serde(rename = "lambda_1L")]
    pub lambda_1l: f64,
    #[serde(rename = "lambda_2R")]
    pub lambda_2r: f64,
    #[serde(rename = "lambda_2L")]
    pub lambda_2l: f64,
    #[serde(rename = "kappa_R")]
    pub kappa_r: f64,
    #[serde(rename = "kappa_L")]
    pub kappa_l: f64,
    #[serde(default)]
    pub kappa_0: f64,
    pub g: f64,
    #[serde(rename = "Delta", default)]
    pub delta: f64,
}

impl FourModeSection {
    pub fn params(&self) -> CliResult<FourModeParams> {
        let p = FourModeParams {
            lambda_1r: self.lambda_1r,
            lambda_1l: self.lambda_1l,
            lambda_2r: self.lambda_2r,
            lambda_2l: self.lambda_2l,
            kappa_r: self.kappa_r,
            kappa_l: self.kappa_l,
            kappa_0: self.kappa_0,
            g: self.g,
            delta: self.delta,
            eta: 0.0,
        };
        p.validate().map_err(|e| CliError::Config(format!("four_mode: {e}")))?;
        Ok(p)
    }
}

impl From<&FourModeParams> for FourModeSection {
    fn from(p: &FourModeParams) -> Self {
        Self {
            lambda_1r: p.lambda_1r,
            lambda_1l: p.lambda_1l,
            lambda_2r: p.lambda_2r,
            lambda_2l: p.lambda_2l,
            kappa_r: p.kappa_r,
            kappa_l: p.kappa_l,
            kappa_0: p.kappa_0,
            g: p.g,
            delta: p.delta,
        }
    }
}

/// Drive strength, as `N_η` or as `η` in the config units (`η²` is a rate).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    #[serde(rename = "N_eta", default, skip_serializing_if = "Option::is_none")]
    pub n_eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

/// Grids of the individual studies; command-line flags override them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSettings {
    #[serde(rename = "sweep_N_eta")]
    pub sweep_n_eta: Vec<f64>,
    #[serde(rename = "curves_N_eta")]
    pub curves_n_eta: Vec<f64>,
    pub markov_scales: Vec<f64>,
    #[serde(rename = "compare_N_eta")]
    pub compare_n_eta: f64,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            sweep_n_eta: default_n_eta_grid(),
            curves_n_eta: vec![0.01, 1.0, 10.0],
            markov_scales: vec![1.0, 4.0],
            compare_n_eta: 0.01,
        }
    }
}

/// One input document: units, exactly one model section, drive, solver and
/// experiment settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub units: Units,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_mode: Option<TwoModeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub four_mode: Option<FourModeSection>,
    #[serde(default)]
    pub drive: Drive,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub experiment: ExperimentSettings,
}

impl Default for RunConfig {
    /// The reference parameter set.
    fn default() -> Self {
        Self {
            units: Units::Gamma2,
            two_mode: Some(TwoModeSection::fig2()),
            four_mode: None,
            drive: Drive::default(),
            solver: SolverSettings::default(),
            experiment: ExperimentSettings::default(),
        }
    }
}

/// The model a configuration describes, with rates in units of `γ₂`.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    TwoMode(TwoModeParams),
    FourMode(FourModeParams),
}

/// Parse and validate a JSON configuration; every error names the
/// offending field, and syntax errors their line and column.
pub fn parse_config(document: &str) -> CliResult<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path.is_empty() || path == "." {
            CliError::Config(inner.to_string())
        } else {
            CliError::Config(format!("at `{path}`: {inner}"))
        }
    })?;
    config.validate()?;
    Ok(config)
}

/// Serialize a configuration; [`parse_config`] reads it back unchanged.
pub fn config_to_json(config: &RunConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serializes")
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        match (&self.two_mode, &self.four_mode) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "exactly one of two_mode and four_mode may be given".into(),
                ))
            }
            (None, None) => return Err(CliError::Config("a two_mode or four_mode section is required".into())),
            _ => {}
        }
        if self.drive.n_eta.is_some() && self.drive.eta.is_some() {
            return Err(CliError::Config("drive: give N_eta or eta, not both".into()));
        }
        for (name, v) in [("drive.N_eta", self.drive.n_eta), ("drive.eta", self.drive.eta)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CliError::Config(format!("{name} = {v} must be nonnegative")));
                }
            }
        }
        self.solver
            .validate()
            .map_err(|e| CliError::Config(format!("solver: {e}")))?;
        let e = &self.experiment;
        for (name, grid) in [
            ("experiment.sweep_N_eta", &e.sweep_n_eta),
            ("experiment.curves_N_eta", &e.curves_n_eta),
            ("experiment.markov_scales", &e.markov_scales),
        ] {
            if grid.is_empty() || grid.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(CliError::Config(format!("{name} must be a nonempty list of positive numbers")));
            }
        }
        if !(e.compare_n_eta.is_finite() && e.compare_n_eta > 0.0) {
            return Err(CliError::Config("experiment.compare_N_eta must be positive".into()));
        }
        self.model().map(|_| ())
    }

    /// The model in units of `γ₂` (of the reduced model for a circuit).
    pub fn model(&self) -> CliResult<Model> {
        if let Some(s) = &self.two_mode {
            let p = s.params()?;
            Ok(Model::TwoMode(match self.units {
                Units::Gamma2 => p,
                Units::MHz => p.normalized()?.0,
            }))
        } else if let Some(s) = &self.four_mode {
            let p = s.params()?;
            Ok(Model::FourMode(match self.units {
                Units::Gamma2 => p,
                Units::MHz => {
                    let unit = reduce_four_mode(&p)?.normalized()?.1;
                    p.rescaled(unit)
                }
            }))
        } else {
            Err(CliError::Config("a two_mode or four_mode section is required".into()))
        }
    }

    /// The reduced model (the circuit's elimination if needed) in units of
    /// `γ₂`, with the configured drive; `N_η = default_n_eta` if none is
    /// configured and `default_n_eta` is given, else undriven.
    pub fn reduced(&self, default_n_eta: Option<f64>) -> CliResult<TwoModeParams> {
        let raw = match (&self.two_mode, &self.four_mode) {
            (Some(s), _) => s.params()?,
            (None, Some(s)) => reduce_four_mode(&s.params()?)?,
            (None, None) => return Err(CliError::Config("a two_mode or four_mode section is required".into())),
        };
        let driven = raw.with_eta(self.drive.eta.unwrap_or(0.0));
        let p = match self.units {
            Units::Gamma2 => driven,
            Units::MHz => driven.normalized()?.0,
        };
        match self.drive.n_eta.or(if self.drive.eta.is_none() { default_n_eta } else { None }) {
            Some(n) => Ok(p.with_n_eta(n)?),
            None => Ok(p),
        }
    }

    pub fn four_mode(&self) -> CliResult<FourModeParams> {
        match self.model()? {
            Model::FourMode(p) => Ok(p),
            Model::TwoMode(_) => Err(CliError::Config(
                "compare-models needs a four_mode section".into(),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Parser)]
#[command(name = "blockade", version, about = "Photon blockade from a nearly dark collective mode")]
struct Cli {
    /// JSON run configuration (defaults to the reference set).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for sweeps (also BLOCKADE_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derived rates of the reduced model as JSON.
    DeriveRates,
    /// Transmission amplitude by every method.
    Transmission,
    /// g2(τ) at the configured drive; delays in units of 1/Γ₋.
    G2 {
        #[arg(long)]
        tau_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// g2(0), n_out/Γ₋ and Γ₋τ̃ across drive strengths.
    Sweep {
        /// `lo:hi:n` (log-spaced) or a comma-separated list of N_eta.
        #[arg(long)]
        grid: Option<String>,
    },
    /// g2(τ) traces for several drive strengths plus the scattering trace.
    G2Curves {
        /// Comma-separated N_eta values.
        #[arg(long)]
        n_eta: Option<String>,
        #[arg(long)]
        tau_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Circuit model against its adiabatic elimination.
    CompareModels {
        /// Comma-separated Markov scales.
        #[arg(long)]
        scales: Option<String>,
    },
    /// Predictions for the superconducting-circuit parameters.
    Scenario,
    /// Invariant suite.
    Selftest,
}

/// Parse a drive grid: `lo:hi:n` for log spacing or `a,b,c`.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = |what: &str| CliError::Usage(format!("bad grid `{spec}`: {what}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad("lower bound"))?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad("upper bound"))?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad("point count"))?;
        return log_grid(lo, hi, n).map_err(|e| bad(&e.to_string()));
    }
    if parts.len() != 1 {
        return Err(bad("expected lo:hi:n or a comma-separated list"));
    }
    let values = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad(s)))
        .collect::<CliResult<Vec<_>>>()?;
    if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(bad("values must be positive"));
    }
    Ok(values)
}

/// Records accepted by [`emit`].
#[derive(Clone, Copy, Debug)]
pub enum Records<'a> {
    Traces(&'a [CorrelationTrace]),
    Sweep(&'a [SweepRecord]),
}

/// Scientific notation with 17 significant digits; parses back bit-exactly.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> CliResult<String> {
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

pub fn trace_csv(trace: &CorrelationTrace) -> CliResult<String> {
    let mut w = csv_writer();
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["tau", "g2"]).map_err(io)?;
    for (t, g) in trace.tau_grid.iter().zip(&trace.g2_values) {
        w.write_record([format_number(*t), format_number(*g)]).map_err(io)?;
    }
    finish_csv(w)
}

/// Sweep records sorted by `N_eta` (the scattering row, at `N_eta = 0`,
/// first).
pub fn sorted_sweep(records: &[SweepRecord]) -> Vec<SweepRecord> {
    let mut out = records.to_vec();
    out.sort_by(|a, b| a.n_eta.total_cmp(&b.n_eta).then(b.method.cmp(&a.method)));
    out
}

pub fn sweep_csv(records: &[SweepRecord]) -> CliResult<String> {
    let mut w = csv_writer();
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["N_eta", "g2_zero", "n_out_norm", "tau_tilde_norm", "method"])
        .map_err(io)?;
    for r in sorted_sweep(records) {
        w.write_record([
            format_number(r.n_eta),
            format_number(r.g2_zero),
            format_number(r.n_out_over_gamma_minus),
            r.tau_tilde_times_gamma_minus.map(format_number).unwrap_or_default(),
            r.method.tag().to_string(),
        ])
        .map_err(io)?;
    }
    finish_csv(w)
}

pub fn equivalence_csv(report: &EquivalenceReport) -> CliResult<String> {
    let mut w = csv_writer();
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record([
        "scale",
        "kappa_over_lambda",
        "g2_four_mode",
        "g2_reduced",
        "abs_t_four_mode",
        "abs_t_reduced",
        "n_out_four_mode",
        "n_out_reduced",
        "g2_discrepancy",
        "abs_t_discrepancy",
        "n_out_discrepancy",
        "converged",
    ])
    .map_err(io)?;
    for p in &report.points {
        let mut row: Vec<String> = [
            p.scale,
            p.kappa_over_lambda,
            p.four_mode.g2_zero,
            p.reduced.g2_zero,
            p.four_mode.abs_t,
            p.reduced.abs_t,
            p.four_mode.n_out,
            p.reduced.n_out,
            p.g2_discrepancy,
            p.abs_t_discrepancy,
            p.n_out_discrepancy,
        ]
        .iter()
        .map(|v| format_number(*v))
        .collect();
        row.push(p.converged.to_string());
        w.write_record(&row).map_err(io)?;
    }
    finish_csv(w)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Line plot with a log `y` axis (and optionally log `x`); nonpositive
/// values are skipped on log axes.
pub fn svg_plot(title: &str, x_label: &str, x_log: bool, series: &[(String, Vec<(f64, f64)>)]) -> CliResult<String> {
    let keep = |x: f64, y: f64| y > 0.0 && y.is_finite() && x.is_finite() && (!x_log || x > 0.0);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, s)| s.iter().copied())
        .filter(|&(x, y)| keep(x, y))
        .collect();
    if pts.is_empty() {
        return Err(CliError::Usage("nothing to plot".into()));
    }
    let fx = |x: f64| if x_log { x.log10() } else { x };
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(fx(x));
        x1 = x1.max(fx(x));
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let (w, h, m) = (640.0, 420.0, 60.0);
    let sx = |x: f64| m + (fx(x) - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y.log10() - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, w / 2.0);
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    for e in (y0 as i32)..=(y1 as i32) {
        let y = h - m - (e as f64 - y0) / (y1 - y0) * (h - 2.0 * m);
        let _ = writeln!(s, r##"<line x1="{m}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, w - m);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"#, m - 4.0, y + 4.0);
    }
    for k in 0..=4 {
        let v = x0 + (x1 - x0) * k as f64 / 4.0;
        let x = m + (w - 2.0 * m) * k as f64 / 4.0;
        let text = if x_log { format!("1e{v:.1}") } else { format!("{v:.3}") };
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{text}</text>"#, h - m + 16.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, w / 2.0, h - 16.0);
    for (k, (label, data)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let line: Vec<String> = data
            .iter()
            .filter(|&&(x, y)| keep(x, y))
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, line.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{label}</text>"#,
            m + 8.0,
            m + 16.0 + 14.0 * k as f64
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Render records in `format`. Several traces in CSV become blocks headed
/// by `# <label>` lines; use [`emit`] with a path for one file per trace.
pub fn render(records: Records<'_>, format: Format) -> CliResult<String> {
    match records {
        Records::Traces(t) if t.is_empty() => return Err(CliError::Usage("no records to emit".into())),
        Records::Sweep(r) if r.is_empty() => return Err(CliError::Usage("no records to emit".into())),
        _ => {}
    }
    let json = |v: serde_json::Result<String>| v.map(|s| s + "\n").map_err(|e| CliError::Io(e.to_string()));
    match (records, format) {
        (Records::Traces(t), Format::Csv) if t.len() == 1 => trace_csv(&t[0]),
        (Records::Traces(t), Format::Csv) => {
            let mut out = String::new();
            for (k, trace) in t.iter().enumerate() {
                if k > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "# {}", trace.label);
                out.push_str(&trace_csv(trace)?);
            }
            Ok(out)
        }
        (Records::Traces(t), Format::Json) => json(serde_json::to_string_pretty(t)),
        (Records::Traces(t), Format::Svg) => {
            let series: Vec<_> = t
                .iter()
                .map(|tr| {
                    let label = if tr.label.is_empty() { "g2".to_string() } else { tr.label.clone() };
                    (label, tr.tau_grid.iter().copied().zip(tr.g2_values.iter().copied()).collect())
                })
                .collect();
            svg_plot("g2(tau)", "Gamma_minus tau", false, &series)
        }
        (Records::Sweep(r), Format::Csv) => sweep_csv(r),
        (Records::Sweep(r), Format::Json) => json(serde_json::to_string_pretty(&sorted_sweep(r))),
        (Records::Sweep(r), Format::Svg) => {
            let me: Vec<_> = sorted_sweep(r)
                .into_iter()
                .filter(|r| r.method == Method::MasterEquation)
                .collect();
            let series = vec![
                ("g2(0)".to_string(), me.iter().map(|r| (r.n_eta, r.g2_zero)).collect()),
                (
                    "n_out/Gamma_minus".to_string(),
                    me.iter().map(|r| (r.n_eta, r.n_out_over_gamma_minus)).collect(),
                ),
                (
                    "Gamma_minus tau~".to_string(),
                    me.iter()
                        .filter_map(|r| r.tau_tilde_times_gamma_minus.map(|t| (r.n_eta, t)))
                        .collect(),
                ),
            ];
            svg_plot("drive sweep", "N_eta", true, &series)
        }
    }
}

fn write_text(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("cannot write stdout: {e}")))
        }
    }
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Write records to `path` (stdout if `None`). Several traces in CSV go to
/// one file each, `<stem>.<label>.csv` next to `path`.
pub fn emit(records: Records<'_>, format: Format, path: Option<&Path>) -> CliResult<()> {
    if let (Records::Traces(t), Format::Csv, Some(p)) = (records, format, path) {
        if t.len() > 1 {
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("g2");
            let dir = p.parent().unwrap_or_else(|| Path::new(""));
            for trace in t {
                let file = dir.join(format!("{stem}.{}.csv", sanitize(&trace.label)));
                write_text(&trace_csv(trace)?, Some(&file))?;
            }
            return Ok(());
        }
    }
    write_text(&render(records, format)?, path)
}

fn emit_json<T: Serialize>(value: &T, format: Format, path: Option<&Path>, what: &str) -> CliResult<()> {
    if format != Format::Json {
        return Err(CliError::Usage(format!("{what} is only available as json")));
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    write_text(&text, path)
}

#[derive(Serialize)]
struct Complex {
    re: f64,
    im: f64,
    abs: f64,
}

impl From<C64> for Complex {
    fn from(z: C64) -> Self {
        Self {
            re: z.re,
            im: z.im,
            abs: z.norm(),
        }
    }
}

#[derive(Serialize)]
struct TransmissionReport {
    #[serde(rename = "N_eta")]
    n_eta: Option<f64>,
    master_equation: Complex,
    scattering: Complex,
    closed_form: Complex,
    resonant_form: f64,
    truncation: usize,
    converged: bool,
}

fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            parse_config(&text)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let config = load_config(cli.config.as_deref())?;
    let workers = Workers(cli.workers.unwrap_or(0));
    let out = cli.out.as_deref();
    let settings = &config.solver;
    match cli.command {
        Command::DeriveRates => {
            let p = config.reduced(None)?;
            emit_json(&derive_rates(&p)?, cli.format.unwrap_or(Format::Json), out, "derive-rates")
        }
        Command::Transmission => {
            let p = config.reduced(Some(1.0))?;
            let sol = solve_two_mode(&p, settings)?;
            let report = TransmissionReport {
                n_eta: sol.rates.n_eta,
                master_equation: sol.observables.transmission.into(),
                scattering: Scattering::new(&p)?.transmission().into(),
                closed_form: transmission_closed_form(&p)?.into(),
                resonant_form: transmission_resonant(&p)?,
                truncation: sol.convergence.dim,
                converged: sol.convergence.converged,
            };
            emit_json(&report, cli.format.unwrap_or(Format::Json), out, "transmission")
        }
        Command::G2 { tau_max, points } => {
            let p = config.reduced(Some(1.0))?;
            let grid = crate::lindblad::default_tau_grid(
                tau_max.unwrap_or(settings.tau_max),
                points.unwrap_or(settings.tau_points),
            )?;
            let sol = solve_two_mode(&p, settings)?;
            let mut trace = sol.g2_trace(&grid)?;
            trace.label = "master-equation".into();
            emit(Records::Traces(&[trace]), cli.format.unwrap_or(Format::Csv), out)
        }
        Command::Sweep { grid } => {
            let grid = match grid {
                Some(g) => parse_grid(&g)?,
                None => config.experiment.sweep_n_eta.clone(),
            };
            let p = config.reduced(None)?;
            let records = fig2_sweep(&p, &grid, settings, workers)?;
            emit(Records::Sweep(&records), cli.format.unwrap_or(Format::Csv), out)
        }
        Command::G2Curves { n_eta, tau_max, points } => {
            let list = match n_eta {
                Some(g) => parse_grid(&g)?,
                None => config.experiment.curves_n_eta.clone(),
            };
            let grid = crate::lindblad::default_tau_grid(
                tau_max.unwrap_or(settings.tau_max),
                points.unwrap_or(settings.tau_points),
            )?;
            let p = config.reduced(None)?;
            let traces = fig2_g2_curves(&p, &list, &grid, settings, workers)?;
            emit(Records::Traces(&traces), cli.format.unwrap_or(Format::Csv), out)
        }
        Command::CompareModels { scales } => {
            let scales = match scales {
                Some(s) => parse_grid(&s)?,
                None => config.experiment.markov_scales.clone(),
            };
            let p4 = if cli.config.is_some() {
                config.four_mode()?
            } else {
                FourModeParams::implementation()
            };
            let report = model_equivalence(&p4, &scales, config.experiment.compare_n_eta, settings, workers)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Csv => write_text(&equivalence_csv(&report)?, out),
                f => emit_json(&report, f, out, "compare-models"),
            }
        }
        Command::Scenario => {
            let report = implementation_scenario(settings)?;
            emit_json(&report, cli.format.unwrap_or(Format::Json), out, "scenario")
        }
        Command::Selftest => {
            let report = crate::selftest::run(settings, workers)?;
            match cli.format {
                Some(f) => emit_json(&report, f, out, "selftest")?,
                None => {
                    let mut text = String::new();
                    for c in &report.checks {
                        let verdict = if c.passed { "PASS" } else { "FAIL" };
                        let _ = writeln!(text, "{verdict} {}: {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
                    }
                    write_text(&text, out)?;
                }
            }
            if report.all_passed() {
                Ok(())
            } else {
                Err(CliError::Solver(Error::Unphysical("self-test failed".into())))
            }
        }
    }
}

/// Parse `argv`, run the subcommand and return the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("blockade: {e}");
            e.exit_code()
        }
    }
}

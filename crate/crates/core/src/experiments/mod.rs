//! Named, reproducible experiments.
//!
//! Each experiment reads a flat parameter map (defaults below, overridable
//! from a `key = value` file), evaluates its decay or scaling claims, and
//! produces a [`Report`]: data CSVs, log-log SVG plots with the predicted
//! slope as a guide line, and a `summary.txt` of `key=value` lines with one
//! `claim=` line per checked statement.

pub mod acceptance;
pub mod config;
pub mod svg;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diffusion::{evaluate_diffusion_spectral, g_sigma_spectral, pointwise_symbol_residual, ExpansionResidualProbe};
use crate::error::{Error, Result};
use crate::grid::{make_grid, to_physical, to_spectral, Field, GridSpec, SpectralField};
use crate::norms::{appendix_integral, fit_decay_exponent, fit_log_log, log_spaced, lq_norm, predicted_exponent, RateQuery};
use crate::par;
use crate::propagator::{propagate_linear_spectral, CutoffProfile};
use crate::semilinear::{lifespan_sweep, profile_deviation, run_semilinear, run_semilinear_observed, SemilinearConfig, TestFunctional};

pub use config::Params;

/// Process exit codes used by the command-line front end.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CRITERION_FAILED: i32 = 1;
    /// Unknown experiment, unknown parameter, malformed config or flags.
    pub const USAGE: i32 = 2;
    /// Numerical or hypothesis failure while running.
    pub const RUNTIME: i32 = 3;
    /// A parameter was given without a value.
    pub const MISSING_KEY: i32 = 4;
    /// Output directory or file could not be written.
    pub const OUTPUT: i32 = 5;
}

/// Exit code for an error surfaced by [`run_experiment`].
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::UnknownExperiment(_) | Error::UnknownKey { .. } | Error::Format(_) => exit::USAGE,
        Error::MissingKey(_) => exit::MISSING_KEY,
        Error::Output { .. } | Error::Io(_) => exit::OUTPUT,
        _ => exit::RUNTIME,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentName {
    LinearDecay,
    DiffusionGap,
    Expansion,
    Profile,
    SemilinearDecay,
    Lifespan,
    TestFunctional,
    AppendixLemma,
}

/// A parameter an experiment accepts, with its default.
#[derive(Clone, Copy, Debug)]
pub struct KeySpec {
    pub key: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(key: &'static str, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec { key, default, help }
}

const DIM: KeySpec = key("dim", "1", "space dimension (1, 2 or 3)");
const SIGMA: KeySpec = key("sigma", "1", "order of the fractional Laplacian, >= 1");
const DATA: KeySpec = key("data", "gaussian", "initial data: gaussian or random (seeded bumps)");
const SAMPLES: KeySpec = key("samples", "24", "log-spaced sample times in the fit window");

const LINEAR_DECAY_KEYS: &[KeySpec] = &[
    DIM,
    key("points", "1024", "grid points per axis (power of two)"),
    key("length", "400", "box side length"),
    SIGMA,
    DATA,
    key("m", "1", "data space L^m, m in [1,2)"),
    key("a", "0", "order of |D|^a"),
    key("j", "0", "time derivative order (0 or 1)"),
    key("t_min", "5", "fit window start"),
    key("t_max", "200", "fit window end"),
    SAMPLES,
    key("tol", "0.1", "absolute slope tolerance"),
];

const DIFFUSION_GAP_KEYS: &[KeySpec] = &[
    DIM,
    key("points", "1024", "grid points per axis (power of two)"),
    key("length", "400", "box side length"),
    SIGMA,
    DATA,
    key("p", "1", "data exponent of the L^p - L^q estimate"),
    key("q", "2", "target exponent (inf allowed)"),
    key("a", "0", "order of |D|^a"),
    key("j", "0", "time derivative order (0 or 1)"),
    key("t_min", "5", "fit window start"),
    key("t_max", "200", "fit window end"),
    SAMPLES,
    key("tol", "0.1", "absolute slope tolerance"),
    key("gain", "0.8", "minimum slope gain of the gap over the low-frequency solution"),
];

const EXPANSION_KEYS: &[KeySpec] = &[
    DIM,
    key("points", "1024", "grid points per axis (power of two)"),
    key("length", "400", "box side length"),
    SIGMA,
    DATA,
    key("gamma", "0", "moment order of the expansion"),
    key("t_min", "20", "window start"),
    key("t_max", "200", "window end"),
    SAMPLES,
    key("xi", "0.5,0.4,0.2,0.1,0.05", "frequencies for the pointwise symbol residual"),
    key("growth", "2", "allowed growth of residual/|xi|^gamma toward xi = 0"),
];

const PROFILE_KEYS: &[KeySpec] = &[
    DIM,
    key("points", "1024", "grid points per axis (power of two)"),
    key("length", "400", "box side length"),
    SIGMA,
    DATA,
    key("t_min", "5", "fit window start"),
    key("t_max", "200", "fit window end"),
    SAMPLES,
    key("band_t_min", "10", "start of the two-sided band window"),
    key("tol", "0.1", "absolute slope tolerance"),
    key("band", "3", "bound on max/min of the rescaled L2 norm"),
];

const SEMILINEAR_KEYS: &[KeySpec] = &[
    DIM,
    key("points", "1024", "grid points per axis (power of two)"),
    key("length", "400", "box side length"),
    SIGMA,
    DATA,
    key("p", "4", "power of the nonlinearity"),
    key("m", "1", "data space L^m used for the predicted rates"),
    key("epsilon", "0.01", "data scale"),
    key("dt", "0.05", "base time step"),
    key("t_end", "200", "final time"),
    key("threshold", "1e6", "blow-up threshold on the sup norm"),
    key("t_min", "5", "fit window start"),
    key("samples", "48", "log-spaced samples on [1, t_end]"),
    key("tol", "0.12", "absolute slope tolerance"),
    key("tail", "1e-6", "bound on the tail of the cumulative nonlinear mass"),
    key("profile_t_min", "50", "start of the nonlinear profile window"),
];

const LIFESPAN_KEYS: &[KeySpec] = &[
    DIM,
    key("points", "1024", "grid points per axis (power of two)"),
    key("length", "400", "box side length"),
    SIGMA,
    DATA,
    key("p", "2", "power of the nonlinearity, 1 < p < 1 + 2 sigma / dim"),
    key("epsilons", "0.5,0.25,0.125,0.0625", "data scales"),
    key("dt", "0.05", "base time step"),
    key("t_cap", "2000", "hard cap; runs reaching it are censored"),
    key("thresholds", "1e4,1e6,1e8", "blow-up thresholds for the sensitivity check"),
    key("threshold", "1e6", "reference threshold"),
    key("tol", "0.25", "relative tolerance on the fitted exponent"),
    key("shift_tol", "0.05", "relative tolerance on the threshold shift"),
];

const TEST_FUNCTIONAL_KEYS: &[KeySpec] = &[
    DIM,
    key("points", "2048", "grid points per axis (power of two)"),
    key("length", "800", "box side length"),
    SIGMA,
    DATA,
    key("p", "2", "power of the nonlinearity, 1 < p < 1 + 2 sigma / dim"),
    key("epsilon", "0.01", "data scale"),
    key("radii", "4,8,16,32", "radii R"),
    key("dt", "0.05", "base time step"),
    key("tol", "0.15", "slope tolerance"),
];

const APPENDIX_KEYS: &[KeySpec] = &[
    key("triples", "1,2,0;2,2,1;3,4,2", "(n, alpha, beta) groups"),
    key("c", "1", "rate constant"),
    key("t_min", "10", "fit window start"),
    key("t_max", "1e4", "fit window end"),
    SAMPLES,
    key("tol", "0.02", "absolute slope tolerance"),
];

impl ExperimentName {
    pub const ALL: [ExperimentName; 8] = [
        Self::LinearDecay,
        Self::DiffusionGap,
        Self::Expansion,
        Self::Profile,
        Self::SemilinearDecay,
        Self::Lifespan,
        Self::TestFunctional,
        Self::AppendixLemma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LinearDecay => "linear-decay",
            Self::DiffusionGap => "diffusion-gap",
            Self::Expansion => "expansion",
            Self::Profile => "profile",
            Self::SemilinearDecay => "semilinear-decay",
            Self::Lifespan => "lifespan",
            Self::TestFunctional => "test-functional",
            Self::AppendixLemma => "appendix-lemma",
        }
    }

    pub fn keys(self) -> &'static [KeySpec] {
        match self {
            Self::LinearDecay => LINEAR_DECAY_KEYS,
            Self::DiffusionGap => DIFFUSION_GAP_KEYS,
            Self::Expansion => EXPANSION_KEYS,
            Self::Profile => PROFILE_KEYS,
            Self::SemilinearDecay => SEMILINEAR_KEYS,
            Self::Lifespan => LIFESPAN_KEYS,
            Self::TestFunctional => TEST_FUNCTIONAL_KEYS,
            Self::AppendixLemma => APPENDIX_KEYS,
        }
    }

    pub fn defaults(self) -> Params {
        let mut p = Params::new();
        for k in self.keys() {
            p.set(k.key, k.default);
        }
        p
    }

    /// Files written by the experiment and their CSV columns.
    pub fn outputs(self) -> &'static str {
        match self {
            Self::LinearDecay => "linear_decay.csv (t,value,predicted_value), linear_decay.svg",
            Self::DiffusionGap => {
                "diffusion_gap.csv and low_frequency_solution.csv (t,value,predicted_value), matching .svg plots"
            }
            Self::Expansion => {
                "expansion_residual.csv (t,value,predicted_value), expansion_terms.csv (ell,alpha_1..,coeff), \
                 symbol_residual.csv (xi,residual,ratio), expansion_residual.svg"
            }
            Self::Profile => "profile_deviation.csv and solution_l2.csv (t,value,predicted_value), matching .svg plots",
            Self::SemilinearDecay => {
                "solution_log.csv (t,l2,linf,lp_mass,cum_mass); semilinear_l2.csv, semilinear_dsigma.csv, \
                 semilinear_ut.csv, profile_deviation.csv, profile_deviation_dsigma.csv (t,value,predicted_value); .svg plots"
            }
            Self::Lifespan => "lifespan.csv (epsilon,T,censored), lifespan_thresholds.csv (threshold,fitted_exponent), lifespan.svg",
            Self::TestFunctional => "test_functional.csv (R,I_R,I_R_root), test_functional.svg",
            Self::AppendixLemma => "appendix_<k>.csv (t,value,predicted_value), appendix.svg",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    /// Overrides on top of the experiment's defaults.
    pub params: Params,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(name: ExperimentName, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            name,
            params: Params::new(),
            output_dir: output_dir.into(),
            seed: 0,
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.set(key, value.to_string());
        self
    }

    /// Reduced configuration: half the grid points, 12 fit samples (24 for
    /// the semilinear run), base step 0.1, and tolerances widened by 1.5.
    pub fn quickened(mut self) -> Self {
        let defaults = self.name.defaults();
        let current = |p: &Params, k: &str| p.raw(k).or(defaults.raw(k)).map(str::to_string);
        let mut quick = Vec::new();
        if let Some(pts) = current(&self.params, "points").and_then(|v| v.parse::<usize>().ok()) {
            quick.push(("points", (pts / 2).to_string()));
        }
        if defaults.contains("samples") {
            let n = if self.name == ExperimentName::SemilinearDecay { 24 } else { 12 };
            quick.push(("samples", n.to_string()));
        }
        for k in ["tol", "shift_tol"] {
            if let Some(t) = current(&self.params, k).and_then(|v| v.parse::<f64>().ok()) {
                quick.push((k, (1.5 * t).to_string()));
            }
        }
        if defaults.contains("dt") {
            quick.push(("dt", "0.1".to_string()));
        }
        for (k, v) in quick {
            self.params.set(k, v);
        }
        self
    }

    /// Defaults overlaid with the given parameters; rejects unknown keys.
    pub fn resolved(&self) -> Result<Params> {
        let known = self.name.keys();
        if let Some(bad) = self.params.keys().find(|k| !known.iter().any(|s| s.key == *k)) {
            return Err(Error::UnknownKey {
                experiment: self.name.to_string(),
                key: bad.to_string(),
            });
        }
        Ok(self.name.defaults().merged(&self.params))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    /// `|measured - predicted| <= tolerance`
    Within,
    /// `measured <= predicted + tolerance`
    AtMost,
    /// `measured >= predicted - tolerance`
    AtLeast,
    /// A qualitative property; `measured` is informational.
    Holds,
}

impl Comparison {
    fn as_str(self) -> &'static str {
        match self {
            Self::Within => "within",
            Self::AtMost => "at_most",
            Self::AtLeast => "at_least",
            Self::Holds => "holds",
        }
    }
}

/// One checked statement of a report.
#[derive(Clone, Debug)]
pub struct Claim {
    pub label: String,
    /// The estimate or identity the claim realizes.
    pub checks: String,
    pub measured: f64,
    pub predicted: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Claim {
    pub fn compare(label: &str, checks: &str, measured: f64, predicted: f64, tolerance: f64, comparison: Comparison) -> Self {
        let pass = match comparison {
            Comparison::Within => (measured - predicted).abs() <= tolerance,
            Comparison::AtMost => measured <= predicted + tolerance,
            Comparison::AtLeast => measured >= predicted - tolerance,
            Comparison::Holds => unreachable!("use Claim::holds"),
        };
        Self {
            label: label.into(),
            checks: checks.into(),
            measured,
            predicted,
            tolerance,
            comparison,
            pass,
        }
    }

    pub fn within(label: &str, checks: &str, measured: f64, predicted: f64, tolerance: f64) -> Self {
        Self::compare(label, checks, measured, predicted, tolerance, Comparison::Within)
    }

    pub fn at_most(label: &str, checks: &str, measured: f64, bound: f64, tolerance: f64) -> Self {
        Self::compare(label, checks, measured, bound, tolerance, Comparison::AtMost)
    }

    pub fn at_least(label: &str, checks: &str, measured: f64, bound: f64, tolerance: f64) -> Self {
        Self::compare(label, checks, measured, bound, tolerance, Comparison::AtLeast)
    }

    pub fn holds(label: &str, checks: &str, ok: bool, measured: f64) -> Self {
        Self {
            label: label.into(),
            checks: checks.into(),
            measured,
            predicted: f64::NAN,
            tolerance: 0.0,
            comparison: Comparison::Holds,
            pass: ok,
        }
    }

    /// A claim whose measurement could not be taken.
    pub fn failed(label: &str, checks: &str, reason: &str) -> Self {
        let mut c = Self::holds(label, checks, false, f64::NAN);
        c.checks = format!("{checks} ({reason})");
        c
    }

    pub fn summary_line(&self) -> String {
        format!(
            "claim={} measured={:.6e} predicted={:.6e} tolerance={:.3e} comparison={} pass={} checks=\"{}\"",
            self.label,
            self.measured,
            self.predicted,
            self.tolerance,
            self.comparison.as_str(),
            self.pass,
            self.checks
        )
    }
}

#[derive(Clone, Debug)]
pub struct Artifact {
    pub file: String,
    pub contents: String,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub experiment: ExperimentName,
    pub seed: u64,
    pub params: Params,
    pub claims: Vec<Claim>,
    /// Informational `key=value` pairs.
    pub notes: Vec<(String, String)>,
    pub artifacts: Vec<Artifact>,
}

impl Report {
    fn new(experiment: ExperimentName, seed: u64, params: Params) -> Self {
        Self {
            experiment,
            seed,
            params,
            claims: Vec::new(),
            notes: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        !self.claims.is_empty() && self.claims.iter().all(|c| c.pass)
    }

    pub fn claim(&self, label: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.label == label)
    }

    pub fn artifact(&self, file: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.file == file)
    }

    fn note(&mut self, key: &str, value: impl fmt::Display) {
        self.notes.push((key.into(), value.to_string()));
    }

    pub fn summary(&self) -> String {
        let mut s = format!("experiment={}\nseed={}\n", self.experiment, self.seed);
        for k in self.params.keys() {
            s.push_str(&format!("param.{k}={}\n", self.params.raw(k).unwrap_or("")));
        }
        for (k, v) in &self.notes {
            s.push_str(&format!("note.{k}={v}\n"));
        }
        for c in &self.claims {
            s.push_str(&c.summary_line());
            s.push('\n');
        }
        s.push_str(&format!("result={}\n", if self.passed() { "pass" } else { "fail" }));
        s
    }

    /// Writes every artifact and `summary.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let out_err = |path: &Path, source| Error::Output {
            path: path.display().to_string(),
            source,
        };
        fs::create_dir_all(dir).map_err(|e| out_err(dir, e))?;
        let mut written = Vec::new();
        let summary = Artifact {
            file: "summary.txt".into(),
            contents: self.summary(),
        };
        for a in self.artifacts.iter().chain(std::iter::once(&summary)) {
            let path = dir.join(&a.file);
            fs::write(&path, &a.contents).map_err(|e| out_err(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Evaluates the experiment and writes its report into `spec.output_dir`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    let report = evaluate(spec)?;
    report.write(&spec.output_dir)?;
    Ok(report)
}

/// Evaluates the experiment without touching the filesystem.
pub fn evaluate(spec: &ExperimentSpec) -> Result<Report> {
    evaluate_shifted(spec, 0.0)
}

/// As [`evaluate`], with every predicted exponent moved by `shift`.
pub(crate) fn evaluate_shifted(spec: &ExperimentSpec, shift: f64) -> Result<Report> {
    let params = spec.resolved()?;
    let mut report = Report::new(spec.name, spec.seed, params.clone());
    let ctx = Ctx {
        p: &params,
        seed: spec.seed,
        shift,
    };
    match spec.name {
        ExperimentName::LinearDecay => linear_decay(&ctx, &mut report)?,
        ExperimentName::DiffusionGap => diffusion_gap(&ctx, &mut report)?,
        ExperimentName::Expansion => expansion(&ctx, &mut report)?,
        ExperimentName::Profile => profile(&ctx, &mut report)?,
        ExperimentName::SemilinearDecay => semilinear_decay(&ctx, &mut report)?,
        ExperimentName::Lifespan => lifespan(&ctx, &mut report)?,
        ExperimentName::TestFunctional => test_functional(&ctx, &mut report)?,
        ExperimentName::AppendixLemma => appendix_lemma(&ctx, &mut report)?,
    }
    Ok(report)
}

struct Ctx<'a> {
    p: &'a Params,
    seed: u64,
    shift: f64,
}

impl Ctx<'_> {
    fn f(&self, key: &str) -> Result<f64> {
        self.p.get(key)
    }

    fn u(&self, key: &str) -> Result<usize> {
        self.p.get(key)
    }

    fn j(&self) -> Result<u32> {
        self.p.get("j")
    }

    fn grid(&self) -> Result<GridSpec> {
        make_grid(self.u("dim")?, self.u("points")?, self.f("length")?)
    }

    fn window(&self) -> Result<Vec<f64>> {
        Ok(log_spaced(self.f("t_min")?, self.f("t_max")?, self.u("samples")?))
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// `(u0, u1)`. The Gaussian pair has `P0 + P1 > 0` and a nonzero first moment.
    fn data(&self, grid: &GridSpec) -> Result<(Field, Field)> {
        match self.p.raw("data").unwrap_or("gaussian") {
            "gaussian" => Ok((
                Field::gaussian(grid, 1.0, 1.0),
                Field::from_fn(grid, |x| {
                    let r2: f64 = x.iter().enumerate().map(|(a, v)| if a == 0 { (v - 0.5).powi(2) } else { v * v }).sum();
                    (-r2).exp()
                }),
            )),
            "random" => {
                let mut rng = self.rng();
                Ok((random_bumps(grid, &mut rng), random_bumps(grid, &mut rng)))
            }
            other => Err(Error::Format(format!("unknown data kind `{other}`"))),
        }
    }

    /// Non-negative profile for `(0, ε u1)` runs.
    fn shape(&self, grid: &GridSpec) -> Result<Field> {
        match self.p.raw("data").unwrap_or("gaussian") {
            "gaussian" => Ok(Field::gaussian(grid, 1.0, 1.0)),
            "random" => Ok(random_bumps(grid, &mut self.rng())),
            other => Err(Error::Format(format!("unknown data kind `{other}`"))),
        }
    }
}

/// Three positive Gaussian bumps with seeded centers, widths, and heights.
fn random_bumps(grid: &GridSpec, rng: &mut ChaCha8Rng) -> Field {
    let dim = grid.dim();
    let bumps: Vec<(Vec<f64>, f64, f64)> = (0..3)
        .map(|_| {
            let c = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
            (c, rng.gen_range(0.5..1.5), rng.gen_range(0.2..1.0))
        })
        .collect();
    Field::from_fn(grid, move |x| {
        bumps
            .iter()
            .map(|(c, w, a)| {
                let r2: f64 = x.iter().zip(c).map(|(x, c)| (x - c) * (x - c)).sum();
                a * (-r2 / (w * w)).exp()
            })
            .sum()
    })
}

fn fmt_f(v: f64) -> String {
    format!("{v:.12e}")
}

/// CSV `t,value,predicted_value`; the prediction is anchored at the first sample.
fn decay_csv(times: &[f64], values: &[f64], slope: f64) -> String {
    let mut s = String::from("t,value,predicted_value\n");
    let (t0, v0) = (times[0], values[0]);
    for (t, v) in times.iter().zip(values) {
        s.push_str(&format!("{},{},{}\n", fmt_f(*t), fmt_f(*v), fmt_f(v0 * (t / t0).powf(slope))));
    }
    s
}

fn decay_svg(title: &str, ylabel: &str, times: &[f64], values: &[f64], slope: f64) -> String {
    let pts: Vec<(f64, f64)> = times.iter().copied().zip(values.iter().copied()).collect();
    let guide = svg::Guide {
        slope,
        anchor: pts[0],
        label: format!("slope {slope:.3}"),
    };
    svg::loglog(title, "t", ylabel, &[svg::Series { label: ylabel, points: &pts }], Some(&guide))
}

fn push_decay(report: &mut Report, stem: &str, title: &str, times: &[f64], values: &[f64], slope: f64) {
    if times.is_empty() {
        return;
    }
    report.artifacts.push(Artifact {
        file: format!("{stem}.csv"),
        contents: decay_csv(times, values, slope),
    });
    report.artifacts.push(Artifact {
        file: format!("{stem}.svg"),
        contents: decay_svg(title, title, times, values, slope),
    });
}

/// Fits the slope and turns it into a claim; a failed fit is a failed claim.
#[allow(clippy::too_many_arguments)]
fn slope_claim(
    report: &mut Report,
    label: &str,
    checks: &str,
    times: &[f64],
    values: &[f64],
    predicted: f64,
    tol: f64,
    cmp: Comparison,
) -> Option<f64> {
    match fit_decay_exponent(times, values) {
        Ok(fit) => {
            report.note(&format!("{label}.rms_residual"), format!("{:.3e}", fit.rms_residual));
            report.claims.push(Claim::compare(label, checks, fit.slope, predicted, tol, cmp));
            Some(fit.slope)
        }
        Err(e) => {
            report.claims.push(Claim::failed(label, checks, &e.to_string()));
            None
        }
    }
}

/// Number of strict increases (beyond rounding) along the sequence.
fn increases(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-12)).count()
}

fn spectral_norm_q(c: &SpectralField, q: f64) -> Result<f64> {
    if q == 2.0 {
        Ok(c.l2_norm())
    } else {
        lq_norm(&to_physical(c)?, q)
    }
}

fn linear_decay(ctx: &Ctx, report: &mut Report) -> Result<()> {
    let grid = ctx.grid()?;
    let (sigma, m, a, j) = (ctx.f("sigma")?, ctx.f("m")?, ctx.f("a")?, ctx.j()?);
    let n = grid.dim();
    let predicted = predicted_exponent(RateQuery::LinearL2 { n, sigma, m, a, j })? + ctx.shift;
    let (u0, u1) = ctx.data(&grid)?;
    let (c0, c1) = (to_spectral(&u0), to_spectral(&u1));
    let times = ctx.window()?;
    let values = par::map(&times, |&t| propagate_linear_spectral(&c0, &c1, sigma, t, j, a).map(|c| c.l2_norm()))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    // the rate is sharp for m = 1 with nonzero total mass, an upper bound otherwise
    let cmp = if m == 1.0 { Comparison::Within } else { Comparison::AtMost };
    slope_claim(report, "slope", "linear (L^m and L2)-L2 decay estimate", &times, &values, predicted, ctx.f("tol")?, cmp);
    let last = propagate_linear_spectral(&c0, &c1, sigma, times[times.len() - 1], 0, 0.0)?;
    report.note("outer_mass_fraction", format!("{:.3e}", outer_mass_fraction(&to_physical(&last)?)));
    push_decay(report, "linear_decay", "linear decay", &times, &values, predicted);
    Ok(())
}

/// Share of the L1 norm outside the cube `[-L/4, L/4]^n`.
pub fn outer_mass_fraction(f: &Field) -> f64 {
    let grid = f.grid();
    let quarter = grid.box_length() / 4.0;
    let (mut outer, mut total) = (0.0, 0.0);
    for (i, v) in f.values().iter().enumerate() {
        let x = grid.position(i);
        total += v.abs();
        if x[..grid.dim()].iter().any(|c| c.abs() > quarter) {
            outer += v.abs();
        }
    }
    if total > 0.0 {
        outer / total
    } else {
        0.0
    }
}

fn diffusion_gap(ctx: &Ctx, report: &mut Report) -> Result<()> {
    let grid = ctx.grid()?;
    let n = grid.dim();
    let (sigma, p, a, j) = (ctx.f("sigma")?, ctx.f("p")?, ctx.f("a")?, ctx.j()?);
    let q: f64 = match ctx.p.raw("q") {
        Some("inf") => f64::INFINITY,
        _ => ctx.f("q")?,
    };
    let predicted = predicted_exponent(RateQuery::DiffusionGap { n, sigma, p, q, a, j })? + ctx.shift;
    let (u0, u1) = ctx.data(&grid)?;
    let (c0, c1) = (to_spectral(&u0), to_spectral(&u1));
    let v0 = c0.add_scaled(&c1, Complex64::new(1.0, 0.0))?;
    let chi = CutoffProfile::default();
    let times = ctx.window()?;
    let pairs = par::map(&times, |&t| -> Result<(f64, f64)> {
        let u = propagate_linear_spectral(&c0, &c1, sigma, t, j, a)?;
        let v = evaluate_diffusion_spectral(&v0, sigma, t, j, a)?;
        let gap = chi.low_part(&u.add_scaled(&v, Complex64::new(-1.0, 0.0))?);
        Ok((spectral_norm_q(&gap, q)?, spectral_norm_q(&chi.low_part(&u), q)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (gap, plain): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let tol = ctx.f("tol")?;
    let gap_slope = slope_claim(report, "gap_slope", "diffusion phenomenon, L^p-L^q low-frequency gap", &times, &gap, predicted, tol, Comparison::Within);
    let plain_predicted = predicted - ctx.shift + 1.0;
    let plain_slope = fit_decay_exponent(&times, &plain).map(|f| f.slope).ok();
    match (gap_slope, plain_slope) {
        (Some(g), Some(s)) => {
            report.note("plain_slope", format!("{s:.6}"));
            report.claims.push(Claim::at_least("gap_gain", "gap decays faster than the solution", s - g, ctx.f("gain")?, 0.0));
        }
        _ => report.claims.push(Claim::failed("gap_gain", "gap decays faster than the solution", "fit failed")),
    }
    push_decay(report, "diffusion_gap", "low-frequency gap", &times, &gap, predicted);
    push_decay(report, "low_frequency_solution", "low-frequency solution", &times, &plain, plain_predicted);
    Ok(())
}

fn expansion(ctx: &Ctx, report: &mut Report) -> Result<()> {
    let grid = ctx.grid()?;
    let n = grid.dim() as f64;
    let (sigma, gamma) = (ctx.f("sigma")?, ctx.f("gamma")?);
    let rate = -predicted_exponent(RateQuery::Expansion { n: grid.dim(), sigma, gamma })?;
    debug_assert!((rate - (n / (4.0 * sigma) + gamma / (2.0 * sigma))).abs() < 1e-12);
    let (u0, u1) = ctx.data(&grid)?;
    let probe = ExpansionResidualProbe::new(&u0, &u1, sigma, gamma)?;
    let times = ctx.window()?;
    let residuals = par::map(&times, |&t| probe.residual(t)).into_iter().collect::<Result<Vec<_>>>()?;
    let rescaled: Vec<f64> = times.iter().zip(&residuals).map(|(t, r)| t.powf(rate) * r).collect();
    let ups = increases(&rescaled);
    report.claims.push(Claim::holds(
        "rescaled_residual_decreasing",
        "moment expansion, vanishing of the rescaled residual",
        ups == 0,
        ups as f64,
    ));
    slope_claim(report, "residual_slope", "moment expansion residual rate", &times, &residuals, -rate + ctx.shift, 0.0, Comparison::AtMost);
    report.claims.push(Claim::holds(
        "moments_reliable",
        "moment quadrature away from the box boundary",
        probe.coefficients().reliable(),
        probe.coefficients().unreliable.len() as f64,
    ));

    let xi: Vec<f64> = ctx.p.list("xi")?;
    let v0 = u0.add_scaled(&u1, 1.0)?;
    let res = pointwise_symbol_residual(&v0, sigma, gamma, &xi)?;
    let ratios: Vec<f64> = xi.iter().zip(&res).map(|(x, r)| r / x.abs().powf(gamma)).collect();
    let i_max = (0..xi.len()).max_by(|&a, &b| xi[a].abs().total_cmp(&xi[b].abs())).unwrap_or(0);
    let growth = ratios.iter().copied().fold(0.0, f64::max) / ratios[i_max];
    report.claims.push(Claim::at_most("symbol_ratio_growth", "pointwise symbol expansion bound", growth, ctx.f("growth")?, 0.0));

    let mut terms = Vec::new();
    probe.coefficients().write_csv(&mut terms)?;
    report.artifacts.push(Artifact {
        file: "expansion_terms.csv".into(),
        contents: String::from_utf8(terms).expect("ascii csv"),
    });
    let mut sym = String::from("xi,residual,ratio\n");
    for ((x, r), q) in xi.iter().zip(&res).zip(&ratios) {
        sym.push_str(&format!("{},{},{}\n", fmt_f(*x), fmt_f(*r), fmt_f(*q)));
    }
    report.artifacts.push(Artifact {
        file: "symbol_residual.csv".into(),
        contents: sym,
    });
    push_decay(report, "expansion_residual", "expansion residual", &times, &residuals, -rate);
    Ok(())
}

fn profile(ctx: &Ctx, report: &mut Report) -> Result<()> {
    let grid = ctx.grid()?;
    let n = grid.dim();
    let sigma = ctx.f("sigma")?;
    let (u0, u1) = ctx.data(&grid)?;
    let (c0, c1) = (to_spectral(&u0), to_spectral(&u1));
    let mass = (c0.zero_mode() + c1.zero_mode()).re;
    report.note("total_mass", fmt_f(mass));
    report.claims.push(Claim::holds("nonzero_mass", "P0 + P1 != 0", mass.abs() > 1e-12, mass));
    let deviation_and_norm = |t: f64| -> Result<(f64, f64)> {
        let u = propagate_linear_spectral(&c0, &c1, sigma, t, 0, 0.0)?;
        let g = g_sigma_spectral(&grid, sigma, t, 0, 0.0)?;
        Ok((u.add_scaled(&g, Complex64::new(-mass, 0.0))?.l2_norm(), u.l2_norm()))
    };
    let times = ctx.window()?;
    let (dev, l2): (Vec<f64>, Vec<f64>) = par::map(&times, |&t| deviation_and_norm(t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let tol = ctx.f("tol")?;
    let dev_rate = predicted_exponent(RateQuery::FirstOrderProfile { n, sigma })? + ctx.shift;
    let l2_rate = predicted_exponent(RateQuery::LinearL2 { n, sigma, m: 1.0, a: 0.0, j: 0 })? + ctx.shift;
    slope_claim(report, "profile_slope", "first-order diffusion profile", &times, &dev, dev_rate, tol, Comparison::AtMost);
    slope_claim(report, "l2_slope", "sharp L2 decay for nonzero total mass", &times, &l2, l2_rate, tol, Comparison::Within);

    let band_times = log_spaced(ctx.f("band_t_min")?, ctx.f("t_max")?, ctx.u("samples")?);
    let band: Vec<f64> = par::map(&band_times, |&t| deviation_and_norm(t).map(|(_, v)| v * t.powf(n as f64 / (4.0 * sigma))))
        .into_iter()
        .collect::<Result<_>>()?;
    let (lo, hi) = band.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), &v| (l.min(v), h.max(v)));
    report.note("band_min", fmt_f(lo));
    report.note("band_max", fmt_f(hi));
    report.claims.push(Claim::at_most("band_ratio", "two-sided L2 bound", hi / lo, ctx.f("band")?, 0.0));
    push_decay(report, "profile_deviation", "profile deviation", &times, &dev, dev_rate);
    push_decay(report, "solution_l2", "solution L2 norm", &times, &l2, l2_rate);
    Ok(())
}

fn semilinear_decay(ctx: &Ctx, report: &mut Report) -> Result<()> {
    let grid = ctx.grid()?;
    let n = grid.dim();
    let (sigma, p, m) = (ctx.f("sigma")?, ctx.f("p")?, ctx.f("m")?);
    let rate = |a: f64, j: u32| predicted_exponent(RateQuery::Semilinear { n, sigma, m, p, a, j }).map(|r| r + ctx.shift);
    let (r_l2, r_ds, r_ut) = (rate(0.0, 0)?, rate(sigma, 0)?, rate(0.0, 1)?);

    let t_end = ctx.f("t_end")?;
    let mut cfg = SemilinearConfig::new(grid.clone(), sigma, p).with_schedule(1.0, t_end, ctx.u("samples")?);
    cfg.dt = ctx.f("dt")?;
    cfg.epsilon = ctx.f("epsilon")?;
    cfg.blowup_threshold = ctx.f("threshold")?;
    let (u0, u1) = ctx.data(&grid)?;
    let log = run_semilinear(&u0, &u1, &cfg)?;
    report.note("steps", log.steps);
    report.note("final_time", fmt_f(log.final_time));
    report.claims.push(Claim::holds(
        "no_blowup",
        "small-data global existence",
        log.blown_up.is_none(),
        log.blown_up.unwrap_or(log.final_time),
    ));

    let t_min = ctx.f("t_min")?;
    let idx: Vec<usize> = (0..log.times.len()).filter(|&i| log.times[i] >= t_min * (1.0 - 1e-9)).collect();
    let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let times = pick(&log.times);
    let tol = ctx.f("tol")?;
    let checks = "small-data semilinear decay";
    slope_claim(report, "l2_slope", checks, &times, &pick(&log.l2_norms), r_l2, tol, Comparison::Within);
    slope_claim(report, "dsigma_slope", checks, &times, &pick(&log.dsigma_norms), r_ds, tol, Comparison::Within);
    slope_claim(report, "ut_slope", checks, &times, &pick(&log.ut_norms), r_ut, tol, Comparison::Within);

    let tail = ctx.f("tail")?;
    report.claims.push(Claim::at_most("cumulative_mass_tail", "integrability of the nonlinear mass", log.cumulative_tail(), tail, 0.0));
    report.claims.push(Claim::at_most(
        "cumulative_mass_extrapolated_tail",
        "integrability of the nonlinear mass",
        log.nonlinear_tail_bound(),
        tail,
        0.0,
    ));

    let mass = log.mass_estimate();
    report.note("mass_estimate", fmt_f(mass));
    report.note("initial_mass", fmt_f(log.initial_mass));
    let t_prof = ctx.f("profile_t_min")?;
    let snaps: Vec<_> = log.snapshots.iter().filter(|s| s.t >= t_prof * (1.0 - 1e-9)).collect();
    let base = n as f64 / (4.0 * sigma);
    let prof_times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    for (k, label, stem) in [(0, "profile_decreasing", "profile_deviation"), (1, "profile_dsigma_decreasing", "profile_deviation_dsigma")] {
        let dev = snaps
            .iter()
            .map(|s| profile_deviation(s, mass, sigma, 0, k))
            .collect::<Result<Vec<_>>>()?;
        let scale = base + k as f64 / 2.0;
        let rescaled: Vec<f64> = prof_times.iter().zip(&dev).map(|(t, d)| t.powf(scale) * d).collect();
        let ups = increases(&rescaled);
        report.claims.push(Claim::holds(
            label,
            "nonlinear diffusion profile",
            snaps.len() >= 2 && ups == 0,
            ups as f64,
        ));
        push_decay(report, stem, "deviation from M G_sigma", &prof_times, &dev, -scale);
    }

    let mut csv = Vec::new();
    log.write_csv(&mut csv)?;
    report.artifacts.push(Artifact {
        file: "solution_log.csv".into(),
        contents: String::from_utf8(csv).expect("ascii csv"),
    });
    push_decay(report, "semilinear_l2", "L2 norm", &times, &pick(&log.l2_norms), r_l2);
    push_decay(report, "semilinear_dsigma", "|D|^sigma L2 norm", &times, &pick(&log.dsigma_norms), r_ds);
    push_decay(report, "semilinear_ut", "u_t L2 norm", &times, &pick(&log.ut_norms), r_ut);
    Ok(())
}

fn lifespan(ctx: &Ctx, report: &mut Report) -> Result<()> {
    let grid = ctx.grid()?;
    let (sigma, p) = (ctx.f("sigma")?, ctx.f("p")?);
    let mut cfg = SemilinearConfig::new(grid.clone(), sigma, p);
    cfg.dt = ctx.f("dt")?;
    cfg.t_end = ctx.f("t_cap")?;
    let epsilons: Vec<f64> = ctx.p.list("epsilons")?;
    let reference = ctx.f("threshold")?;
    let mut thresholds: Vec<f64> = ctx.p.list("thresholds")?;
    if !thresholds.contains(&reference) {
        thresholds.push(reference);
    }
    let shape = ctx.shape(&grid)?;
    let reports = lifespan_sweep(&shape, &cfg, &epsilons, &thresholds)?;
    let main = reports.iter().find(|r| r.threshold == reference).expect("reference threshold present");
    let predicted = main.predicted_exponent + ctx.shift;
    let checks = "lifespan upper bound scaling";
    match main.fitted_exponent {
        Some(fit) => report
            .claims
            .push(Claim::within("lifespan_exponent", checks, fit, predicted, ctx.f("tol")? * predicted.abs())),
        None => report
            .claims
            .push(Claim::failed("lifespan_exponent", checks, "fewer than four uncensored runs")),
    }
    let shifts: Option<Vec<f64>> = reports
        .iter()
        .map(|r| Some((r.fitted_exponent? - main.fitted_exponent?).abs() / main.fitted_exponent?.abs()))
        .collect();
    match shifts {
        Some(s) => report.claims.push(Claim::at_most(
            "threshold_shift",
            "insensitivity of the lifespan fit to the blow-up threshold",
            s.iter().copied().fold(0.0, f64::max),
            ctx.f("shift_tol")?,
            0.0,
        )),
        None => report.claims.push(Claim::failed("threshold_shift", "threshold insensitivity", "missing fit")),
    }
    report.claims.push(Claim::holds("monotone_in_epsilon", "larger data blow up sooner", main.monotone(), 0.0));
    report.note("censored", main.censored.iter().filter(|&&c| c).count());

    let mut csv = Vec::new();
    main.write_csv(&mut csv)?;
    report.artifacts.push(Artifact {
        file: "lifespan.csv".into(),
        contents: String::from_utf8(csv).expect("ascii csv"),
    });
    let mut th = String::from("threshold,fitted_exponent\n");
    for r in &reports {
        th.push_str(&format!("{},{}\n", fmt_f(r.threshold), fmt_f(r.fitted_exponent.unwrap_or(f64::NAN))));
    }
    report.artifacts.push(Artifact {
        file: "lifespan_thresholds.csv".into(),
        contents: th,
    });
    let pts: Vec<(f64, f64)> = main
        .epsilons
        .iter()
        .zip(&main.lifespans)
        .zip(&main.censored)
        .filter(|(_, &c)| !c)
        .map(|((&e, &t), _)| (e, t))
        .collect();
    if let Some(&anchor) = pts.iter().min_by(|a, b| a.0.total_cmp(&b.0)) {
        let guide = svg::Guide {
            slope: -predicted,
            anchor,
            label: format!("slope {:.3}", -predicted),
        };
        report.artifacts.push(Artifact {
            file: "lifespan.svg".into(),
            contents: svg::loglog("lifespan", "epsilon", "T", &[svg::Series { label: "T_eps", points: &pts }], Some(&guide)),
        });
    }
    Ok(())
}

fn test_functional(ctx: &Ctx, report: &mut Report) -> Result<()> {
    let grid = ctx.grid()?;
    let n = grid.dim() as f64;
    let (sigma, p) = (ctx.f("sigma")?, ctx.f("p")?);
    if !(p > 1.0 && p < 1.0 + 2.0 * sigma / n) {
        return Err(Error::Hypothesis(format!(
            "test functional run needs 1 < p < 1 + 2 sigma / n = {}, got {p}",
            1.0 + 2.0 * sigma / n
        )));
    }
    let radii: Vec<f64> = ctx.p.list("radii")?;
    if radii.len() < 2 || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidParameter("need at least two positive radii".into()));
    }
    let p_conj = p / (p - 1.0);
    let kappa = -2.0 * sigma + (n + 2.0 * sigma) / p_conj + ctx.shift;
    let horizon = radii.iter().map(|r| r.powf(2.0 * sigma)).fold(0.0, f64::max);

    let mut cfg = SemilinearConfig::new(grid.clone(), sigma, p);
    cfg.dt = ctx.f("dt")?;
    cfg.t_end = (horizon / cfg.dt).ceil() * cfg.dt;
    cfg.epsilon = ctx.f("epsilon")?;
    cfg.sample_times.clear();
    cfg.keep_snapshots = false;
    let mut acc = TestFunctional::new(&radii, sigma, p);
    let log = run_semilinear_observed(&Field::zeros(&grid), &ctx.shape(&grid)?, &cfg, &mut acc)?;
    report.claims.push(Claim::holds(
        "bounded_window",
        "no blow-up inside the largest window",
        log.blown_up.is_none(),
        log.blown_up.unwrap_or(log.final_time),
    ));
    let values = match acc.finish() {
        Ok(v) => v,
        Err(e) => {
            report.claims.push(Claim::failed("root_slope", "test functional estimate", &e.to_string()));
            return Ok(());
        }
    };
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    report.claims.push(Claim::holds(
        "monotone_in_radius",
        "I_R non-decreasing in R",
        sorted.windows(2).all(|w| w[1] >= w[0]),
        0.0,
    ));
    let roots: Vec<f64> = values.iter().map(|v| v.powf(1.0 / p_conj)).collect();
    match fit_log_log(&radii, &roots) {
        Ok(fit) => report
            .claims
            .push(Claim::at_most("root_slope", "test functional estimate", fit.slope, kappa, ctx.f("tol")?)),
        Err(e) => report.claims.push(Claim::failed("root_slope", "test functional estimate", &e.to_string())),
    }
    let mut csv = String::from("R,I_R,I_R_root\n");
    for &i in &order {
        csv.push_str(&format!("{},{},{}\n", fmt_f(radii[i]), fmt_f(values[i]), fmt_f(roots[i])));
    }
    report.artifacts.push(Artifact {
        file: "test_functional.csv".into(),
        contents: csv,
    });
    let pts: Vec<(f64, f64)> = order.iter().map(|&i| (radii[i], roots[i])).collect();
    let guide = svg::Guide {
        slope: kappa,
        anchor: pts[0],
        label: format!("slope {kappa:.3}"),
    };
    report.artifacts.push(Artifact {
        file: "test_functional.svg".into(),
        contents: svg::loglog("test functional", "R", "I_R^(1/p')", &[svg::Series { label: "I_R^(1/p')", points: &pts }], Some(&guide)),
    });
    Ok(())
}

fn appendix_lemma(ctx: &Ctx, report: &mut Report) -> Result<()> {
    let triples: Vec<Vec<f64>> = ctx.p.groups("triples")?;
    let c = ctx.f("c")?;
    let times = ctx.window()?;
    let tol = ctx.f("tol")?;
    let mut series = Vec::new();
    for (k, t) in triples.iter().enumerate() {
        let [n, alpha, beta] = t[..] else {
            return Err(Error::Format(format!("triple {k} must have three entries, got {}", t.len())));
        };
        if n.fract() != 0.0 || n < 1.0 {
            return Err(Error::Format(format!("triple {k}: dimension must be a positive integer, got {n}")));
        }
        let n = n as usize;
        let values = times
            .iter()
            .map(|&t| appendix_integral(n, alpha, beta, c, t))
            .collect::<Result<Vec<_>>>()?;
        let predicted = -(n as f64 + beta) / alpha + ctx.shift;
        slope_claim(report, &format!("slope_{k}"), "radial integral decay lemma", &times, &values, predicted, tol, Comparison::Within);
        report.artifacts.push(Artifact {
            file: format!("appendix_{k}.csv"),
            contents: decay_csv(&times, &values, predicted),
        });
        series.push((format!("n={n} alpha={alpha} beta={beta}"), times.iter().copied().zip(values).collect::<Vec<_>>()));
    }
    let s: Vec<svg::Series> = series.iter().map(|(l, p)| svg::Series { label: l, points: p }).collect();
    report.artifacts.push(Artifact {
        file: "appendix.svg".into(),
        contents: svg::loglog("radial integral", "t", "integral", &s, None),
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(name: ExperimentName) -> ExperimentSpec {
        ExperimentSpec::new(name, "unused")
    }

    #[test]
    fn names_round_trip() {
        for n in ExperimentName::ALL {
            assert_eq!(n.as_str().parse::<ExperimentName>().unwrap(), n);
        }
        assert!(matches!("nope".parse::<ExperimentName>(), Err(Error::UnknownExperiment(_))));
    }

    #[test]
    fn unknown_and_missing_keys_are_distinct() {
        let e = evaluate(&quick(ExperimentName::LinearDecay).with("bogus", 1)).unwrap_err();
        assert!(matches!(e, Error::UnknownKey { .. }));
        assert_eq!(exit_code(&e), exit::USAGE);
        let e = evaluate(&quick(ExperimentName::LinearDecay).with("sigma", "")).unwrap_err();
        assert_eq!(exit_code(&e), exit::MISSING_KEY);
        assert_eq!(exit_code(&Error::UnknownExperiment("x".into())), exit::USAGE);
        assert_eq!(exit_code(&Error::Hypothesis("x".into())), exit::RUNTIME);
    }

    #[test]
    fn linear_decay_default_passes() {
        let r = evaluate(&quick(ExperimentName::LinearDecay).with("points", 512)).unwrap();
        let c = r.claim("slope").unwrap();
        assert!(c.pass, "{}", r.summary());
        assert!((c.measured + 0.25).abs() < 0.1);
        assert!(r.summary().contains("claim=slope"));
        let csv = &r.artifact("linear_decay.csv").unwrap().contents;
        assert!(csv.starts_with("t,value,predicted_value\n"));
        assert_eq!(csv.lines().count(), 25);
    }

    #[test]
    fn diffusion_gap_default_passes() {
        let r = evaluate(&quick(ExperimentName::DiffusionGap).with("points", 512)).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert!((r.claim("gap_slope").unwrap().measured + 1.25).abs() < 0.1);
    }

    #[test]
    fn shift_breaks_a_passing_claim() {
        let spec = quick(ExperimentName::AppendixLemma);
        assert!(evaluate(&spec).unwrap().passed());
        assert!(!evaluate_shifted(&spec, 0.5).unwrap().passed());
    }

    #[test]
    fn seeded_random_data_is_reproducible() {
        let spec = ExperimentSpec {
            seed: 7,
            ..quick(ExperimentName::LinearDecay).with("data", "random").with("points", 256)
        };
        let a = evaluate(&spec).unwrap();
        let b = evaluate(&spec).unwrap();
        assert_eq!(a.artifact("linear_decay.csv").unwrap().contents, b.artifact("linear_decay.csv").unwrap().contents);
        let other = ExperimentSpec { seed: 8, ..spec };
        assert_ne!(
            evaluate(&other).unwrap().artifact("linear_decay.csv").unwrap().contents,
            a.artifact("linear_decay.csv").unwrap().contents
        );
    }

    #[test]
    fn outer_mass_fraction_examples() {
        let g = make_grid(1, 64, 16.0).unwrap();
        assert!(outer_mass_fraction(&Field::gaussian(&g, 1.0, 0.5)) < 1e-20);
        assert!(outer_mass_fraction(&Field::from_fn(&g, |_| 1.0)) > 0.4);
    }
}

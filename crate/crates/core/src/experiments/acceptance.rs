//! The acceptance suite: eleven numbered criteria, each built from one or
//! more experiment runs plus direct identity checks.
//!
//! Quick mode halves the grid, uses 12 fit samples (24 for the semilinear
//! run), coarsens the semilinear base step to 0.1, and multiplies every
//! slope and shift tolerance by 1.5. Runtime limits are the same in both
//! modes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{evaluate_shifted, Claim, ExperimentName, ExperimentSpec, Report};
use crate::diffusion::{expansion_coefficients, spectrum_sequence};
use crate::error::Result;
use crate::grid::{make_grid, to_physical, to_spectral, Field};
use crate::propagator::{mode_ode_oracle, multiplier_pair, oracle_steps, propagate_linear_spectral, CutoffProfile, SINGULAR_BAND};

/// Shift applied to every predicted exponent of an injected criterion.
pub const INJECTED_SHIFT: f64 = -1.0;

#[derive(Clone, Copy, Debug, Default)]
pub struct SuiteOptions {
    pub quick: bool,
    pub seed: u64,
    /// Criterion whose predictions are deliberately corrupted.
    pub inject: Option<u32>,
}

impl SuiteOptions {
    fn shift(&self, id: u32) -> f64 {
        if self.inject == Some(id) {
            INJECTED_SHIFT
        } else {
            0.0
        }
    }
}

pub const CRITERIA: [(u32, &str); 11] = [
    (1, "linear L2 decay"),
    (2, "closed-form multipliers vs mode ODE"),
    (3, "diffusion phenomenon"),
    (4, "first-order profile and two-sided L2 bound"),
    (5, "moment expansion residual"),
    (6, "radial integral lemma"),
    (7, "semilinear global decay"),
    (8, "nonlinear diffusion profile"),
    (9, "lifespan scaling"),
    (10, "test functional growth"),
    (11, "structural identities"),
];

fn limit(id: u32) -> Option<Duration> {
    let secs = match id {
        1 | 3 => 30,
        2 | 6 => 5,
        9 => 300,
        11 => 10,
        _ => return None,
    };
    Some(Duration::from_secs(secs))
}

#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: &'static str,
    pub claims: Vec<Claim>,
    /// Set when a run aborted before producing its claims.
    pub error: Option<String>,
    pub elapsed: Duration,
    pub limit: Option<Duration>,
}

impl CriterionOutcome {
    pub fn within_limit(&self) -> bool {
        self.limit.is_none_or(|l| self.elapsed <= l)
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.claims.is_empty() && self.claims.iter().all(|c| c.pass) && self.within_limit()
    }

    pub fn failed_claims(&self) -> Vec<&str> {
        self.claims.iter().filter(|c| !c.pass).map(|c| c.label.as_str()).collect()
    }

    /// One line: `criterion=<id> status=<pass|fail> ...`.
    pub fn line(&self) -> String {
        let passed = self.claims.iter().filter(|c| c.pass).count();
        let mut s = format!(
            "criterion={} status={} title=\"{}\" claims={}/{} elapsed_s={:.2}",
            self.id,
            if self.passed() { "pass" } else { "fail" },
            self.title,
            passed,
            self.claims.len(),
            self.elapsed.as_secs_f64()
        );
        if let Some(l) = self.limit {
            let _ = write!(s, " limit_s={}", l.as_secs());
        }
        let failed = self.failed_claims();
        if !failed.is_empty() {
            let _ = write!(s, " failed={}", failed.join(","));
        }
        if let Some(e) = &self.error {
            let _ = write!(s, " error=\"{e}\"");
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub options: SuiteOptions,
    pub outcomes: Vec<CriterionOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed())
    }

    pub fn failed(&self) -> Vec<u32> {
        self.outcomes.iter().filter(|o| !o.passed()).map(|o| o.id).collect()
    }

    /// Criterion lines, every claim line, and a closing `suite=` line.
    pub fn summary(&self) -> String {
        let mut s = format!("quick={}\nseed={}\n", self.options.quick, self.options.seed);
        for o in &self.outcomes {
            s.push_str(&o.line());
            s.push('\n');
            for c in &o.claims {
                let _ = writeln!(s, "criterion={} {}", o.id, c.summary_line());
            }
        }
        let failed: Vec<String> = self.failed().iter().map(u32::to_string).collect();
        let _ = writeln!(
            s,
            "suite={} failed=[{}]",
            if self.passed() { "pass" } else { "fail" },
            failed.join(",")
        );
        s
    }
}

/// Runs every criterion in order.
pub fn acceptance_suite(opts: &SuiteOptions) -> SuiteReport {
    SuiteReport {
        options: *opts,
        outcomes: CRITERIA.iter().map(|&(id, _)| run_criterion(id, opts)).collect(),
    }
}

pub fn run_criterion(id: u32, opts: &SuiteOptions) -> CriterionOutcome {
    let title = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map_or("unknown criterion", |c| c.1);
    let start = Instant::now();
    let result = match id {
        1 => linear_decay(opts),
        2 => oracle(opts),
        3 => single(ExperimentName::DiffusionGap, 3, opts, &[]),
        4 => single(ExperimentName::Profile, 4, opts, &[]),
        5 => expansion(opts),
        6 => single(ExperimentName::AppendixLemma, 6, opts, &[]),
        7 => semilinear_part(opts, 7),
        8 => semilinear_part(opts, 8),
        9 => single(ExperimentName::Lifespan, 9, opts, &[]),
        10 => single(ExperimentName::TestFunctional, 10, opts, &[]),
        11 => structural(opts),
        _ => Err(crate::Error::InvalidParameter(format!("no acceptance criterion {id}"))),
    };
    let elapsed = start.elapsed();
    let (claims, error) = match result {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    CriterionOutcome {
        id,
        title,
        claims,
        error,
        elapsed,
        limit: limit(id),
    }
}

/// Experiment spec with the suite's quick-mode adjustments applied.
fn spec(name: ExperimentName, opts: &SuiteOptions, overrides: &[(&str, String)]) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(name, "");
    s.seed = opts.seed;
    for (k, v) in overrides {
        s.params.set(*k, v.clone());
    }
    if opts.quick {
        s.quickened()
    } else {
        s
    }
}

fn run(name: ExperimentName, id: u32, opts: &SuiteOptions, overrides: &[(&str, String)]) -> Result<Report> {
    evaluate_shifted(&spec(name, opts, overrides), opts.shift(id))
}

fn single(name: ExperimentName, id: u32, opts: &SuiteOptions, overrides: &[(&str, String)]) -> Result<Vec<Claim>> {
    Ok(run(name, id, opts, overrides)?.claims)
}

fn prefixed(prefix: &str, claims: Vec<Claim>) -> impl Iterator<Item = Claim> + '_ {
    claims.into_iter().map(move |mut c| {
        c.label = format!("{prefix}.{}", c.label);
        c
    })
}

fn linear_decay(opts: &SuiteOptions) -> Result<Vec<Claim>> {
    let mut claims = Vec::new();
    let mut base_slope = None;
    for (tag, a, j) in [("u", "0", "0"), ("dsigma", "1", "0"), ("ut", "0", "1")] {
        let r = run(ExperimentName::LinearDecay, 1, opts, &[("a", a.into()), ("j", j.into())])?;
        if tag == "u" {
            base_slope = r.claim("slope").map(|c| c.measured);
        }
        claims.extend(prefixed(tag, r.claims));
    }
    // the same fit on a box twice as large
    let doubled = run(ExperimentName::LinearDecay, 1, opts, &[("length", "800".into()), ("points", "2048".into())])?;
    match (base_slope, doubled.claim("slope").map(|c| c.measured)) {
        (Some(a), Some(b)) => claims.push(Claim::at_most(
            "box_doubling_shift",
            "insensitivity of the fitted slope to the box size",
            (a - b).abs(),
            0.01,
            0.0,
        )),
        _ => claims.push(Claim::failed("box_doubling_shift", "box insensitivity", "fit failed")),
    }
    Ok(claims)
}

/// Closed-form multipliers against classical RK4 on the mode ODE, 200
/// seeded tuples, one in five inside the guard band around `|ξ| = 1`.
fn oracle(opts: &SuiteOptions) -> Result<Vec<Claim>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let perturb = 1.0 + 1e-6 * opts.shift(2).abs();
    let mut worst: f64 = 0.0;
    let mut guard = 0;
    for i in 0..200 {
        let sigma = rng.gen_range(1.0..2.0);
        let xi: f64 = if i % 5 == 0 {
            guard += 1;
            (1.0 + rng.gen_range(-0.9..0.9) * SINGULAR_BAND).powf(0.5 / sigma)
        } else {
            rng.gen_range(0.0..2.0)
        };
        let t = rng.gen_range(0.01..5.0);
        let (m0, m1) = multiplier_pair(xi, sigma, t);
        let steps = oracle_steps(xi, sigma, t);
        let y0 = mode_ode_oracle(xi, sigma, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), t, steps).re;
        let y1 = mode_ode_oracle(xi, sigma, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), t, steps).re;
        for (m, y) in [(m0 * perturb, y0), (m1 * perturb, y1)] {
            worst = worst.max((m - y).abs() / y.abs().max(f64::MIN_POSITIVE));
        }
    }
    Ok(vec![
        Claim::at_most("max_relative_error", "closed-form multipliers against the mode ODE", worst, 1e-8, 0.0),
        Claim::holds("guard_band_covered", "tuples inside the guard band", guard >= 20, guard as f64),
    ])
}

fn expansion(opts: &SuiteOptions) -> Result<Vec<Claim>> {
    let mut claims = Vec::new();
    for gamma in [0, 1, 2] {
        let r = run(ExperimentName::Expansion, 5, opts, &[("gamma", gamma.to_string())])?;
        claims.extend(prefixed(&format!("gamma{gamma}"), r.claims));
    }
    let expected = [0.0, 1.0, 2.0, 2.5, 3.0];
    let seq = spectrum_sequence(1.25, 4)?;
    let dev = seq
        .values
        .iter()
        .zip(expected)
        .map(|(v, e)| (v - e - opts.shift(5) * 0.5).abs())
        .fold(if seq.values.len() == 5 { 0.0 } else { f64::INFINITY }, f64::max);
    claims.push(Claim::at_most("spectrum_sigma_1.25", "spectrum of the moment expansion", dev, 0.0, 1e-12));
    Ok(claims)
}

type SemilinearKey = (bool, u64, u64);

fn semilinear_cache() -> &'static Mutex<HashMap<SemilinearKey, Report>> {
    static CACHE: OnceLock<Mutex<HashMap<SemilinearKey, Report>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Criteria 7 and 8 read different claims off the same run.
fn semilinear_part(opts: &SuiteOptions, id: u32) -> Result<Vec<Claim>> {
    let shift = opts.shift(id);
    let key = (opts.quick, opts.seed, shift.to_bits());
    // held across the run so concurrent callers share one integration
    let mut cache = semilinear_cache().lock().unwrap_or_else(|e| e.into_inner());
    let report = match cache.get(&key) {
        Some(r) => r.clone(),
        None => {
            let r = evaluate_shifted(&spec(ExperimentName::SemilinearDecay, opts, &[]), shift)?;
            cache.insert(key, r.clone());
            r
        }
    };
    drop(cache);
    let profile = |c: &Claim| c.label.starts_with("profile");
    Ok(report
        .claims
        .into_iter()
        .filter(|c| if id == 8 { profile(c) } else { !profile(c) })
        .collect())
}

fn structural(opts: &SuiteOptions) -> Result<Vec<Claim>> {
    let shift = opts.shift(11);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x11);
    let mut claims = Vec::new();
    let mut parseval: f64 = 0.0;
    let mut round_trip: f64 = 0.0;
    let mut mass_law: f64 = 0.0;
    let mut unity: f64 = 0.0;
    let chi = CutoffProfile::default();
    for (dim, points, length) in [(1, 256, 40.0), (2, 32, 20.0), (3, 16, 12.0)] {
        let grid = make_grid(dim, points, length)?;
        let f = Field::new(grid.clone(), (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let g = Field::new(grid.clone(), (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let c = to_spectral(&f);
        let physical: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * grid.cell_volume();
        parseval = parseval.max((c.l2_norm().powi(2) - physical).abs() / physical);
        let back = to_physical(&c)?;
        round_trip = round_trip.max(back.values().iter().zip(f.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let cg = to_spectral(&g);
        for t in [0.5, 3.0, 40.0] {
            let u = propagate_linear_spectral(&c, &cg, 1.5, t, 0, 0.0)?;
            let predicted = c.zero_mode() + cg.zero_mode() * (1.0 - (-t).exp()) + shift;
            let scale = c.zero_mode().norm() + cg.zero_mode().norm();
            mass_law = mass_law.max((u.zero_mode() - predicted).norm() / scale);
        }
        let sum = chi.low_part(&c).add_scaled(&chi.high_part(&c), Complex64::new(1.0, 0.0))?;
        unity = unity.max(
            sum.coefficients()
                .iter()
                .zip(c.coefficients())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        );
    }
    let unity_pointwise = (0..=400)
        .map(|k| {
            let x = k as f64 * 0.01;
            let v = chi.value(x);
            ((v + (1.0 - v)) - 1.0).abs() + if (0.0..=1.0).contains(&v) { 0.0 } else { 1.0 }
        })
        .fold(0.0, f64::max);
    claims.push(Claim::at_most("parseval", "discrete Plancherel identity", parseval, 0.0, 1e-12));
    claims.push(Claim::at_most("round_trip", "inverse of the discrete transform", round_trip, 0.0, 1e-12));
    claims.push(Claim::at_most("zero_mode_mass_law", "zero-mode law P0 + (1 - e^-t) P1", mass_law, 0.0, 1e-12));
    claims.push(Claim::at_most("partition_of_unity", "low and high parts sum to the field", unity.max(unity_pointwise), 0.0, 1e-12));

    let grid = make_grid(1, 512, 60.0)?;
    let v0 = Field::from_fn(&grid, |x| (-(x[0] - 0.3).powi(2)).exp() * (1.0 + 0.2 * x[0]));
    let mut nested = true;
    for sigma in [1.0, 1.25, 1.5] {
        let mut prev = expansion_coefficients(&v0, sigma, 0)?;
        for k in 1..5 {
            let next = expansion_coefficients(&v0, sigma, k)?;
            nested &= prev.terms.iter().all(|t| next.contains(t.ell, &t.alpha));
            nested &= next.terms.len() > prev.terms.len();
            prev = next;
        }
    }
    claims.push(Claim::holds("expansion_nesting", "terms of A_k are contained in A_(k+1)", nested, 0.0));

    let mut gaps_ok = true;
    let mut smallest_gap = f64::INFINITY;
    for sigma in [1.0, 1.1, 1.25, 1.5, 2.0, 2.7, 3.0] {
        let seq = spectrum_sequence(sigma, 12)?;
        for w in seq.values.windows(2) {
            let gap = w[1] - w[0] + shift;
            smallest_gap = smallest_gap.min(gap);
            gaps_ok &= gap > 0.0 && gap <= 1.0 + 1e-12;
        }
        gaps_ok &= seq.values[0] == 0.0;
    }
    claims.push(Claim::holds("spectrum_gaps", "0 < lambda(k+1) - lambda(k) <= 1", gaps_ok, smallest_gap));
    Ok(claims)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_and_oracle_pass_and_injection_fails() {
        let opts = SuiteOptions::default();
        for id in [2, 11, 6] {
            let o = run_criterion(id, &opts);
            assert!(o.passed(), "{}", o.line());
            let bad = run_criterion(id, &SuiteOptions { inject: Some(id), ..opts });
            assert!(!bad.passed(), "{}", bad.line());
            assert!(bad.line().starts_with(&format!("criterion={id} status=fail")));
        }
    }

    #[test]
    fn quick_spec_halves_points_and_loosens_tolerances() {
        let opts = SuiteOptions {
            quick: true,
            ..Default::default()
        };
        let s = spec(ExperimentName::LinearDecay, &opts, &[]);
        assert_eq!(s.params.get::<usize>("points").unwrap(), 512);
        assert!((s.params.get::<f64>("tol").unwrap() - 0.15).abs() < 1e-12);
        let s = spec(ExperimentName::LinearDecay, &opts, &[("points", "2048".into())]);
        assert_eq!(s.params.get::<usize>("points").unwrap(), 1024);
    }

    #[test]
    fn unknown_criterion_is_an_error() {
        let o = run_criterion(42, &SuiteOptions::default());
        assert!(!o.passed());
        assert!(o.error.is_some());
    }
}

//! Duhamel integration of `u_tt + (-Δ)^σ u + u_t + (-Δ)^σ u_t = |u|^p`.
//!
//! The linear flow is applied exactly through the Fourier multipliers, so the
//! stiffness of `(-Δ)^σ u_t` never enters the step size. Over one step of
//! length `h` the nonlinearity is interpolated linearly between its values at
//! the two ends and integrated exactly against the propagator kernel:
//!
//! ```text
//! û(t+h)   = m0(h) û + m1(h) û_t + a0 N̂(t) + a1 N̂(t+h)
//! û_t(t+h) = m0'(h) û + m1'(h) û_t + b0 N̂(t) + b1 N̂(t+h)
//! a0 = ∫_0^h m1(r) r/h dr,   a1 = ∫_0^h m1(r) (1 - r/h) dr   (b: same with m1')
//! ```
//!
//! `N̂(t+h)` is taken from a predictor that freezes `N̂` over the step. The
//! local error is `O(h³)`, the scheme is second order. Near blow-up the step
//! is halved until `h` times the local growth rate stays below [`NONLINEAR_STEP_LIMIT`].
//! Time is counted in integer ticks of `dt / 2^MAX_REFINEMENT` and a coarser
//! step is only taken from a point aligned to it, so every run passes exactly
//! through the multiples of `dt`.

use std::collections::HashMap;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ensure_same_grid, to_physical_unchecked, to_spectral, Field, GridSpec, SpectralField};
use crate::norms::{fit_log_log, gl_panel, log_spaced, LogLogFit};
use crate::par;
use crate::propagator::{multipliers_for_symbol, symbol};

/// Bound on `h λ` enforced by step halving, where `λ` is the growth rate of
/// `y'' + y' = q y` with `q = p · coeff · |u|_∞^{p-1}`.
pub const NONLINEAR_STEP_LIMIT: f64 = 0.25;

/// Deepest step halving before a run is declared blown up.
pub const MAX_REFINEMENT: u32 = 40;

/// Spectral truncation applied to `|u|^p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dealias {
    /// 2/3 rule when `p <= 3`, none otherwise.
    Auto,
    TwoThirds,
    Off,
}

#[derive(Clone, Debug)]
pub struct SemilinearConfig {
    pub sigma: f64,
    pub p: f64,
    pub grid: GridSpec,
    pub dt: f64,
    pub t_end: f64,
    pub blowup_threshold: f64,
    /// Data scale: the run starts from `(ε u0, ε u1)`.
    pub epsilon: f64,
    /// Coefficient in front of `|u|^p`; zero recovers the linear flow.
    pub nonlinear_coeff: f64,
    pub dealias: Dealias,
    /// Times at which norms (and optionally snapshots) are recorded.
    pub sample_times: Vec<f64>,
    pub keep_snapshots: bool,
}

impl SemilinearConfig {
    /// Defaults: `dt = 0.05`, `t_end = 200`, threshold `1e6`, `ε = 1`,
    /// 48 log-spaced samples on `[1, t_end]`.
    pub fn new(grid: GridSpec, sigma: f64, p: f64) -> Self {
        let t_end = 200.0;
        Self {
            sigma,
            p,
            grid,
            dt: 0.05,
            t_end,
            blowup_threshold: 1e6,
            epsilon: 1.0,
            nonlinear_coeff: 1.0,
            dealias: Dealias::Auto,
            sample_times: log_spaced(1.0, t_end, 48),
            keep_snapshots: true,
        }
    }

    /// Replaces the horizon and the sample schedule with `count` log-spaced times on `[t_first, t_end]`.
    pub fn with_schedule(mut self, t_first: f64, t_end: f64, count: usize) -> Self {
        self.t_end = t_end;
        self.sample_times = log_spaced(t_first, t_end, count);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.sigma >= 1.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be >= 1, got {}", self.sigma));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad(format!("p must exceed 1, got {}", self.p));
        }
        // The linear part is exact, so the only a-priori bound is 0.25 * min(1, 1).
        if !(self.dt > 0.0 && self.dt <= 0.25) {
            return bad(format!("dt must lie in (0, 0.25], got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.blowup_threshold > 0.0) {
            return bad(format!("blow-up threshold must be positive, got {}", self.blowup_threshold));
        }
        if !self.epsilon.is_finite() || !self.nonlinear_coeff.is_finite() {
            return bad("epsilon and nonlinear coefficient must be finite".into());
        }
        Ok(())
    }

    fn dealias_active(&self) -> bool {
        match self.dealias {
            Dealias::Auto => self.p <= 3.0,
            Dealias::TwoThirds => true,
            Dealias::Off => false,
        }
    }
}

/// `|u|^p` pointwise; overflow yields `inf`, which the solver treats as blow-up.
pub fn nonlinearity(u: &Field, p: f64) -> Field {
    let mut out = u.clone();
    for v in out.values_mut() {
        *v = if p == 2.0 { *v * *v } else { v.abs().powf(p) };
    }
    out
}

/// Zeroes every coefficient with `|k_a| > N/3` on some axis.
pub fn dealias_two_thirds(c: &mut SpectralField) {
    let grid = c.grid().clone();
    let cut = (grid.points_per_axis() / 3) as i64;
    let dim = grid.dim();
    par::for_each_indexed_mut(c.coefficients_mut(), |i, v| {
        let k = grid.wavenumbers(i);
        if k[..dim].iter().any(|&k| k.abs() > cut) {
            *v = Complex64::new(0.0, 0.0);
        }
    });
}

/// `(e^z - 1)/z` and `(e^z - 1 - z)/z²`.
fn phi12(z: f64) -> (f64, f64) {
    if z.abs() < 0.5 {
        let (mut t1, mut t2) = (1.0, 0.5);
        let (mut s1, mut s2) = (1.0, 0.5);
        for k in 1..30 {
            t1 *= z / (k + 1) as f64;
            t2 *= z / (k + 2) as f64;
            s1 += t1;
            s2 += t2;
        }
        (s1, s2)
    } else {
        let e = z.exp_m1();
        (e / z, (e - z) / (z * z))
    }
}

/// Per-mode coefficients for one step of length `h`.
#[derive(Clone, Copy, Debug, Default)]
struct ModeWeights {
    m0: f64,
    m1: f64,
    dm0: f64,
    dm1: f64,
    a0: f64,
    a1: f64,
    b0: f64,
    b1: f64,
}

fn mode_weights(mu: f64, h: f64) -> ModeWeights {
    let (m0, m1) = multipliers_for_symbol(mu, h, 0);
    let (dm0, dm1) = multipliers_for_symbol(mu, h, 1);
    let (a0, a1, b0, b1) = if mu * h <= 1.0 || (mu - 1.0).abs() < 0.1 {
        // Smooth on the scale of the step: Gauss–Legendre on the multipliers themselves.
        let m1_at = |r: f64| multipliers_for_symbol(mu, r, 0).1;
        let dm1_at = |r: f64| multipliers_for_symbol(mu, r, 1).1;
        (
            gl_panel(0.0, h, |r| m1_at(r) * r / h),
            gl_panel(0.0, h, |r| m1_at(r) * (1.0 - r / h)),
            gl_panel(0.0, h, |r| dm1_at(r) * r / h),
            gl_panel(0.0, h, |r| dm1_at(r) * (1.0 - r / h)),
        )
    } else {
        // ∫ e^{-λr}(1 - r/h) = h φ2(-λh),  ∫ e^{-λr} r/h = h (φ1 - φ2)(-λh)
        let (p1m, p2m) = phi12(-mu * h);
        let (p1o, p2o) = phi12(-h);
        let (e0m, e1m) = (h * p2m, h * (p1m - p2m));
        let (e0o, e1o) = (h * p2o, h * (p1o - p2o));
        let inv = 1.0 / (1.0 - mu);
        (
            (e1m - e1o) * inv,
            (e0m - e0o) * inv,
            (e1o - mu * e1m) * inv,
            (e0o - mu * e0m) * inv,
        )
    };
    ModeWeights {
        m0,
        m1,
        dm0,
        dm1,
        a0,
        a1,
        b0,
        b1,
    }
}

/// Spectral state `(û, û_t)` at a recorded time.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub u: SpectralField,
    pub ut: SpectralField,
}

/// Trajectory summary of a semilinear run.
#[derive(Clone, Debug, Default)]
pub struct SolutionLog {
    pub times: Vec<f64>,
    pub l2_norms: Vec<f64>,
    pub linf_norms: Vec<f64>,
    /// `‖u(t)‖_p^p`.
    pub lp_mass: Vec<f64>,
    /// `‖|D|^σ u(t)‖_{L²}`.
    pub dsigma_norms: Vec<f64>,
    /// `‖u_t(t)‖_{L²}`.
    pub ut_norms: Vec<f64>,
    /// `∫_0^t ‖u‖_p^p dτ` at each sample.
    pub cumulative_nonlinear_mass: Vec<f64>,
    /// First time `‖u‖_∞` exceeded the threshold or became non-finite.
    pub blown_up: Option<f64>,
    /// `∫ (u0 + u1)` of the scaled data.
    pub initial_mass: f64,
    /// Every step: `(t, ‖u(t)‖_p^p)`.
    pub step_trace: Vec<(f64, f64)>,
    /// `‖u‖_∞` at the times of `step_trace`.
    pub sup_trace: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    pub final_time: f64,
}

impl SolutionLog {
    /// `∫_0^{final} ‖u‖_p^p` (trapezoid over all steps).
    pub fn total_nonlinear_mass(&self) -> f64 {
        self.step_trace
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[1].1 + w[0].1))
            .sum()
    }

    /// `∫_{T/2}^{T} ‖u‖_p^p`: the Cauchy tail of the cumulative mass.
    pub fn cumulative_tail(&self) -> f64 {
        let half = 0.5 * self.final_time;
        self.step_trace
            .windows(2)
            .filter(|w| w[0].0 >= half)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[1].1 + w[0].1))
            .sum()
    }

    /// Estimate of `∫_T^∞ ‖u‖_p^p` from a power-law fit of the last half of
    /// the trace; infinite when the fitted decay is not integrable.
    pub fn nonlinear_tail_bound(&self) -> f64 {
        let half = 0.5 * self.final_time;
        let (ts, gs): (Vec<f64>, Vec<f64>) = self
            .step_trace
            .iter()
            .filter(|(t, g)| *t >= half && *t > 0.0 && *g > 0.0)
            .copied()
            .unzip();
        match fit_log_log(&ts, &gs) {
            Ok(LogLogFit { slope, .. }) if slope < -1.0 => {
                let (t, g) = self.step_trace[self.step_trace.len() - 1];
                g * t / (-slope - 1.0)
            }
            _ => f64::INFINITY,
        }
    }

    /// `M = ∫(u0 + u1) + ∫_0^T ∫ |u|^p`, truncated at the final time.
    pub fn mass_estimate(&self) -> f64 {
        self.initial_mass + self.total_nonlinear_mass()
    }

    /// First time `‖u‖_∞` exceeded `threshold`, for thresholds up to the run's own.
    pub fn first_crossing(&self, threshold: f64) -> Option<f64> {
        self.step_trace
            .iter()
            .zip(&self.sup_trace)
            .find(|(_, &s)| s > threshold)
            .map(|((t, _), _)| *t)
            .or(self.blown_up)
    }

    pub fn snapshot_near(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }

    /// CSV with columns `t,l2,linf,lp_mass,cum_mass`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,l2,linf,lp_mass,cum_mass")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                self.times[i],
                self.l2_norms[i],
                self.linf_norms[i],
                self.lp_mass[i],
                self.cumulative_nonlinear_mass[i]
            )?;
        }
        Ok(())
    }
}

/// Receives the physical solution after every accepted step (and at `t = 0`).
pub trait Observer {
    fn observe(&mut self, t: f64, u: &Field);
}

impl Observer for () {
    fn observe(&mut self, _: f64, _: &Field) {}
}

impl<F: FnMut(f64, &Field)> Observer for F {
    fn observe(&mut self, t: f64, u: &Field) {
        self(t, u)
    }
}

/// Exponential-integrator state for one run.
pub struct DuhamelStepper {
    cfg: SemilinearConfig,
    mu: Vec<f64>,
    weights: HashMap<u32, Vec<ModeWeights>>,
    u_hat: SpectralField,
    ut_hat: SpectralField,
    u: Field,
    t: f64,
    ticks: u64,
}

impl DuhamelStepper {
    pub fn new(u0: &Field, u1: &Field, cfg: &SemilinearConfig) -> Result<Self> {
        cfg.validate()?;
        ensure_same_grid(u0.grid(), &cfg.grid)?;
        ensure_same_grid(u1.grid(), &cfg.grid)?;
        let u = u0.scaled(cfg.epsilon);
        let mu = cfg
            .grid
            .xi_magnitudes()
            .iter()
            .map(|&xi| symbol(xi, cfg.sigma))
            .collect();
        Ok(Self {
            cfg: cfg.clone(),
            mu,
            weights: HashMap::new(),
            u_hat: to_spectral(&u),
            ut_hat: to_spectral(&u1.scaled(cfg.epsilon)),
            u,
            t: 0.0,
            ticks: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn solution(&self) -> &Field {
        &self.u
    }

    pub fn spectral_state(&self) -> (&SpectralField, &SpectralField) {
        (&self.u_hat, &self.ut_hat)
    }

    fn weights_for(&mut self, level: u32) -> &[ModeWeights] {
        let h = self.cfg.dt / f64::powi(2.0, level as i32);
        let mu = &self.mu;
        self.weights
            .entry(level)
            .or_insert_with(|| par::map(mu, |&m| mode_weights(m, h)))
    }

    fn forcing(&self, u: &Field) -> SpectralField {
        let mut f = nonlinearity(u, self.cfg.p);
        if self.cfg.nonlinear_coeff != 1.0 {
            for v in f.values_mut() {
                *v *= self.cfg.nonlinear_coeff;
            }
        }
        let mut c = to_spectral(&f);
        if self.cfg.dealias_active() {
            dealias_two_thirds(&mut c);
        }
        c
    }

    /// Finest level the current time is aligned to.
    fn alignment_level(&self) -> u32 {
        MAX_REFINEMENT.saturating_sub(self.ticks.trailing_zeros())
    }

    /// Refinement level needed at the current state.
    pub fn refinement_level(&self) -> u32 {
        // growth rate of y'' + y' = q y with q the linearized nonlinearity
        let q = self.cfg.p * self.cfg.nonlinear_coeff.abs() * self.u.max_abs().powf(self.cfg.p - 1.0);
        let rate = 2.0 * q / (1.0 + (1.0 + 4.0 * q).sqrt());
        let mut level = 0;
        let mut h = self.cfg.dt;
        while h * rate > NONLINEAR_STEP_LIMIT && level <= MAX_REFINEMENT {
            h *= 0.5;
            level += 1;
        }
        level
    }

    /// Advances by `dt / 2^level`.
    pub fn step(&mut self, level: u32) {
        let n_now = self.forcing(&self.u);
        let w = self.weights_for(level).to_vec();
        let grid = self.cfg.grid.clone();
        let u_hat = self.u_hat.coefficients();
        let ut_hat = self.ut_hat.coefficients();
        let nn = n_now.coefficients();

        let predicted = SpectralField::new(
            grid.clone(),
            par::map_range(grid.len(), |i| {
                let w = &w[i];
                w.m0 * u_hat[i] + w.m1 * ut_hat[i] + (w.a0 + w.a1) * nn[i]
            }),
        )
        .expect("grid length");
        let n_next = self.forcing(&to_physical_unchecked(&predicted));
        let nx = n_next.coefficients();

        let next: Vec<(Complex64, Complex64)> = par::map_range(grid.len(), |i| {
            let w = &w[i];
            (
                w.m0 * u_hat[i] + w.m1 * ut_hat[i] + w.a0 * nn[i] + w.a1 * nx[i],
                w.dm0 * u_hat[i] + w.dm1 * ut_hat[i] + w.b0 * nn[i] + w.b1 * nx[i],
            )
        });
        let (u_next, ut_next): (Vec<_>, Vec<_>) = next.into_iter().unzip();
        self.u_hat = SpectralField::new(grid.clone(), u_next).expect("grid length");
        self.ut_hat = SpectralField::new(grid, ut_next).expect("grid length");
        self.u = to_physical_unchecked(&self.u_hat);
        self.ticks += 1 << (MAX_REFINEMENT - level);
        let whole = self.ticks >> MAX_REFINEMENT;
        let frac = self.ticks & ((1 << MAX_REFINEMENT) - 1);
        self.t = whole as f64 * self.cfg.dt + frac as f64 * (self.cfg.dt / (1u64 << MAX_REFINEMENT) as f64);
    }
}

fn lp_mass(u: &Field, p: f64) -> f64 {
    u.values().iter().map(|v| v.abs().powf(p)).sum::<f64>() * u.grid().cell_volume()
}

fn dsigma_norm(c: &SpectralField, sigma: f64) -> f64 {
    c.apply_radial(|_, xi| xi.powf(sigma)).l2_norm()
}

/// Runs to `t_end` or blow-up, recording norms at the sample schedule.
pub fn run_semilinear(u0: &Field, u1: &Field, cfg: &SemilinearConfig) -> Result<SolutionLog> {
    run_semilinear_observed(u0, u1, cfg, &mut ())
}

/// [`run_semilinear`] with an observer called after every step.
pub fn run_semilinear_observed(
    u0: &Field,
    u1: &Field,
    cfg: &SemilinearConfig,
    observer: &mut dyn Observer,
) -> Result<SolutionLog> {
    let mut stepper = DuhamelStepper::new(u0, u1, cfg)?;
    let p = cfg.p;
    let mut log = SolutionLog {
        initial_mass: (stepper.u_hat.zero_mode() + stepper.ut_hat.zero_mode()).re,
        ..Default::default()
    };
    // Samples and the horizon are snapped to multiples of dt.
    let end_steps = (cfg.t_end / cfg.dt).round().max(1.0) as u64;
    let mut schedule: Vec<u64> = cfg
        .sample_times
        .iter()
        .filter(|&&t| t >= 0.0)
        .map(|&t| ((t / cfg.dt).round() as u64).min(end_steps) << MAX_REFINEMENT)
        .collect();
    schedule.sort_unstable();
    schedule.dedup();
    let end_ticks = end_steps << MAX_REFINEMENT;
    let mut next_sample = 0usize;
    let mut cumulative = 0.0;
    let mut g_prev = lp_mass(&stepper.u, p);
    log.step_trace.push((0.0, g_prev));
    log.sup_trace.push(stepper.u.max_abs());
    observer.observe(0.0, &stepper.u);

    let record = |log: &mut SolutionLog, st: &DuhamelStepper, g: f64, cumulative: f64| {
        log.times.push(st.t);
        log.l2_norms.push(st.u_hat.l2_norm());
        log.linf_norms.push(st.u.max_abs());
        log.lp_mass.push(g);
        log.dsigma_norms.push(dsigma_norm(&st.u_hat, st.cfg.sigma));
        log.ut_norms.push(st.ut_hat.l2_norm());
        log.cumulative_nonlinear_mass.push(cumulative);
        if st.cfg.keep_snapshots {
            log.snapshots.push(Snapshot {
                t: st.t,
                u: st.u_hat.clone(),
                ut: st.ut_hat.clone(),
            });
        }
    };
    while next_sample < schedule.len() && schedule[next_sample] == 0 {
        record(&mut log, &stepper, g_prev, 0.0);
        next_sample += 1;
    }

    while stepper.ticks < end_ticks {
        let level = stepper.refinement_level();
        if level > MAX_REFINEMENT {
            log.blown_up = Some(stepper.t);
            break;
        }
        stepper.step(level.max(stepper.alignment_level()));
        log.steps += 1;
        let sup = stepper.u.max_abs();
        let g = lp_mass(&stepper.u, p);
        let t = stepper.t;
        if !sup.is_finite() || sup > cfg.blowup_threshold || !g.is_finite() {
            log.blown_up = Some(t);
            break;
        }
        cumulative += 0.5 * (t - log.step_trace[log.step_trace.len() - 1].0) * (g + g_prev);
        g_prev = g;
        log.step_trace.push((t, g));
        log.sup_trace.push(sup);
        observer.observe(t, &stepper.u);
        while next_sample < schedule.len() && schedule[next_sample] <= stepper.ticks {
            record(&mut log, &stepper, g, cumulative);
            next_sample += 1;
        }
    }
    log.final_time = stepper.t;
    Ok(log)
}

/// `‖∂_t^j |D|^{kσ}(u(t) − M G_σ(t))‖_{L²}` at a recorded state.
pub fn profile_deviation(snapshot: &Snapshot, m_estimate: f64, sigma: f64, j: u32, k: u32) -> Result<f64> {
    if j > 1 || k > 1 || (j, k) == (1, 1) {
        return Err(Error::InvalidParameter(format!(
            "(j, k) must be (0,0), (0,1) or (1,0), got ({j}, {k})"
        )));
    }
    let t = snapshot.t;
    if t < 1.0 {
        return Err(Error::InvalidParameter(format!("profile deviation needs t >= 1, got {t}")));
    }
    let src = if j == 0 { &snapshot.u } else { &snapshot.ut };
    let grid = src.grid();
    let mags = grid.xi_magnitudes();
    let a = k as f64 * sigma;
    let mut s = 0.0;
    for (i, c) in src.coefficients().iter().enumerate() {
        let mu = symbol(mags[i], sigma);
        let heat = (-t * mu).exp() * if j == 1 { -mu } else { 1.0 };
        s += (mags[i].powf(a) * (c - m_estimate * heat)).norm_sqr();
    }
    Ok((s / grid.box_length().powi(grid.dim() as i32)).sqrt())
}

/// Exponent `2σ(p−1) / (2σ − n(p−1))` in `T_ε ≲ ε^{-exponent}`.
pub fn predicted_lifespan_exponent(n: usize, sigma: f64, p: f64) -> Result<f64> {
    let nf = n as f64;
    if !(p > 1.0 && p < 1.0 + 2.0 * sigma / nf) {
        return Err(Error::Hypothesis(format!(
            "lifespan scaling needs 1 < p < 1 + 2 sigma / n = {}, got {p}",
            1.0 + 2.0 * sigma / nf
        )));
    }
    Ok(2.0 * sigma * (p - 1.0) / (2.0 * sigma - nf * (p - 1.0)))
}

#[derive(Clone, Debug)]
pub struct LifespanReport {
    pub threshold: f64,
    pub epsilons: Vec<f64>,
    /// Blow-up time, or the hard cap for censored runs.
    pub lifespans: Vec<f64>,
    pub censored: Vec<bool>,
    /// `-slope` of `ln T_ε` against `ln ε` over uncensored runs, when at least four exist.
    pub fitted_exponent: Option<f64>,
    pub predicted_exponent: f64,
}

impl LifespanReport {
    /// CSV with columns `epsilon,T,censored`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epsilon,T,censored")?;
        for i in 0..self.epsilons.len() {
            writeln!(w, "{:.12e},{:.12e},{}", self.epsilons[i], self.lifespans[i], self.censored[i])?;
        }
        Ok(())
    }

    /// Whether uncensored lifespans are non-increasing as `ε` grows.
    pub fn monotone(&self) -> bool {
        let mut pairs: Vec<(f64, f64)> = self
            .epsilons
            .iter()
            .zip(&self.lifespans)
            .zip(&self.censored)
            .filter(|(_, &c)| !c)
            .map(|((&e, &t), _)| (e, t))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

/// Runs data `(0, ε u1_shape)` for each `ε` until blow-up (or `template.t_end`,
/// which acts as the hard cap) and fits the lifespan exponent.
pub fn lifespan_probe(u1_shape: &Field, template: &SemilinearConfig, epsilons: &[f64]) -> Result<LifespanReport> {
    let mut reports = lifespan_sweep(u1_shape, template, epsilons, &[template.blowup_threshold])?;
    Ok(reports.remove(0))
}

/// [`lifespan_probe`] evaluated at several blow-up thresholds. Each `ε` is
/// integrated once up to the largest threshold; smaller thresholds read their
/// first crossing from the same trajectory.
pub fn lifespan_sweep(
    u1_shape: &Field,
    template: &SemilinearConfig,
    epsilons: &[f64],
    thresholds: &[f64],
) -> Result<Vec<LifespanReport>> {
    let n = template.grid.dim();
    let predicted = predicted_lifespan_exponent(n, template.sigma, template.p)?;
    if u1_shape.values().iter().any(|&v| v < 0.0) || !(u1_shape.integral() > 0.0) {
        return Err(Error::Hypothesis("u1 shape must be non-negative with positive integral".into()));
    }
    if epsilons.len() < 4 || epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParameter("need at least four positive epsilons".into()));
    }
    let (lo, hi) = epsilons
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(l, h), &e| (l.min(e), h.max(e)));
    if hi / lo < 8.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!("epsilons span a factor {} < 8", hi / lo)));
    }
    if thresholds.is_empty() || thresholds.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter("need at least one positive threshold".into()));
    }
    let top = thresholds.iter().copied().fold(0.0, f64::max);
    let zero = Field::zeros(&template.grid);
    let runs = par::map(epsilons, |&eps| {
        let mut cfg = template.clone();
        cfg.epsilon = eps;
        cfg.blowup_threshold = top;
        cfg.keep_snapshots = false;
        cfg.sample_times.clear();
        run_semilinear(&zero, u1_shape, &cfg)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    thresholds
        .iter()
        .map(|&threshold| {
            let mut lifespans = Vec::with_capacity(runs.len());
            let mut censored = Vec::with_capacity(runs.len());
            for log in &runs {
                match log.first_crossing(threshold) {
                    Some(t) => {
                        lifespans.push(t);
                        censored.push(false);
                    }
                    None => {
                        lifespans.push(log.final_time);
                        censored.push(true);
                    }
                }
            }
            let (es, ts): (Vec<f64>, Vec<f64>) = epsilons
                .iter()
                .zip(&lifespans)
                .zip(&censored)
                .filter(|(_, &c)| !c)
                .map(|((&e, &t), _)| (e, t))
                .unzip();
            let fitted_exponent = if es.len() >= 4 {
                Some(-fit_log_log(&es, &ts)?.slope)
            } else {
                None
            };
            Ok(LifespanReport {
                threshold,
                epsilons: epsilons.to_vec(),
                lifespans,
                censored,
                fitted_exponent,
                predicted_exponent: predicted,
            })
        })
        .collect()
}

/// Smooth step: 1 on `s <= 1/2`, 0 on `s >= 1`, `C^∞` in between.
pub fn bump(s: f64) -> f64 {
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let a = f(1.0 - s);
        a / (a + f(s - 0.5))
    }
}

/// Accumulates `I_R = ∫∫ |u|^p η(t/R^{2σ}) φ(x/R)` for several radii by
/// trapezoidal quadrature over observed times.
#[derive(Clone, Debug)]
pub struct TestFunctional {
    sigma: f64,
    p: f64,
    radii: Vec<f64>,
    values: Vec<f64>,
    last: Option<(f64, Vec<f64>)>,
    covered: f64,
}

impl TestFunctional {
    pub fn new(radii: &[f64], sigma: f64, p: f64) -> Self {
        Self {
            sigma,
            p,
            radii: radii.to_vec(),
            values: vec![0.0; radii.len()],
            last: None,
            covered: 0.0,
        }
    }

    fn integrands(&self, t: f64, u: &Field) -> Vec<f64> {
        let grid = u.grid();
        let w = grid.cell_volume();
        self.radii
            .iter()
            .map(|&r| {
                let eta = bump(t / r.powf(2.0 * self.sigma));
                if eta == 0.0 {
                    return 0.0;
                }
                let s: f64 = u
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v.abs().powf(self.p) * bump(grid.radius(i) / r))
                    .sum();
                eta * s * w
            })
            .collect()
    }

    /// `I_R` for each radius; fails if observations stop before `R^{2σ}`.
    pub fn finish(&self) -> Result<Vec<f64>> {
        for &r in &self.radii {
            let need = r.powf(2.0 * self.sigma);
            if self.covered < need * (1.0 - 1e-9) {
                return Err(Error::InvalidParameter(format!(
                    "trajectory ends at t = {} but I_R with R = {r} needs t up to {need}",
                    self.covered
                )));
            }
        }
        Ok(self.values.clone())
    }
}

impl Observer for TestFunctional {
    fn observe(&mut self, t: f64, u: &Field) {
        let cur = self.integrands(t, u);
        if let Some((t0, prev)) = &self.last {
            let h = t - t0;
            for ((acc, a), b) in self.values.iter_mut().zip(prev).zip(&cur) {
                *acc += 0.5 * h * (a + b);
            }
        }
        self.covered = t;
        self.last = Some((t, cur));
    }
}

/// `I_R` over a stored trajectory of `(t, u(t))` pairs in time order.
pub fn test_functional(trajectory: &[(f64, Field)], radius: f64, sigma: f64, p: f64) -> Result<f64> {
    let mut acc = TestFunctional::new(&[radius], sigma, p);
    for (t, u) in trajectory {
        acc.observe(*t, u);
    }
    Ok(acc.finish()?[0])
}

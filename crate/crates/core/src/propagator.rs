//! Exact solution operator of the linear doubly damped problem
//!
//! ```text
//! u_tt + (-Δ)^σ u + u_t + (-Δ)^σ u_t = 0,   u(0) = u0,  u_t(0) = u1,
//! ```
//!
//! as a diagonal Fourier multiplier. Writing `μ = |ξ|^{2σ}` the characteristic
//! roots are `-μ` and `-1`, and
//!
//! ```text
//! û(t) = m0(t) û0 + m1(t) û1,
//! m1(t) = (e^{-tμ} - e^{-t}) / (1 - μ) = e^{-t} ∫_0^t e^{-s(μ-1)} ds,
//! m0(t) = e^{-t} + m1(t).
//! ```
//!
//! `|ξ| = 1` is a removable singularity; inside a guard band around `μ = 1` the
//! integral form is summed as a power series.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ensure_same_grid, to_physical, to_spectral, Field, SpectralField};

/// Half-width of the band `|μ - 1| < SINGULAR_BAND` evaluated by series.
pub const SINGULAR_BAND: f64 = 1e-4;

/// Minimum number of series terms in the guard band.
const SERIES_MIN_TERMS: usize = 10;

/// Characteristic roots of `λ² + (1 + μ)λ + μ = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DampedRoots {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

/// Roots from the factorization `(λ + μ)(λ + 1)`; no discriminant is formed.
pub fn char_roots(xi_mag: f64, sigma: f64) -> DampedRoots {
    let mu = symbol(xi_mag, sigma);
    DampedRoots {
        lambda_plus: (-mu).max(-1.0),
        lambda_minus: (-mu).min(-1.0),
    }
}

/// `|ξ|^{2σ}`.
#[inline]
pub fn symbol(xi_mag: f64, sigma: f64) -> f64 {
    xi_mag.powf(2.0 * sigma)
}

/// `(e^z - 1) / z` by its Taylor series.
fn phi1_series(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= z / (k + 1) as f64;
        sum += term;
        if k >= SERIES_MIN_TERMS && term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Guard-band route: `m1 = e^{-t} t φ1(-t(μ-1))` with `φ1` summed as a series.
fn m1_series(mu: f64, t: f64) -> f64 {
    (-t).exp() * t * phi1_series(-t * (mu - 1.0))
}

/// Closed-form route, valid away from `μ = 1`.
fn m1_closed(mu: f64, t: f64) -> f64 {
    let d = mu - 1.0;
    // expm1 form is exact in relative terms while neither exponential under/overflows.
    if t < 700.0 && -t * d < 700.0 {
        (-t).exp() * (-t * d).exp_m1() / -d
    } else {
        ((-t * mu).exp() - (-t).exp()) / (1.0 - mu)
    }
}

/// `m1` and its time derivative at symbol value `mu`.
fn m1_parts(mu: f64, t: f64) -> (f64, f64) {
    if t == 0.0 {
        return (0.0, 1.0);
    }
    let d = mu - 1.0;
    let e_mu = (-t * mu).exp();
    if d.abs() < SINGULAR_BAND && (t * d).abs() <= 1.0 {
        let m1 = m1_series(mu, t);
        return (m1, e_mu - m1);
    }
    let m1 = m1_closed(mu, t);
    let dm1 = ((-t).exp() - mu * e_mu) / (1.0 - mu);
    (m1, dm1)
}

/// Multipliers of `∂_t^j û` in terms of `(û0, û1)` at symbol value `mu`.
pub fn multipliers_for_symbol(mu: f64, t: f64, j: u32) -> (f64, f64) {
    let (m1, dm1) = m1_parts(mu, t);
    let e1 = (-t).exp();
    match j {
        0 => (e1 + m1, m1),
        1 => (-e1 + dm1, dm1),
        _ => panic!("only j = 0 and j = 1 are supported"),
    }
}

/// `(m0, m1)` with `û(t, ξ) = m0 û0(ξ) + m1 û1(ξ)`.
pub fn multiplier_pair(xi_mag: f64, sigma: f64, t: f64) -> (f64, f64) {
    multipliers_for_symbol(symbol(xi_mag, sigma), t, 0)
}

/// Time derivative of [`multiplier_pair`].
pub fn multiplier_pair_dt(xi_mag: f64, sigma: f64, t: f64) -> (f64, f64) {
    multipliers_for_symbol(symbol(xi_mag, sigma), t, 1)
}

fn check_order(j: u32, a: f64, t: f64) -> Result<()> {
    if j > 1 {
        return Err(Error::InvalidParameter(format!("time derivative order {j} not in {{0,1}}")));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("|D|^a needs a >= 0, got {a}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")));
    }
    Ok(())
}

/// `∂_t^j |D|^a u(t)` in frequency space.
pub fn propagate_linear_spectral(
    u0: &SpectralField,
    u1: &SpectralField,
    sigma: f64,
    t: f64,
    j: u32,
    a: f64,
) -> Result<SpectralField> {
    ensure_same_grid(u0.grid(), u1.grid())?;
    check_order(j, a, t)?;
    let grid = u0.grid().clone();
    let mags = grid.xi_magnitudes();
    let c0 = u0.coefficients();
    let c1 = u1.coefficients();
    let coeffs = crate::par::map_range(grid.len(), |i| {
        let xi = mags[i];
        let (m0, m1) = multipliers_for_symbol(symbol(xi, sigma), t, j);
        // 0^0 = 1 keeps the zero mode for a = 0.
        xi.powf(a) * (c0[i] * m0 + c1[i] * m1)
    });
    SpectralField::new(grid, coeffs)
}

/// `∂_t^j |D|^a u(t, ·)` for the linear problem with data `(u0, u1)`.
pub fn propagate_linear(u0: &Field, u1: &Field, sigma: f64, t: f64, j: u32, a: f64) -> Result<Field> {
    ensure_same_grid(u0.grid(), u1.grid())?;
    let c = propagate_linear_spectral(&to_spectral(u0), &to_spectral(u1), sigma, t, j, a)?;
    to_physical(&c)
}

/// Smooth radial cutoff: 1 on `|ξ| <= r0`, 0 on `|ξ| >= r1`, cosine-squared ramp between.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffProfile {
    inner_radius: f64,
    outer_radius: f64,
}

impl Default for CutoffProfile {
    fn default() -> Self {
        Self {
            inner_radius: 0.5,
            outer_radius: 0.75,
        }
    }
}

impl CutoffProfile {
    pub fn new(inner_radius: f64, outer_radius: f64) -> Result<Self> {
        if !(inner_radius > 0.0 && inner_radius < outer_radius && outer_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cutoff radii must satisfy 0 < r0 < r1, got ({inner_radius}, {outer_radius})"
            )));
        }
        Ok(Self {
            inner_radius,
            outer_radius,
        })
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn value(&self, xi_mag: f64) -> f64 {
        if xi_mag <= self.inner_radius {
            1.0
        } else if xi_mag >= self.outer_radius {
            0.0
        } else {
            let s = (xi_mag - self.inner_radius) / (self.outer_radius - self.inner_radius);
            let c = (0.5 * std::f64::consts::PI * s).cos();
            c * c
        }
    }

    pub fn low_part(&self, c: &SpectralField) -> SpectralField {
        c.apply_radial(|_, xi| self.value(xi))
    }

    pub fn high_part(&self, c: &SpectralField) -> SpectralField {
        c.apply_radial(|_, xi| 1.0 - self.value(xi))
    }
}

/// Splits `f` into `F^{-1}(χ f̂)` and `F^{-1}((1-χ) f̂)`.
pub fn lowhigh_decompose(f: &Field, chi: &CutoffProfile) -> Result<(Field, Field)> {
    let c = to_spectral(f);
    Ok((to_physical(&chi.low_part(&c))?, to_physical(&chi.high_part(&c))?))
}

/// Integrates `y'' + (1 + μ) y' + μ y = 0` from `(û0, û1)` to time `t` with
/// `steps` classical Runge–Kutta steps. Independent of the closed form.
pub fn mode_ode_oracle(
    xi_mag: f64,
    sigma: f64,
    u0hat: Complex64,
    u1hat: Complex64,
    t: f64,
    steps: usize,
) -> Complex64 {
    let mu = symbol(xi_mag, sigma);
    let rhs = |y: Complex64, v: Complex64| (v, -mu * y - (1.0 + mu) * v);
    let h = t / steps.max(1) as f64;
    let (mut y, mut v) = (u0hat, u1hat);
    for _ in 0..steps {
        let (k1y, k1v) = rhs(y, v);
        let (k2y, k2v) = rhs(y + 0.5 * h * k1y, v + 0.5 * h * k1v);
        let (k3y, k3v) = rhs(y + 0.5 * h * k2y, v + 0.5 * h * k2v);
        let (k4y, k4v) = rhs(y + h * k3y, v + h * k3v);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    y
}

/// Step count keeping the oracle's global error near `1e-11` relative:
/// the stiff rate times the step stays below `2e-3`.
pub fn oracle_steps(xi_mag: f64, sigma: f64, t: f64) -> usize {
    let rate = symbol(xi_mag, sigma).max(1.0);
    ((t * rate / 2e-3).ceil() as usize).max(1000)
}

/// Debug dump with columns `xi_mag,t,m0,m1`.
pub fn write_multiplier_table<W: Write>(
    mut w: W,
    xi_values: &[f64],
    times: &[f64],
    sigma: f64,
) -> Result<()> {
    writeln!(w, "xi_mag,t,m0,m1")?;
    for &t in times {
        for &xi in xi_values {
            let (m0, m1) = multiplier_pair(xi, sigma, t);
            writeln!(w, "{xi:.15e},{t:.15e},{m0:.15e},{m1:.15e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn roots_examples() {
        let r = char_roots(0.5, 1.0);
        assert_eq!((r.lambda_plus, r.lambda_minus), (-0.25, -1.0));
        for sigma in [1.0, 1.5, 3.0] {
            let r = char_roots(1.0, sigma);
            assert_eq!((r.lambda_plus, r.lambda_minus), (-1.0, -1.0));
        }
        let r = char_roots(2.0, 1.0);
        assert_eq!((r.lambda_plus, r.lambda_minus), (-1.0, -4.0));
    }

    #[test]
    fn roots_solve_characteristic_equation() {
        for &xi in &[0.0, 0.3, 0.99, 1.0, 1.7, 3.0] {
            let mu = symbol(xi, 1.25);
            let r = char_roots(xi, 1.25);
            for l in [r.lambda_plus, r.lambda_minus] {
                assert!((l * l + (1.0 + mu) * l + mu).abs() < 1e-12 * (1.0 + mu * mu));
                assert!(l <= 0.0);
            }
            assert!(r.lambda_plus >= r.lambda_minus);
        }
    }

    #[test]
    fn multiplier_examples() {
        for sigma in [1.0, 1.5] {
            for t in [0.3, 1.0, 7.0] {
                let (m0, m1) = multiplier_pair(0.0, sigma, t);
                assert!((m0 - 1.0).abs() < 1e-15);
                assert!((m1 - (1.0 - (-t).exp())).abs() < 1e-15);
            }
        }
        let (m0, m1) = multiplier_pair(1.0, 1.0, 2.0);
        let e2 = (-2.0f64).exp();
        assert!((m0 - 3.0 * e2).abs() < 1e-15);
        assert!((m1 - 2.0 * e2).abs() < 1e-15);
        assert!((m0 - 0.40601).abs() < 1e-5);
        assert!((m1 - 0.27067).abs() < 1e-5);
        for &xi in &[0.0, 0.4, 1.0, 2.5] {
            assert_eq!(multiplier_pair(xi, 1.0, 0.0), (1.0, 0.0));
            assert_eq!(multiplier_pair_dt(xi, 1.0, 0.0), (0.0, 1.0));
        }
    }

    #[test]
    fn oracle_examples() {
        let y = mode_ode_oracle(0.0, 1.0, c(1.0), c(0.0), 1.0, oracle_steps(0.0, 1.0, 1.0));
        assert!((y.re - 1.0).abs() < 1e-10);
        let y = mode_ode_oracle(1.0, 1.0, c(0.0), c(1.0), 2.0, oracle_steps(1.0, 1.0, 2.0));
        assert!((y.re - 2.0 * (-2.0f64).exp()).abs() < 1e-9);
        let y = mode_ode_oracle(0.5, 1.0, c(1.0), c(1.0), 3.0, oracle_steps(0.5, 1.0, 3.0));
        let (m0, m1) = multiplier_pair(0.5, 1.0, 3.0);
        assert!((y.re - (m0 + m1)).abs() < 1e-9);
    }

    #[test]
    fn derivative_multipliers_match_finite_differences() {
        let h = 1e-5;
        for &xi in &[0.0, 0.3, 0.999_99, 1.0, 1.3, 2.2] {
            for &t in &[0.5, 2.0, 6.0] {
                let (a0, a1) = multiplier_pair(xi, 1.25, t + h);
                let (b0, b1) = multiplier_pair(xi, 1.25, t - h);
                let (d0, d1) = multiplier_pair_dt(xi, 1.25, t);
                assert!(((a0 - b0) / (2.0 * h) - d0).abs() < 1e-8);
                assert!(((a1 - b1) / (2.0 * h) - d1).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn branch_continuity_across_guard_band() {
        for &t in &[0.05, 1.0, 5.0, 30.0] {
            for k in -40..=40 {
                let d = k as f64 * 0.05 * SINGULAR_BAND;
                if d.abs() < 1e-6 {
                    continue;
                }
                let mu = 1.0 + d;
                let series = m1_series(mu, t);
                let closed = m1_closed(mu, t);
                assert!((series - closed).abs() < 1e-9 * (1.0 + closed.abs()), "{t} {d}");
            }
        }
    }

    #[test]
    fn m1_nonnegative_and_decays() {
        for &xi in &[0.1, 0.8, 1.0, 1.5, 3.0] {
            let mut prev_late = f64::INFINITY;
            for k in 0..60 {
                let t = 0.5 * k as f64;
                let (_, m1) = multiplier_pair(xi, 1.0, t);
                assert!(m1 >= 0.0);
                if t > 20.0 {
                    assert!(m1 <= prev_late);
                    prev_late = m1;
                }
            }
            assert!(multiplier_pair(xi, 1.0, 2000.0).1 < 1e-6);
        }
    }

    #[test]
    fn oracle_equivalence_random_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sigmas = [1.0, 1.25, 1.5, 2.0];
        for i in 0..40 {
            let sigma = sigmas[i % 4];
            let xi = if i % 5 == 0 {
                // inside the guard band
                (1.0 + rng.gen_range(-0.9..0.9) * SINGULAR_BAND).powf(0.5 / sigma)
            } else {
                rng.gen_range(0.0..2.0)
            };
            let t = rng.gen_range(0.0..5.0);
            let (m0, m1) = multiplier_pair(xi, sigma, t);
            let steps = oracle_steps(xi, sigma, t);
            let y0 = mode_ode_oracle(xi, sigma, c(1.0), c(0.0), t, steps).re;
            let y1 = mode_ode_oracle(xi, sigma, c(0.0), c(1.0), t, steps).re;
            assert!((m0 - y0).abs() < 1e-8 * (1.0 + m0.abs()), "{xi} {sigma} {t}");
            assert!((m1 - y1).abs() < 1e-8 * (1.0 + m1.abs()), "{xi} {sigma} {t}");
        }
    }

    #[test]
    fn propagate_initial_conditions() {
        let g = make_grid(1, 256, 40.0).unwrap();
        let u0 = Field::gaussian(&g, 1.0, 1.0);
        let u1 = Field::from_fn(&g, |x| (-(x[0] - 1.0).powi(2)).exp() * 0.5);
        let p = propagate_linear(&u0, &u1, 1.0, 0.0, 0, 0.0).unwrap();
        let d = propagate_linear(&u0, &u1, 1.0, 0.0, 1, 0.0).unwrap();
        for i in 0..g.len() {
            assert!((p.values()[i] - u0.values()[i]).abs() < 1e-12);
            assert!((d.values()[i] - u1.values()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_mode_mass_law() {
        let g = make_grid(1, 512, 60.0).unwrap();
        let u0 = Field::gaussian(&g, 1.0, 1.0);
        let u1 = Field::zeros(&g);
        for &t in &[0.0, 0.5, 3.0, 40.0] {
            let u = propagate_linear(&u0, &u1, 1.0, t, 0, 0.0).unwrap();
            assert!((u.integral() - PI.sqrt()).abs() < 1e-10);
        }
        let u1 = Field::gaussian(&g, 0.5, 2.0);
        let (p0, p1) = (to_spectral(&u0).zero_mode().re, to_spectral(&u1).zero_mode().re);
        for &t in &[0.1, 2.0, 17.0] {
            let c = propagate_linear_spectral(&to_spectral(&u0), &to_spectral(&u1), 1.5, t, 0, 0.0).unwrap();
            let expect = p0 + (1.0 - (-t).exp()) * p1;
            assert!((c.zero_mode().re - expect).abs() < 1e-12 * expect.abs());
        }
    }

    #[test]
    fn lowhigh_examples() {
        let g = make_grid(1, 64, 20.0).unwrap();
        let chi = CutoffProfile::default();
        let constant = Field::from_fn(&g, |_| 2.0);
        let (lo, hi) = lowhigh_decompose(&constant, &chi).unwrap();
        assert!(lo.values().iter().all(|v| (v - 2.0).abs() < 1e-13));
        assert!(hi.max_abs() < 1e-13);
        // mode k = 5 has |ξ| = 2π·5/20 ≈ 1.57 > r1
        let wave = Field::from_fn(&g, |x| (2.0 * PI * 5.0 / 20.0 * x[0]).cos());
        let (lo, hi) = lowhigh_decompose(&wave, &chi).unwrap();
        assert!(lo.max_abs() < 1e-13);
        for (a, b) in hi.values().iter().zip(wave.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn cutoff_is_monotone_in_unit_interval() {
        let chi = CutoffProfile::default();
        let mut prev = 1.0;
        for k in 0..200 {
            let v = chi.value(k as f64 * 0.005);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev);
            prev = v;
        }
        assert!(CutoffProfile::new(0.8, 0.5).is_err());
        assert!(CutoffProfile::new(0.0, 0.5).is_err());
    }

    #[test]
    fn rejects_bad_orders() {
        let g = make_grid(1, 8, 1.0).unwrap();
        let z = Field::zeros(&g);
        assert!(propagate_linear(&z, &z, 1.0, 1.0, 2, 0.0).is_err());
        assert!(propagate_linear(&z, &z, 1.0, 1.0, 0, -1.0).is_err());
        assert!(propagate_linear(&z, &z, 1.0, -1.0, 0, 0.0).is_err());
        let other = Field::zeros(&make_grid(1, 16, 1.0).unwrap());
        assert!(matches!(propagate_linear(&z, &other, 1.0, 1.0, 0, 0.0), Err(Error::GridMismatch)));
    }

    #[test]
    fn multiplier_table_columns() {
        let mut out = Vec::new();
        write_multiplier_table(&mut out, &[0.0, 1.0], &[1.0], 1.0).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s.lines().next().unwrap(), "xi_mag,t,m0,m1");
        assert_eq!(s.lines().count(), 3);
    }
}

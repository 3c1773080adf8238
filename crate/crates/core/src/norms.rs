//! Discrete norms, log-log decay regression, and the table of predicted
//! decay exponents.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::Field;

/// Relative weight allowed on the outermost grid layer before a quadrature is
/// flagged as unreliable.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// A quadrature value plus the share of it carried by the box boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureEstimate {
    pub value: f64,
    /// Boundary-layer contribution over the total absolute contribution.
    pub boundary_ratio: f64,
}

impl QuadratureEstimate {
    pub fn reliable(&self) -> bool {
        self.boundary_ratio <= BOUNDARY_TOL
    }
}

/// `(sum |f|^q h^n)^(1/q)`, or `max |f|` for infinite `q`.
pub fn lq_norm(f: &Field, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidParameter(format!("L^q norm needs q >= 1, got {q}")));
    }
    if q.is_infinite() {
        return Ok(f.max_abs());
    }
    let w = f.grid().cell_volume();
    let s: f64 = if q == 1.0 {
        f.values().iter().map(|v| v.abs()).sum()
    } else if q == 2.0 {
        f.values().iter().map(|v| v * v).sum()
    } else {
        f.values().iter().map(|v| v.abs().powf(q)).sum()
    };
    Ok((s * w).powf(1.0 / q))
}

/// `sum (1 + |x|)^γ |f| h^n`.
pub fn weighted_l1_norm(f: &Field, gamma: f64) -> Result<QuadratureEstimate> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("weight exponent must be >= 0, got {gamma}")));
    }
    let grid = f.grid();
    let mut total = 0.0;
    let mut boundary = 0.0;
    for (i, v) in f.values().iter().enumerate() {
        let c = (1.0 + grid.radius(i)).powf(gamma) * v.abs();
        total += c;
        if grid.on_boundary(i) {
            boundary += c;
        }
    }
    let w = grid.cell_volume();
    Ok(QuadratureEstimate {
        value: total * w,
        boundary_ratio: if total > 0.0 { boundary / total } else { 0.0 },
    })
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
}

impl LogLogFit {
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

/// Log-log regression with no sampling requirements beyond two positive points.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return Err(Error::Fit(format!("{} abscissae but {} values", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::Fit("need at least two samples".into()));
    }
    if let Some(i) = xs.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Fit(format!("abscissa {} is not positive", xs[i])));
    }
    if let Some(i) = ys.iter().position(|&y| !(y > 0.0 && y.is_finite())) {
        return Err(Error::Fit(format!(
            "value {} at sample {i} is not positive and finite",
            ys[i]
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(LogLogFit {
        slope,
        intercept,
        rms_residual: (ss / n).sqrt(),
    })
}

/// Fitted power law `value ≈ e^intercept t^slope` over a time window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub window: (f64, f64),
    pub sample_count: usize,
}

impl DecayFit {
    pub fn predict(&self, t: f64) -> f64 {
        (self.intercept + self.slope * t.ln()).exp()
    }
}

/// Minimum samples for [`fit_decay_exponent`].
pub const MIN_DECAY_SAMPLES: usize = 8;

/// Decay exponent of `values` against `times`.
///
/// Requires at least eight strictly increasing times spanning a decade and
/// strictly positive values; a non-positive value usually means blow-up or
/// underflow inside the window.
pub fn fit_decay_exponent(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() < MIN_DECAY_SAMPLES {
        return Err(Error::Fit(format!(
            "need at least {MIN_DECAY_SAMPLES} samples, got {}",
            times.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Fit("times must be strictly increasing".into()));
    }
    let (t_min, t_max) = (times[0], times[times.len() - 1]);
    if !(t_min > 0.0) || t_max < 10.0 * t_min * (1.0 - 1e-12) {
        return Err(Error::Fit(format!(
            "window [{t_min}, {t_max}] does not span a decade"
        )));
    }
    let fit = fit_log_log(times, values)?;
    Ok(DecayFit {
        slope: fit.slope,
        intercept: fit.intercept,
        rms_residual: fit.rms_residual,
        window: (t_min, t_max),
        sample_count: times.len(),
    })
}

/// `count` points from `a` to `b` evenly spaced in `ln t`.
pub fn log_spaced(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                a
            } else if i + 1 == count {
                b
            } else {
                (la + (lb - la) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// A decay claim whose exponent can be looked up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateQuery {
    /// `(L^m ∩ L²) – L²` estimate of `∂_t^j |D|^a u`.
    LinearL2 { n: usize, sigma: f64, m: f64, a: f64, j: u32 },
    /// `L² – L²` estimate of `∂_t^j |D|^a u`.
    LinearDeriv { n: usize, sigma: f64, a: f64, j: u32 },
    /// `L^p – L^q` estimate of the low-frequency gap to the diffusion flow.
    DiffusionGap { n: usize, sigma: f64, p: f64, q: f64, a: f64, j: u32 },
    /// `‖u(t) − (P₀+P₁) G_σ(t)‖_{L²}`.
    FirstOrderProfile { n: usize, sigma: f64 },
    /// Residual of the order-`γ` moment expansion.
    Expansion { n: usize, sigma: f64, gamma: f64 },
    /// `‖∂_t^j |D|^a G_σ(t)‖_{L²}`.
    GSigma { n: usize, sigma: f64, a: f64, j: u32 },
    /// Small-data semilinear solution, `a ∈ {0, σ}`.
    Semilinear { n: usize, sigma: f64, m: f64, p: f64, a: f64, j: u32 },
}

fn hyp(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Hypothesis(what()))
    }
}

fn common(n: usize, sigma: f64) -> Result<()> {
    hyp(n >= 1, || format!("space dimension n >= 1, got {n}"))?;
    hyp(sigma >= 1.0 && sigma.is_finite(), || format!("sigma >= 1, got {sigma}"))
}

fn order(a: f64, j: u32) -> Result<()> {
    hyp(a >= 0.0 && a.is_finite(), || format!("a >= 0, got {a}"))?;
    hyp(j <= 1, || format!("j in {{0,1}}, got {j}"))
}

fn lebesgue_m(m: f64) -> Result<()> {
    hyp((1.0..2.0).contains(&m), || format!("m in [1,2), got {m}"))
}

/// Predicted exponent `r` in `value ≲ t^r`.
pub fn predicted_exponent(query: RateQuery) -> Result<f64> {
    match query {
        RateQuery::LinearL2 { n, sigma, m, a, j } => {
            common(n, sigma)?;
            lebesgue_m(m)?;
            order(a, j)?;
            Ok(-(n as f64 / (2.0 * sigma)) * (1.0 / m - 0.5) - a / (2.0 * sigma) - j as f64)
        }
        RateQuery::LinearDeriv { n, sigma, a, j } => {
            common(n, sigma)?;
            order(a, j)?;
            Ok(-a / (2.0 * sigma) - j as f64)
        }
        RateQuery::DiffusionGap { n, sigma, p, q, a, j } => {
            common(n, sigma)?;
            order(a, j)?;
            hyp(p >= 1.0 && p <= q, || format!("1 <= p <= q <= inf, got p={p}, q={q}"))?;
            let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
            Ok(-(n as f64 / (2.0 * sigma)) * (1.0 / p - inv_q) - a / (2.0 * sigma) - j as f64 - 1.0)
        }
        RateQuery::FirstOrderProfile { n, sigma } => {
            common(n, sigma)?;
            Ok(-(n as f64) / (4.0 * sigma) - 1.0 / (2.0 * sigma))
        }
        RateQuery::Expansion { n, sigma, gamma } => {
            common(n, sigma)?;
            hyp(gamma >= 0.0 && gamma.is_finite(), || format!("gamma >= 0, got {gamma}"))?;
            Ok(-(n as f64) / (4.0 * sigma) - gamma / (2.0 * sigma))
        }
        RateQuery::GSigma { n, sigma, a, j } => {
            common(n, sigma)?;
            order(a, j)?;
            Ok(-(n as f64) / (4.0 * sigma) - a / (2.0 * sigma) - j as f64)
        }
        RateQuery::Semilinear { n, sigma, m, p, a, j } => {
            common(n, sigma)?;
            lebesgue_m(m)?;
            order(a, j)?;
            hyp(
                (a == 0.0 && j <= 1) || (a == sigma && j == 0),
                || format!("(a, j) must be (0,0), (sigma,0) or (0,1), got ({a}, {j})"),
            )?;
            let nf = n as f64;
            hyp(p > 1.0 + 2.0 * m * sigma / nf, || {
                format!("p > 1 + 2 m sigma / n = {}, got {p}", 1.0 + 2.0 * m * sigma / nf)
            })?;
            if nf <= 2.0 * sigma {
                hyp(p >= 2.0 / m, || format!("2/m <= p for n <= 2 sigma, got p={p}"))?;
            } else if nf <= 4.0 * sigma / (2.0 - m) {
                let upper = nf / (nf - 2.0 * sigma);
                hyp(p >= 2.0 / m && p <= upper, || {
                    format!("2/m <= p <= n/(n-2 sigma) = {upper}, got p={p}")
                })?;
            } else {
                return Err(Error::Hypothesis(format!(
                    "n = {n} exceeds 4 sigma / (2 - m) = {}",
                    4.0 * sigma / (2.0 - m)
                )));
            }
            Ok(-(nf / (2.0 * sigma)) * (1.0 / m - 0.5) - a / (2.0 * sigma) - j as f64)
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton on `P_n`).
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// `∫_a^b f` by 16-point Gauss–Legendre.
pub(crate) fn gl_panel(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gl16();
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>() * half
}

fn gamma_half_integer(two_x: usize) -> f64 {
    // Γ(x) for x = two_x / 2 via Γ(1/2) = √π, Γ(1) = 1, Γ(x+1) = xΓ(x).
    let (mut x, mut g) = if two_x.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while 2.0 * x < two_x as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface measure of the unit sphere in `ℝⁿ`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half_integer(n)
}

/// `∫_{|ξ|≤1} |ξ|^β e^{-c|ξ|^α t} dξ` by radial quadrature.
///
/// After `w = r^{n+β}` the integrand is `e^{-ct w^{α/(n+β)}}` on `[0,1]`; it is
/// integrated on dyadic panels refining toward `w = 0`.
pub fn appendix_integral(n: usize, alpha: f64, beta: f64, c: f64, t: f64) -> Result<f64> {
    let s = n as f64 + beta;
    if n == 0 || !(s > 0.0) {
        return Err(Error::Hypothesis(format!("n + beta > 0 with n >= 1, got n={n}, beta={beta}")));
    }
    if !(alpha > 0.0 && c > 0.0 && t >= 0.0) {
        return Err(Error::Hypothesis(format!(
            "alpha > 0, c > 0, t >= 0 required, got alpha={alpha}, c={c}, t={t}"
        )));
    }
    let power = alpha / s;
    let f = |w: f64| (-c * t * w.powf(power)).exp();
    let mut total = 0.0;
    let mut hi = 1.0;
    for _ in 0..80 {
        let lo = 0.5 * hi;
        total += gl_panel(lo, hi, f);
        hi = lo;
    }
    // [0, 2^-80]: integrand is at most 1.
    total += hi * f(0.5 * hi);
    Ok(sphere_area(n) / s * total)
}

/// Fits the decay of [`appendix_integral`] over `t_values`.
pub fn appendix_integral_check(
    n: usize,
    alpha: f64,
    beta: f64,
    c: f64,
    t_values: &[f64],
) -> Result<DecayFit> {
    let values = t_values
        .iter()
        .map(|&t| appendix_integral(n, alpha, beta, c, t))
        .collect::<Result<Vec<_>>>()?;
    fit_decay_exponent(t_values, &values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, to_spectral};
    use proptest::prelude::*;

    fn gaussian_1d() -> Field {
        Field::gaussian(&make_grid(1, 512, 40.0).unwrap(), 1.0, 1.0)
    }

    #[test]
    fn lq_examples() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let ones = Field::from_fn(&g, |_| 1.0);
        assert!((lq_norm(&ones, 1.0).unwrap() - 10.0).abs() < 1e-12);
        let f = gaussian_1d();
        // (∫ e^{-2x²})^{1/2} = (π/2)^{1/4}
        assert!((lq_norm(&f, 2.0).unwrap() - (PI / 2.0).powf(0.25)).abs() < 1e-12);
        assert!((lq_norm(&f, 2.0).unwrap() - 1.11951).abs() < 1e-5);
        assert_eq!(lq_norm(&f, f64::INFINITY).unwrap(), f.max_abs());
        assert!(lq_norm(&f, 0.5).is_err());
    }

    #[test]
    fn weighted_examples() {
        let f = gaussian_1d();
        let w0 = weighted_l1_norm(&f, 0.0).unwrap();
        assert!((w0.value - PI.sqrt()).abs() < 1e-10);
        assert!(w0.reliable());
        // ∫ (1+|x|) e^{-x²} = √π + 1; the kink at 0 limits the rule to second order
        let fine = Field::gaussian(&make_grid(1, 4096, 16.0).unwrap(), 1.0, 1.0);
        let w1 = weighted_l1_norm(&fine, 1.0).unwrap();
        assert!((w1.value - 2.77245).abs() < 1e-5);
        let z = Field::zeros(f.grid());
        assert_eq!(weighted_l1_norm(&z, 2.0).unwrap().value, 0.0);
        // a field living at the box edge is flagged
        let edge = Field::from_fn(f.grid(), |x| if x[0].abs() > 19.0 { 1.0 } else { 0.0 });
        assert!(!weighted_l1_norm(&edge, 1.0).unwrap().reliable());
    }

    #[test]
    fn fit_exact_power_law() {
        let t = log_spaced(1.0, 100.0, 10);
        let v: Vec<f64> = t.iter().map(|t| t.powf(-0.5)).collect();
        let fit = fit_decay_exponent(&t, &v).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-10);
        assert_eq!(fit.sample_count, 10);
        assert_eq!(fit.window, (1.0, 100.0));
        let c = vec![2.5; 10];
        assert!(fit_decay_exponent(&t, &c).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn fit_noisy_power_law() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let t = log_spaced(1.0, 1000.0, 24);
        let v: Vec<f64> = t
            .iter()
            .map(|t| 3.0 * t.powf(-1.25) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            .collect();
        let fit = fit_decay_exponent(&t, &v).unwrap();
        assert!((fit.slope + 1.25).abs() < 0.02);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let t = log_spaced(1.0, 100.0, 10);
        let mut v: Vec<f64> = t.iter().map(|t| 1.0 / t).collect();
        v[4] = 0.0;
        assert!(matches!(fit_decay_exponent(&t, &v), Err(Error::Fit(_))));
        let short = log_spaced(1.0, 100.0, 5);
        assert!(fit_decay_exponent(&short, &[1.0; 5]).is_err());
        let narrow = log_spaced(1.0, 5.0, 10);
        assert!(fit_decay_exponent(&narrow, &[1.0; 10]).is_err());
        let mut unsorted = t.clone();
        unsorted.swap(2, 3);
        assert!(fit_decay_exponent(&unsorted, &[1.0; 10]).is_err());
    }

    #[test]
    fn predicted_examples() {
        let q = RateQuery::LinearL2 { n: 1, sigma: 1.0, m: 1.0, a: 0.0, j: 0 };
        assert_eq!(predicted_exponent(q).unwrap(), -0.25);
        let q = RateQuery::DiffusionGap { n: 1, sigma: 1.0, p: 1.0, q: 2.0, a: 0.0, j: 0 };
        assert_eq!(predicted_exponent(q).unwrap(), -1.25);
        let q = RateQuery::FirstOrderProfile { n: 2, sigma: 1.0 };
        assert_eq!(predicted_exponent(q).unwrap(), -1.0);
        let q = RateQuery::LinearL2 { n: 1, sigma: 1.0, m: 1.0, a: 1.0, j: 0 };
        assert_eq!(predicted_exponent(q).unwrap(), -0.75);
        let q = RateQuery::LinearL2 { n: 1, sigma: 1.0, m: 1.0, a: 0.0, j: 1 };
        assert_eq!(predicted_exponent(q).unwrap(), -1.25);
        let q = RateQuery::Semilinear { n: 1, sigma: 1.0, m: 1.0, p: 4.0, a: 1.0, j: 0 };
        assert_eq!(predicted_exponent(q).unwrap(), -0.75);
        let q = RateQuery::DiffusionGap { n: 2, sigma: 1.0, p: 1.0, q: f64::INFINITY, a: 0.0, j: 1 };
        assert_eq!(predicted_exponent(q).unwrap(), -3.0);
    }

    #[test]
    fn predicted_rejects_out_of_range() {
        let bad = [
            RateQuery::LinearL2 { n: 1, sigma: 1.0, m: 2.0, a: 0.0, j: 0 },
            RateQuery::LinearL2 { n: 1, sigma: 0.5, m: 1.0, a: 0.0, j: 0 },
            RateQuery::DiffusionGap { n: 1, sigma: 1.0, p: 2.0, q: 1.0, a: 0.0, j: 0 },
            RateQuery::GSigma { n: 1, sigma: 1.0, a: 0.0, j: 2 },
            RateQuery::Expansion { n: 1, sigma: 1.0, gamma: -1.0 },
            // critical exponent: p must exceed 1 + 2σ/n = 3
            RateQuery::Semilinear { n: 1, sigma: 1.0, m: 1.0, p: 3.0, a: 0.0, j: 0 },
            RateQuery::Semilinear { n: 1, sigma: 1.0, m: 1.0, p: 4.0, a: 0.5, j: 0 },
            RateQuery::Semilinear { n: 3, sigma: 1.0, m: 1.0, p: 4.0, a: 0.0, j: 0 },
        ];
        for q in bad {
            assert!(matches!(predicted_exponent(q), Err(Error::Hypothesis(_))), "{q:?}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((i - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn appendix_integral_closed_forms() {
        // n=1, α=2, β=0: 2∫_0^1 e^{-tr²} dr = √(π/t) erf(√t); at t=0 the value is 2.
        assert!((appendix_integral(1, 2.0, 0.0, 1.0, 0.0).unwrap() - 2.0).abs() < 1e-13);
        // n=2, α=2, β=0: 2π ∫_0^1 r e^{-tr²} dr = π(1 - e^{-t})/t
        for t in [0.5, 3.0, 40.0] {
            let v = appendix_integral(2, 2.0, 0.0, 1.0, t).unwrap();
            assert!((v - PI * (1.0 - (-t).exp()) / t).abs() < 1e-13 * v);
        }
        // singular weight: n=1, β=-1/2, α=1, t=0 → 2 ∫ r^{-1/2} = 4
        assert!((appendix_integral(1, 1.0, -0.5, 1.0, 0.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(appendix_integral(1, 2.0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn appendix_bounded_for_small_t() {
        for &(n, a, b) in &[(1usize, 2.0, 0.0), (2, 2.0, 1.0), (3, 2.5, -1.0)] {
            let v0 = appendix_integral(n, a, b, 1.0, 0.0).unwrap();
            for k in 1..=10 {
                let v = appendix_integral(n, a, b, 1.0, k as f64 / 10.0).unwrap();
                assert!(v <= v0);
            }
        }
    }

    #[test]
    fn parseval_matches_lq() {
        let f = gaussian_1d();
        let spectral = to_spectral(&f).l2_norm();
        let direct = lq_norm(&f, 2.0).unwrap();
        assert!((spectral - direct).abs() < 1e-10 * direct);
    }

    proptest! {
        #[test]
        fn lq_triangle_and_homogeneity(
            a in proptest::collection::vec(-5.0f64..5.0, 16),
            b in proptest::collection::vec(-5.0f64..5.0, 16),
            s in -4.0f64..4.0,
            q in prop_oneof![Just(1.0), Just(2.0), Just(3.5), Just(f64::INFINITY)],
        ) {
            let g = make_grid(1, 16, 3.0).unwrap();
            let fa = Field::new(g.clone(), a).unwrap();
            let fb = Field::new(g, b).unwrap();
            let sum = fa.add_scaled(&fb, 1.0).unwrap();
            let na = lq_norm(&fa, q).unwrap();
            let nb = lq_norm(&fb, q).unwrap();
            prop_assert!(lq_norm(&sum, q).unwrap() <= (na + nb) * (1.0 + 1e-12));
            let scaled = lq_norm(&fa.scaled(s), q).unwrap();
            prop_assert!((scaled - s.abs() * na).abs() <= 1e-12 * (1.0 + na * s.abs()));
        }

        #[test]
        fn predicted_is_pure(n in 1usize..4, sigma in 1.0f64..3.0, gamma in 0.0f64..4.0) {
            let q = RateQuery::Expansion { n, sigma, gamma };
            prop_assert_eq!(predicted_exponent(q).unwrap(), predicted_exponent(q).unwrap());
        }
    }
}

//! Anomalous diffusion flow `v_t + (-Δ)^σ v = 0`, its kernel `G_σ`, and the
//! moment expansion of the damped solution around it.
//!
//! The expansion polynomial of order `k` is
//!
//! ```text
//! A_k(ξ) = Σ_{2σℓ + |α| ≤ λ(k)} |ξ|^{2σℓ} M_α(v0) (iξ)^α,
//! M_α(f) = (-1)^{|α|} / α! ∫ x^α f(x) dx,
//! ```
//!
//! where `λ(0) < λ(1) < …` enumerates `{2σℓ + j : ℓ, j ≥ 0}`. It is the Taylor
//! data of `v̂0(ξ) / (1 - |ξ|^{2σ})` at the origin.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ensure_same_grid, to_physical, to_spectral, Field, GridSpec, SpectralField};
use crate::norms::{QuadratureEstimate, BOUNDARY_TOL};
use crate::propagator::{propagate_linear_spectral, symbol};

/// Tolerance for identifying two exponents `2σℓ + j`.
pub const SPECTRUM_DEDUP_TOL: f64 = 1e-12;

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma >= 1.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("sigma must be >= 1, got {sigma}")))
    }
}

/// Increasing enumeration `λ(0), …, λ(k_max)` of `{2σℓ + j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumSequence {
    pub sigma: f64,
    pub values: Vec<f64>,
}

impl SpectrumSequence {
    pub fn get(&self, k: usize) -> Option<f64> {
        self.values.get(k).copied()
    }

    /// The unique `k` with `λ(k) <= γ < λ(k+1)`.
    pub fn index_for(&self, gamma: f64) -> Option<usize> {
        let k = self
            .values
            .iter()
            .rposition(|&l| l <= gamma + SPECTRUM_DEDUP_TOL)?;
        (k + 1 < self.values.len()).then_some(k)
    }
}

/// The `k_max + 1` smallest distinct values of `2σℓ + j`.
pub fn spectrum_sequence(sigma: f64, k_max: usize) -> Result<SpectrumSequence> {
    check_sigma(sigma)?;
    // ℕ₀ is contained in the set, so λ(k) <= k and enumerating up to k_max suffices.
    let bound = k_max as f64;
    let mut all = Vec::new();
    let mut ell = 0usize;
    while 2.0 * sigma * ell as f64 <= bound + SPECTRUM_DEDUP_TOL {
        let base = 2.0 * sigma * ell as f64;
        let mut j = 0usize;
        while base + j as f64 <= bound + SPECTRUM_DEDUP_TOL {
            all.push(base + j as f64);
            j += 1;
        }
        ell += 1;
    }
    all.sort_by(f64::total_cmp);
    let mut values: Vec<f64> = Vec::with_capacity(k_max + 1);
    for v in all {
        if values.last().is_none_or(|&l| v - l > SPECTRUM_DEDUP_TOL) {
            values.push(v);
        }
    }
    values.truncate(k_max + 1);
    Ok(SpectrumSequence { sigma, values })
}

/// Multi-index `α ∈ ℕ₀ⁿ`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(parts: Vec<usize>) -> Self {
        Self(parts)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    /// `|α|`.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// `α!`.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&a| (1..=a).map(|k| k as f64).product::<f64>())
            .product()
    }

    /// `x^α`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&a, &v)| v.powi(a as i32)).product()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// All multi-indices of dimension `dim` with `|α| <= max_order`, by order then lexicographically.
pub fn multi_indices(dim: usize, max_order: usize) -> Vec<MultiIndex> {
    fn fill(prefix: &mut Vec<usize>, dim: usize, remaining: usize, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == dim {
            prefix.push(remaining);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for a in (0..=remaining).rev() {
            prefix.push(a);
            fill(prefix, dim, remaining - a, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for order in 0..=max_order {
        fill(&mut Vec::with_capacity(dim), dim, order, &mut out);
    }
    out
}

/// `M_α(f)` by quadrature, with the boundary share of `|x|^{|α|} |f|`.
pub fn moment(f: &Field, alpha: &MultiIndex) -> Result<QuadratureEstimate> {
    let grid = f.grid();
    if alpha.parts().len() != grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "multi-index {alpha:?} does not match dimension {}",
            grid.dim()
        )));
    }
    let order = alpha.order();
    let dim = grid.dim();
    let mut sum = 0.0;
    let mut abs_total = 0.0;
    let mut abs_boundary = 0.0;
    for (i, &v) in f.values().iter().enumerate() {
        let x = grid.position(i);
        sum += alpha.monomial(&x[..dim]) * v;
        let weight = grid.radius(i).powi(order as i32) * v.abs();
        abs_total += weight;
        if grid.on_boundary(i) {
            abs_boundary += weight;
        }
    }
    let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(QuadratureEstimate {
        value: sign / alpha.factorial() * sum * grid.cell_volume(),
        boundary_ratio: if abs_total > 0.0 { abs_boundary / abs_total } else { 0.0 },
    })
}

/// All moments with `|α| <= [γ]`.
#[derive(Clone, Debug)]
pub struct MomentTable {
    pub gamma: f64,
    pub entries: Vec<(MultiIndex, QuadratureEstimate)>,
}

pub fn moment_table(f: &Field, gamma: f64) -> Result<MomentTable> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
    }
    let max_order = gamma.floor() as usize;
    let entries = multi_indices(f.grid().dim(), max_order)
        .into_iter()
        .map(|a| moment(f, &a).map(|m| (a, m)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentTable { gamma, entries })
}

/// One term `|ξ|^{2σℓ} M_α (iξ)^α`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionTerm {
    pub ell: usize,
    pub alpha: MultiIndex,
    pub coeff: f64,
}

/// The polynomial `A_k^{σ,v0}` as a list of terms.
#[derive(Clone, Debug)]
pub struct ExpansionCoefficients {
    pub sigma: f64,
    pub k: usize,
    pub lambda_k: f64,
    pub terms: Vec<ExpansionTerm>,
    /// Moments whose quadrature carried weight on the box boundary.
    pub unreliable: Vec<MultiIndex>,
}

impl ExpansionCoefficients {
    pub fn reliable(&self) -> bool {
        self.unreliable.is_empty()
    }

    /// `A_k(ξ)` for a frequency vector of the expansion's dimension.
    pub fn evaluate(&self, xi: &[f64]) -> Complex64 {
        let mag = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut acc = Complex64::new(0.0, 0.0);
        for term in &self.terms {
            let radial = mag.powf(2.0 * self.sigma * term.ell as f64);
            let order = term.alpha.order();
            let i_pow = match order % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
            acc += i_pow * (radial * term.coeff * term.alpha.monomial(xi));
        }
        acc
    }

    /// Whether `(ℓ, α)` appears among the terms.
    pub fn contains(&self, ell: usize, alpha: &MultiIndex) -> bool {
        self.terms.iter().any(|t| t.ell == ell && &t.alpha == alpha)
    }

    /// CSV with columns `ell,alpha_1..alpha_n,coeff`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = self.terms.first().map_or(1, |t| t.alpha.parts().len());
        let alpha_cols: Vec<String> = (1..=dim).map(|a| format!("alpha_{a}")).collect();
        writeln!(w, "ell,{},coeff", alpha_cols.join(","))?;
        for t in &self.terms {
            let parts: Vec<String> = t.alpha.parts().iter().map(|a| a.to_string()).collect();
            writeln!(w, "{},{},{:.15e}", t.ell, parts.join(","), t.coeff)?;
        }
        Ok(())
    }
}

/// Terms `(ℓ, α, M_α(v0))` with `2σℓ + |α| <= λ(k)`.
pub fn expansion_coefficients(v0: &Field, sigma: f64, k: usize) -> Result<ExpansionCoefficients> {
    let seq = spectrum_sequence(sigma, k)?;
    let lambda_k = seq.values[k];
    let dim = v0.grid().dim();
    let max_order = (lambda_k + SPECTRUM_DEDUP_TOL).floor() as usize;
    let moments: Vec<(MultiIndex, QuadratureEstimate)> = multi_indices(dim, max_order)
        .into_iter()
        .map(|a| moment(v0, &a).map(|m| (a, m)))
        .collect::<Result<_>>()?;
    let unreliable = moments
        .iter()
        .filter(|(_, m)| m.boundary_ratio > BOUNDARY_TOL)
        .map(|(a, _)| a.clone())
        .collect();
    let mut terms = Vec::new();
    let mut ell = 0usize;
    while 2.0 * sigma * ell as f64 <= lambda_k + SPECTRUM_DEDUP_TOL {
        let budget = lambda_k - 2.0 * sigma * ell as f64;
        for (alpha, m) in &moments {
            if alpha.order() as f64 <= budget + SPECTRUM_DEDUP_TOL {
                terms.push(ExpansionTerm {
                    ell,
                    alpha: alpha.clone(),
                    coeff: m.value,
                });
            }
        }
        ell += 1;
    }
    Ok(ExpansionCoefficients {
        sigma,
        k,
        lambda_k,
        terms,
        unreliable,
    })
}

fn check_time_order(t: f64, j: u32, a: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")));
    }
    if j > 1 || !(a >= 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("need j in {{0,1}} and a >= 0, got j={j}, a={a}")));
    }
    Ok(())
}

/// Symbol of `∂_t^j |D|^a e^{-tμ}`.
fn diffusion_symbol(xi: f64, sigma: f64, t: f64, j: u32, a: f64) -> f64 {
    let mu = symbol(xi, sigma);
    let dt = if j == 1 { -mu } else { 1.0 };
    dt * xi.powf(a) * (-t * mu).exp()
}

/// `∂_t^j |D|^a v(t)` in frequency space.
pub fn evaluate_diffusion_spectral(
    v0: &SpectralField,
    sigma: f64,
    t: f64,
    j: u32,
    a: f64,
) -> Result<SpectralField> {
    check_time_order(t, j, a)?;
    Ok(v0.apply_radial(|_, xi| diffusion_symbol(xi, sigma, t, j, a)))
}

/// `∂_t^j |D|^a v(t, ·)` for `v_t + (-Δ)^σ v = 0`, `v(0) = v0`.
pub fn evaluate_diffusion(v0: &Field, sigma: f64, t: f64, j: u32, a: f64) -> Result<Field> {
    check_sigma(sigma)?;
    to_physical(&evaluate_diffusion_spectral(&to_spectral(v0), sigma, t, j, a)?)
}

/// `∂_t^j |D|^a G_σ(t)` on the lattice; always realized spectrally.
pub fn g_sigma_spectral(grid: &GridSpec, sigma: f64, t: f64, j: u32, a: f64) -> Result<SpectralField> {
    check_time_order(t, j, a)?;
    if t == 0.0 {
        return Err(Error::InvalidParameter("G_sigma(0) is a distribution; need t > 0".into()));
    }
    Ok(SpectralField::from_symbol(grid, |_, xi| diffusion_symbol(xi, sigma, t, j, a)))
}

/// `G_σ(t, ·)` sampled on the (periodized) grid.
pub fn g_sigma_field(grid: &GridSpec, sigma: f64, t: f64) -> Result<Field> {
    to_physical(&g_sigma_spectral(grid, sigma, t, 0, 0.0)?)
}

/// `‖∂_t^j |D|^a G_σ(t)‖_{L²}` via Parseval.
pub fn g_sigma_norm(sigma: f64, t: f64, j: u32, a: f64, grid: &GridSpec) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(g_sigma_spectral(grid, sigma, t, j, a)?.l2_norm())
}

/// The unique `k` with `λ(k) <= γ < λ(k+1)`.
pub fn expansion_index(sigma: f64, gamma: f64) -> Result<usize> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
    }
    let seq = spectrum_sequence(sigma, gamma.ceil() as usize + 1)?;
    seq.index_for(gamma)
        .ok_or_else(|| Error::InvalidParameter(format!("no spectrum index for gamma {gamma}")))
}

/// Frequency-space residual `‖û(t) − A_k e^{-t|ξ|^{2σ}}‖_{L²}` with the
/// transforms and the polynomial cached across times.
pub struct ExpansionResidualProbe {
    sigma: f64,
    u0: SpectralField,
    u1: SpectralField,
    profile: Vec<Complex64>,
    coefficients: ExpansionCoefficients,
}

impl ExpansionResidualProbe {
    pub fn new(u0: &Field, u1: &Field, sigma: f64, gamma: f64) -> Result<Self> {
        ensure_same_grid(u0.grid(), u1.grid())?;
        let k = expansion_index(sigma, gamma)?;
        let v0 = u0.add_scaled(u1, 1.0)?;
        let coefficients = expansion_coefficients(&v0, sigma, k)?;
        let grid = u0.grid();
        let dim = grid.dim();
        let profile = crate::par::map_range(grid.len(), |i| {
            let xi = grid.xi_vector(i);
            coefficients.evaluate(&xi[..dim])
        });
        Ok(Self {
            sigma,
            u0: to_spectral(u0),
            u1: to_spectral(u1),
            profile,
            coefficients,
        })
    }

    pub fn coefficients(&self) -> &ExpansionCoefficients {
        &self.coefficients
    }

    pub fn residual(&self, t: f64) -> Result<f64> {
        let u = propagate_linear_spectral(&self.u0, &self.u1, self.sigma, t, 0, 0.0)?;
        let grid = u.grid();
        let mags = grid.xi_magnitudes();
        let mut s = 0.0;
        for (i, c) in u.coefficients().iter().enumerate() {
            let heat = (-t * symbol(mags[i], self.sigma)).exp();
            s += (c - self.profile[i] * heat).norm_sqr();
        }
        // Same normalization as SpectralField::l2_norm.
        Ok((s / grid.box_length().powi(grid.dim() as i32)).sqrt())
    }
}

/// Residual of the order-`γ` expansion at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualReport {
    pub residual: f64,
    pub k: usize,
    pub moments_reliable: bool,
}

pub fn expansion_residual(u0: &Field, u1: &Field, sigma: f64, gamma: f64, t: f64) -> Result<ResidualReport> {
    let probe = ExpansionResidualProbe::new(u0, u1, sigma, gamma)?;
    Ok(ResidualReport {
        residual: probe.residual(t)?,
        k: probe.coefficients.k,
        moments_reliable: probe.coefficients.reliable(),
    })
}

/// `|F(ξ) − A_k(ξ)|` with `F = v̂0 / (1 − |ξ|^{2σ})`, sampled along the first
/// axis at the given magnitudes. `v̂0` is the direct (non-lattice) transform.
pub fn pointwise_symbol_residual(v0: &Field, sigma: f64, gamma: f64, xi_samples: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = xi_samples.iter().find(|&&x| !(x.abs() <= 0.5)) {
        return Err(Error::InvalidParameter(format!("sample |xi| = {bad} exceeds 1/2")));
    }
    let k = expansion_index(sigma, gamma)?;
    let coefficients = expansion_coefficients(v0, sigma, k)?;
    let grid = v0.grid();
    let dim = grid.dim();
    let w = grid.cell_volume();
    Ok(xi_samples
        .iter()
        .map(|&s| {
            let mut xi = vec![0.0; dim];
            xi[0] = s;
            let mut hat = Complex64::new(0.0, 0.0);
            for (i, &v) in v0.values().iter().enumerate() {
                let x = grid.position(i)[0];
                hat += Complex64::from_polar(v, -s * x);
            }
            let f = hat * w / (1.0 - symbol(s.abs(), sigma));
            (f - coefficients.evaluate(&xi)).norm()
        })
        .collect())
}

/// CSV rows `t,residual,scaled` where `scaled = t^rate · residual`.
pub fn write_residual_sweep<W: Write>(mut w: W, times: &[f64], residuals: &[f64], rate: f64) -> Result<()> {
    writeln!(w, "t,residual,scaled")?;
    for (t, r) in times.iter().zip(residuals) {
        writeln!(w, "{t:.15e},{r:.15e},{:.15e}", t.powf(rate) * r)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::norms::{fit_decay_exponent, log_spaced};
    use std::f64::consts::PI;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn spectrum_examples() {
        for sigma in [1.0, 1.3, 2.0, 3.7] {
            let s = spectrum_sequence(sigma, 2).unwrap();
            assert!(close(&s.values, &[0.0, 1.0, 2.0]));
        }
        let s = spectrum_sequence(1.0, 5).unwrap();
        assert!(close(&s.values, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]));
        let s = spectrum_sequence(1.25, 4).unwrap();
        assert!(close(&s.values, &[0.0, 1.0, 2.0, 2.5, 3.0]));
        assert!(spectrum_sequence(0.5, 3).is_err());
    }

    #[test]
    fn spectrum_gap_property() {
        for sigma in [1.0, 1.1, 1.25, 1.5, std::f64::consts::SQRT_2, 2.0, 2.75] {
            let s = spectrum_sequence(sigma, 30).unwrap();
            assert_eq!(s.values.len(), 31);
            assert_eq!(s.values[0], 0.0);
            for w in s.values.windows(2) {
                assert!(w[1] - w[0] > 0.0 && w[1] - w[0] <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn index_for_gamma() {
        assert_eq!(expansion_index(1.0, 0.0).unwrap(), 0);
        assert_eq!(expansion_index(1.0, 0.7).unwrap(), 0);
        assert_eq!(expansion_index(1.0, 1.0).unwrap(), 1);
        assert_eq!(expansion_index(1.0, 2.0).unwrap(), 2);
        assert_eq!(expansion_index(1.25, 2.6).unwrap(), 3);
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(1, 3).len(), 4);
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert_eq!(multi_indices(3, 2).len(), 10);
        let m = MultiIndex::new(vec![2, 1, 3]);
        assert_eq!(m.order(), 6);
        assert_eq!(m.factorial(), 12.0);
    }

    #[test]
    fn gaussian_moments() {
        let g = make_grid(1, 512, 40.0).unwrap();
        let f = Field::gaussian(&g, 1.0, 1.0);
        let m0 = moment(&f, &MultiIndex::new(vec![0])).unwrap();
        assert!((m0.value - PI.sqrt()).abs() < 1e-10);
        assert!(m0.reliable());
        assert!(moment(&f, &MultiIndex::new(vec![1])).unwrap().value.abs() < 1e-12);
        let m2 = moment(&f, &MultiIndex::new(vec![2])).unwrap();
        assert!((m2.value - PI.sqrt() / 4.0).abs() < 1e-10);
        assert!((m2.value - 0.44311).abs() < 1e-5);
        let table = moment_table(&f, 2.5).unwrap();
        assert_eq!(table.entries.len(), 3);
        // a wide bump leaks to the boundary and is flagged
        let wide = Field::gaussian(&g, 1.0, 12.0);
        assert!(!moment(&wide, &MultiIndex::new(vec![2])).unwrap().reliable());
    }

    #[test]
    fn expansion_term_sets() {
        let g = make_grid(2, 32, 16.0).unwrap();
        let v0 = Field::from_fn(&g, |x| (-(x[0] - 0.3).powi(2) - x[1] * x[1]).exp());
        let a0 = expansion_coefficients(&v0, 1.5, 0).unwrap();
        assert_eq!(a0.terms.len(), 1);
        assert!((a0.terms[0].coeff - v0.integral()).abs() < 1e-12);
        let a2 = expansion_coefficients(&v0, 1.5, 2).unwrap();
        assert_eq!(a2.terms.len(), 6);
        assert!(a2.terms.iter().all(|t| t.ell == 0 && t.alpha.order() <= 2));
        let a2s1 = expansion_coefficients(&v0, 1.0, 2).unwrap();
        assert_eq!(a2s1.terms.len(), 7);
        assert!(a2s1.contains(1, &MultiIndex::zero(2)));
    }

    #[test]
    fn expansion_nesting() {
        let g = make_grid(1, 256, 30.0).unwrap();
        let v0 = Field::from_fn(&g, |x| (-(x[0] - 0.5).powi(2)).exp() * (1.0 + 0.2 * x[0]));
        for sigma in [1.0, 1.25, 1.5] {
            for k in 0..6 {
                let a = expansion_coefficients(&v0, sigma, k).unwrap();
                let b = expansion_coefficients(&v0, sigma, k + 1).unwrap();
                for t in &a.terms {
                    assert!(b.contains(t.ell, &t.alpha));
                    assert!(2.0 * sigma * t.ell as f64 + t.alpha.order() as f64 <= a.lambda_k + 1e-12);
                }
            }
        }
    }

    #[test]
    fn expansion_csv() {
        let g = make_grid(2, 16, 10.0).unwrap();
        let v0 = Field::gaussian(&g, 1.0, 1.0);
        let mut out = Vec::new();
        expansion_coefficients(&v0, 1.0, 1).unwrap().write_csv(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s.lines().next().unwrap(), "ell,alpha_1,alpha_2,coeff");
        assert_eq!(s.lines().count(), 4);
    }

    #[test]
    fn diffusion_initial_and_mass() {
        let g = make_grid(1, 256, 40.0).unwrap();
        let v0 = Field::from_fn(&g, |x| (-(x[0] - 1.0).powi(2)).exp());
        let v = evaluate_diffusion(&v0, 1.0, 0.0, 0, 0.0).unwrap();
        for (a, b) in v.values().iter().zip(v0.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        for t in [0.5, 5.0, 50.0] {
            let c = evaluate_diffusion_spectral(&to_spectral(&v0), 1.3, t, 0, 0.0).unwrap();
            assert!((c.zero_mode().re - v0.integral()).abs() < 1e-12);
        }
    }

    #[test]
    fn heat_kernel_from_narrow_gaussian() {
        let g = make_grid(1, 2048, 80.0).unwrap();
        let w = 0.2;
        let v0 = Field::from_fn(&g, |x| (-(x[0] / w).powi(2)).exp() / (w * PI.sqrt()));
        let t = 1.0;
        let v = evaluate_diffusion(&v0, 1.0, t, 0, 0.0).unwrap();
        // Gaussian data of variance w²/2 stays Gaussian at effective time t + w²/4.
        let te = t + w * w / 4.0;
        let mut worst_exact = 0.0_f64;
        let mut worst_kernel = 0.0_f64;
        for (x, val) in g.axis_coordinates().iter().zip(v.values()) {
            let exact = (4.0 * PI * te).powf(-0.5) * (-x * x / (4.0 * te)).exp();
            let kernel = (4.0 * PI * t).powf(-0.5) * (-x * x / (4.0 * t)).exp();
            worst_exact = worst_exact.max((val - exact).abs());
            worst_kernel = worst_kernel.max((val - kernel).abs());
        }
        assert!(worst_exact < 1e-12);
        assert!(worst_kernel < 0.01 * (4.0 * PI * t).powf(-0.5));
    }

    #[test]
    fn g_sigma_closed_form_and_slopes() {
        let g = make_grid(1, 1024, 400.0).unwrap();
        let n1 = g_sigma_norm(1.0, 1.0, 0, 0.0, &g).unwrap();
        assert!((n1 - (8.0 * PI).powf(-0.25)).abs() < 1e-12);
        assert!(g_sigma_norm(1.0, 0.0, 0, 0.0, &g).is_err());
        let times = log_spaced(1.0, 100.0, 16);
        for sigma in [1.0, 1.5] {
            for (j, a) in [(0u32, 0.0), (1, 0.0), (0, 1.0)] {
                let vals: Vec<f64> = times.iter().map(|&t| g_sigma_norm(sigma, t, j, a, &g).unwrap()).collect();
                let fit = fit_decay_exponent(&times, &vals).unwrap();
                let expect = -1.0 / (4.0 * sigma) - a / (2.0 * sigma) - j as f64;
                assert!((fit.slope - expect).abs() < 0.02, "{sigma} {j} {a}: {}", fit.slope);
            }
        }
    }

    #[test]
    fn symbol_residual_examples() {
        let g = make_grid(1, 512, 40.0).unwrap();
        let v0 = Field::from_fn(&g, |x| (-(x[0] - 0.4).powi(2)).exp());
        let r = pointwise_symbol_residual(&v0, 1.0, 1.0, &[0.0]).unwrap();
        assert_eq!(r[0], 0.0);
        let samples = [0.4, 0.2, 0.1, 0.05];
        for gamma in [1.0, 2.0] {
            let r = pointwise_symbol_residual(&v0, 1.0, gamma, &samples).unwrap();
            let ratios: Vec<f64> = r.iter().zip(samples).map(|(r, s)| r / s.powf(gamma)).collect();
            for w in ratios.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9), "{ratios:?}");
            }
        }
        assert!(pointwise_symbol_residual(&v0, 1.0, 1.0, &[0.6]).is_err());
    }

    #[test]
    fn residual_sweep_columns() {
        let mut out = Vec::new();
        write_residual_sweep(&mut out, &[1.0, 2.0], &[0.5, 0.25], 1.0).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s.lines().next().unwrap(), "t,residual,scaled");
        assert!(s.lines().nth(2).unwrap().ends_with("5.000000000000000e-1"));
    }
}

//! Standardized statistics, their asymptotic variances, and the confidence
//! intervals built from them.
//!
//! Every statistic is centered at the finite-sample law `F_{c_n}` with
//! `c_n = p/n`. Rates are expressed in the number of eigenvalues `p`; see
//! the README for why this is the normalization under which the contour
//! identity and the limiting variances hold.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimators::{smoothed_cdf, smoothed_density, smoothed_mp_reference, smoothed_quantile};
use crate::kernels::{normal_quantile, KernelProfile};
use crate::mp_law::{ComplexPoint, MpLaw};
use crate::quadrature::GaussLegendre;
use crate::spectral::SpectralSample;

/// Which limit theorem a statistic belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    Cdf,
    Density,
    DensityCentered,
    Quantile,
}

fn check_interior(law: &MpLaw, x: f64) -> Result<()> {
    if !law.is_interior(x) {
        return domain(format!(
            "x = {x} is outside the open bulk ({}, {})",
            law.lower_edge(),
            law.upper_edge()
        ));
    }
    Ok(())
}

fn log_n(s: &SpectralSample) -> Result<f64> {
    if s.n() < 3 {
        return domain(format!("the CLT scalings need n >= 3, got {}", s.n()));
    }
    Ok((s.n() as f64).ln())
}

/// `√2 π p / √(ln n)`, the rate of the distribution-function statistic.
pub fn cdf_rate(p: usize, n: usize) -> f64 {
    SQRT_2 * PI * p as f64 / (n as f64).ln().sqrt()
}

/// `p / √(ln n)`, the rate of the quantile statistic.
pub fn quantile_rate(p: usize, n: usize) -> f64 {
    p as f64 / (n as f64).ln().sqrt()
}

/// `√2 π p/√(ln n) · (F_n(x) - F_{c_n}(x))`; asymptotically `N(0, 1)`,
/// independent across distinct points.
pub fn cdf_statistic(law: &MpLaw, s: &SpectralSample, k: &KernelProfile, h: f64, x: f64) -> Result<f64> {
    check_interior(law, x)?;
    log_n(s)?;
    let diff = smoothed_cdf(s, k, h, x)? - law.cdf(x);
    Ok(cdf_rate(s.p(), s.n()) * diff)
}

/// `p h (f_n(x) - f_{c_n}(x))`; asymptotically `N(0, σ²)`.
pub fn density_statistic(law: &MpLaw, s: &SpectralSample, k: &KernelProfile, h: f64, x: f64) -> Result<f64> {
    check_interior(law, x)?;
    log_n(s)?;
    Ok(s.p() as f64 * h * (smoothed_density(s, k, h, x)? - law.density(x)))
}

/// `p h (f_n(x) - h⁻¹∫K((x-y)/h) dF_{c_n}(y))`, valid for any `h → 0`.
pub fn density_statistic_centered(
    law: &MpLaw,
    s: &SpectralSample,
    k: &KernelProfile,
    h: f64,
    x: f64,
) -> Result<f64> {
    check_interior(law, x)?;
    log_n(s)?;
    Ok(s.p() as f64 * h * (smoothed_density(s, k, h, x)? - smoothed_mp_reference(law, k, h, x)?))
}

/// `p/√(ln n) · (x_{n,α} - x_α)`; asymptotically
/// `N(0, 1/(2π² f_c(x_α)²))`.
pub fn quantile_statistic(law: &MpLaw, s: &SpectralSample, k: &KernelProfile, h: f64, alpha: f64) -> Result<f64> {
    log_n(s)?;
    let target = law.quantile(alpha)?;
    check_interior(law, target)?;
    let estimate = smoothed_quantile(s, k, h, alpha)?;
    Ok(quantile_rate(s.p(), s.n()) * (estimate - target))
}

/// An asymptotic variance with the numerical error of its evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceConstant {
    pub value: f64,
    pub kind: VarianceKind,
    pub quadrature_error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceKind {
    DensitySigma2,
    Quantile,
}

/// Quadrature settings for [`sigma_squared_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaQuadrature {
    /// `K'` is treated as zero outside `[-half_width, half_width]`.
    pub half_width: f64,
    /// Panels per unit length at the coarsest level.
    pub panels_per_unit: usize,
    /// Relative agreement required between successive refinements.
    pub rel_tol: f64,
    pub max_refinements: usize,
}

impl Default for SigmaQuadrature {
    fn default() -> Self {
        Self { half_width: 40.0, panels_per_unit: 1, rel_tol: 1e-8, max_refinements: 5 }
    }
}

/// `σ² = -(2π²)⁻¹ ∫∫ K'(u₁) K'(u₂) ln (u₁ - u₂)² du₁ du₂`.
pub fn sigma_squared(k: &KernelProfile) -> Result<VarianceConstant> {
    sigma_squared_with(k, SigmaQuadrature::default())
}

/// Evaluates the double integral in rotated coordinates `s = u₁ - u₂`:
/// `∫∫ ... = ∫ ln(s²) R(s) ds` with `R(s) = ∫ K'(w + s) K'(w) dw` even in
/// `s`. The logarithm at `s = 0` is removed by `s = e^{-y}` on `(0, 1]`.
/// Successive refinements are compared until they agree to `rel_tol`.
pub fn sigma_squared_with(k: &KernelProfile, q: SigmaQuadrature) -> Result<VarianceConstant> {
    let mut previous = log_double_integral(k, &q, q.panels_per_unit);
    let mut panels = q.panels_per_unit;
    for _ in 0..q.max_refinements {
        panels *= 2;
        let current = log_double_integral(k, &q, panels);
        let error = (current - previous).abs();
        if error <= q.rel_tol * current.abs() {
            let value = -current / (2.0 * PI * PI);
            if value <= 0.0 {
                return Err(Error::Domain(format!("kernel `{}` gives a non-positive σ² = {value}", k.name())));
            }
            return Ok(VarianceConstant {
                value,
                kind: VarianceKind::DensitySigma2,
                quadrature_error_estimate: error / (2.0 * PI * PI),
            });
        }
        previous = current;
    }
    Err(Error::NoConvergence { what: "σ² quadrature", iterations: q.max_refinements })
}

fn log_double_integral(k: &KernelProfile, q: &SigmaQuadrature, panels_per_unit: usize) -> f64 {
    let gl = GaussLegendre::new(16);
    let l = q.half_width;
    let autocorr = |s: f64| -> f64 {
        // K'(w + s) vanishes for w > l - s.
        let hi = l - s;
        let lo = -l;
        if hi <= lo {
            return 0.0;
        }
        let panels = (((hi - lo) * panels_per_unit as f64).ceil() as usize).max(1);
        gl.composite(lo, hi, panels, |w| k.derivative(w + s) * k.derivative(w))
    };
    // ∫_0^1 ln(s) R(s) ds = -∫_0^∞ y e^{-y} R(e^{-y}) dy
    let tail_y = 40.0;
    let near = -gl.composite(0.0, tail_y, (tail_y as usize) * panels_per_unit, |y| {
        let s = (-y).exp();
        y * s * autocorr(s)
    });
    let span = 2.0 * l;
    let far = gl.composite(1.0, span, ((span - 1.0) as usize).max(1) * panels_per_unit, |s| s.ln() * autocorr(s));
    // ∫ ln(s²) R(s) ds over ℝ = 4 ∫_0^∞ ln(s) R(s) ds
    4.0 * (near + far)
}

/// `1 / (2π² f_c(x_α)²)`.
pub fn quantile_variance(law: &MpLaw, alpha: f64) -> Result<VarianceConstant> {
    let x = law.quantile(alpha)?;
    let f = law.density(x);
    if f < 1e-12 {
        return domain(format!("density at the {alpha}-quantile is {f:e}; the variance is unbounded"));
    }
    Ok(VarianceConstant {
        value: 1.0 / (2.0 * PI * PI * f * f),
        kind: VarianceKind::Quantile,
        quadrature_error_estimate: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Two-sided normal critical value `z_{(1+level)/2}`; zero at level 0.
pub fn critical_value(level: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&level) {
        return domain(format!("confidence level must lie in [0, 1), got {level}"));
    }
    if level == 0.0 {
        return Ok(0.0);
    }
    normal_quantile(0.5 * (1.0 + level))
}

/// `F_n(x) ± z √(ln n) / (√2 π p)`, clamped to `[0, 1]`.
pub fn confidence_interval_cdf(
    law: &MpLaw,
    s: &SpectralSample,
    k: &KernelProfile,
    h: f64,
    x: f64,
    level: f64,
) -> Result<Interval> {
    check_interior(law, x)?;
    log_n(s)?;
    let z = critical_value(level)?;
    let estimate = smoothed_cdf(s, k, h, x)?;
    let half = z / cdf_rate(s.p(), s.n());
    Ok(Interval { estimate, lower: (estimate - half).max(0.0), upper: (estimate + half).min(1.0) })
}

/// Source of the density value plugged into the quantile variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityPlugIn {
    /// `f_{c_n}(x_α)` from the law.
    #[default]
    Model,
    /// `f_n(x_{n,α})` from the sample.
    Estimated,
}

/// `x_{n,α} ± z √(quantile variance) √(ln n) / p`.
#[allow(clippy::too_many_arguments)]
pub fn confidence_interval_quantile(
    law: &MpLaw,
    s: &SpectralSample,
    k: &KernelProfile,
    h: f64,
    alpha: f64,
    level: f64,
    plug_in: DensityPlugIn,
) -> Result<Interval> {
    log_n(s)?;
    let z = critical_value(level)?;
    let target = law.quantile(alpha)?;
    check_interior(law, target)?;
    let estimate = smoothed_quantile(s, k, h, alpha)?;
    let density = match plug_in {
        DensityPlugIn::Model => law.density(target),
        DensityPlugIn::Estimated => smoothed_density(s, k, h, estimate)?,
    };
    if density < 1e-12 {
        return domain(format!("plug-in density {density:e} is too small for a quantile interval"));
    }
    let sd = 1.0 / (SQRT_2 * PI * density);
    let half = z * sd / quantile_rate(s.p(), s.n());
    Ok(Interval { estimate, lower: estimate - half, upper: estimate + half })
}

/// `c m̲³/(1+m̲)³ · (1 - c m̲²/(1+m̲)²)⁻²` at `m̲ = m̲_{c}(z)`: the limit of
/// `n(E m̲_n(z) - m̲(z))`.
pub fn mean_correction(law: &MpLaw, z: ComplexPoint) -> Result<Complex64> {
    let m = law.companion_stieltjes(z)?;
    let ratio = m / (1.0 + m);
    let c = law.c();
    let denom = 1.0 - c * ratio * ratio;
    if denom.norm() < 1e-12 {
        return Err(Error::Pole(format!("mean correction is singular at z = {z}")));
    }
    Ok(c * ratio * ratio * ratio / (denom * denom))
}

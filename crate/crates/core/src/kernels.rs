//! Smoothing kernels, their admissibility checks, and bandwidth rules.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{domain, Result};
use crate::quadrature::GaussLegendre;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type ComplexFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Whether a kernel is known to be analytic on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analyticity {
    AssertedByConstruction,
    Unknown,
}

/// A smoothing kernel `K` with its derivative and antiderivative.
///
/// The optional complex extension is required by the contour check, which
/// evaluates `K` off the real axis.
#[derive(Clone)]
pub struct KernelProfile {
    name: String,
    value: RealFn,
    derivative: RealFn,
    antiderivative: RealFn,
    complex_value: Option<ComplexFn>,
    analyticity: Analyticity,
}

impl fmt::Debug for KernelProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelProfile")
            .field("name", &self.name)
            .field("complex", &self.complex_value.is_some())
            .field("analyticity", &self.analyticity)
            .finish()
    }
}

impl KernelProfile {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        antiderivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            antiderivative: Arc::new(antiderivative),
            complex_value: None,
            analyticity: Analyticity::Unknown,
        }
    }

    /// Attaches an analytic continuation of `K` and marks the profile analytic.
    pub fn with_complex(mut self, f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        self.complex_value = Some(Arc::new(f));
        self.analyticity = Analyticity::AssertedByConstruction;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    /// `∫_{-∞}^x K`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        (self.antiderivative)(x)
    }

    pub fn complex_value(&self, z: Complex64) -> Option<Complex64> {
        self.complex_value.as_ref().map(|f| f(z))
    }

    pub fn has_complex_extension(&self) -> bool {
        self.complex_value.is_some()
    }

    pub fn analyticity(&self) -> Analyticity {
        self.analyticity
    }

    /// `K(x - shift)`.
    pub fn shifted(&self, shift: f64) -> Self {
        let (v, d, a) = (self.value.clone(), self.derivative.clone(), self.antiderivative.clone());
        let mut out = Self::new(
            format!("{}-shift({shift})", self.name),
            move |x| v(x - shift),
            move |x| d(x - shift),
            move |x| a(x - shift),
        );
        if let Some(cv) = self.complex_value.clone() {
            out = out.with_complex(move |z| cv(z - shift));
        }
        out.analyticity = self.analyticity;
        out
    }

    /// `s·K(s x)` for `s > 0`; still a probability density.
    pub fn scaled(&self, s: f64) -> Self {
        assert!(s > 0.0, "kernel scale must be positive");
        let (v, d, a) = (self.value.clone(), self.derivative.clone(), self.antiderivative.clone());
        let mut out = Self::new(
            format!("{}-scale({s})", self.name),
            move |x| s * v(s * x),
            move |x| s * s * d(s * x),
            move |x| a(s * x),
        );
        if let Some(cv) = self.complex_value.clone() {
            out = out.with_complex(move |z| s * cv(z * s));
        }
        out.analyticity = self.analyticity;
        out
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal quantile, by Newton iteration on [`normal_cdf`] to 1e-12.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("normal quantile level must lie in (0, 1), got {p}"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Solve on the upper half; Φ is concave there, so Newton from 0 increases
    // monotonically to the root.
    let (target, sign) = if p > 0.5 { (p, 1.0) } else { (1.0 - p, -1.0) };
    let upper_tail = 1.0 - target;
    let mut x = 0.0f64;
    for _ in 0..500 {
        // work with the tail to keep precision for levels close to one
        let tail = 0.5 * erfc(x / std::f64::consts::SQRT_2);
        let step = (tail - upper_tail) / normal_pdf(x);
        x += step;
        if step.abs() < 1e-12 * x.abs().max(1.0) {
            return Ok(sign * x);
        }
    }
    Err(crate::Error::NoConvergence { what: "normal quantile", iterations: 500 })
}

/// `(2π)^{-1/2} e^{-x²/2}`.
pub fn gaussian_kernel() -> KernelProfile {
    KernelProfile::new("gaussian", normal_pdf, |x| -x * normal_pdf(x), normal_cdf)
        .with_complex(|z| INV_SQRT_2PI * (-0.5 * z * z).exp())
}

/// Window for the truncated integral checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckWindow {
    pub half_width: f64,
    pub panels: usize,
}

impl Default for CheckWindow {
    fn default() -> Self {
        Self { half_width: 40.0, panels: 8000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub value: f64,
    pub pass: bool,
}

impl Verdict {
    fn new(value: f64, pass: bool) -> Self {
        Self { value, pass }
    }
}

/// Numerical admissibility report for a kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub kernel: String,
    /// `|x K(x)|` at the window edge.
    pub decay_value: Verdict,
    /// `|x K'(x)|` at the window edge.
    pub decay_derivative: Verdict,
    /// `∫ K`.
    pub integral: Verdict,
    /// `∫ x K`.
    pub first_moment: Verdict,
    /// `∫ |x K'|`.
    pub abs_x_derivative: Verdict,
    /// `∫ |K''|`, as the total variation of `K'`.
    pub abs_second_derivative: Verdict,
    /// `∫ x² |K|`.
    pub second_abs_moment: Verdict,
    /// Largest discrepancy between `K'` and central differences of `K`.
    pub smoothness: Verdict,
    pub analyticity: Analyticity,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        [
            &self.decay_value,
            &self.decay_derivative,
            &self.integral,
            &self.first_moment,
            &self.abs_x_derivative,
            &self.abs_second_derivative,
            &self.second_abs_moment,
            &self.smoothness,
        ]
        .iter()
        .all(|v| v.pass)
    }
}

// Anything below this is treated as finite for the integrability proxies.
const FINITE_PROXY: f64 = 1e6;

pub fn check_kernel_conditions(k: &KernelProfile) -> ConditionReport {
    check_kernel_conditions_in(k, CheckWindow::default())
}

pub fn check_kernel_conditions_in(k: &KernelProfile, window: CheckWindow) -> ConditionReport {
    let l = window.half_width;
    let gl = GaussLegendre::new(8);
    let (mut int_k, mut int_xk, mut int_xdk, mut int_x2k) = (0.0, 0.0, 0.0, 0.0);
    gl.for_each_node(-l, l, window.panels, |x, w| {
        let v = k.value(x);
        int_k += w * v;
        int_xk += w * x * v;
        int_xdk += w * (x * k.derivative(x)).abs();
        int_x2k += w * x * x * v.abs();
    });

    // Fine uniform grid for the derivative consistency and total variation.
    let steps = 200_000usize;
    let dx = 2.0 * l / steps as f64;
    let fd = 1e-5;
    let mut total_variation = 0.0;
    let mut worst_mismatch = 0.0f64;
    let mut prev = k.derivative(-l);
    for i in 1..=steps {
        let x = -l + dx * i as f64;
        let d = k.derivative(x);
        total_variation += (d - prev).abs();
        prev = d;
        let central = (k.value(x + fd) - k.value(x - fd)) / (2.0 * fd);
        let scale = 1.0 + d.abs();
        worst_mismatch = worst_mismatch.max((central - d).abs() / scale);
    }

    let edge_value = (l * k.value(l)).abs().max((l * k.value(-l)).abs());
    let edge_derivative = (l * k.derivative(l)).abs().max((l * k.derivative(-l)).abs());
    let finite = |v: f64| v.is_finite() && v < FINITE_PROXY;
    let smooth = worst_mismatch < 1e-6;

    ConditionReport {
        kernel: k.name().to_owned(),
        decay_value: Verdict::new(edge_value, edge_value < 1e-8),
        decay_derivative: Verdict::new(edge_derivative, edge_derivative < 1e-8),
        integral: Verdict::new(int_k, (int_k - 1.0).abs() < 1e-8),
        first_moment: Verdict::new(int_xk, int_xk.abs() < 1e-8),
        abs_x_derivative: Verdict::new(int_xdk, finite(int_xdk)),
        abs_second_derivative: Verdict::new(total_variation, finite(total_variation) && smooth),
        second_abs_moment: Verdict::new(int_x2k, finite(int_x2k)),
        smoothness: Verdict::new(worst_mismatch, smooth),
        analyticity: k.analyticity(),
    }
}

/// Which CLT regime a bandwidth is tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthKind {
    Cdf,
    Density,
}

/// `h(n) = scale · n^{-exponent} · (ln n)^{-log_exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthRule {
    pub exponent: f64,
    pub log_exponent: f64,
    pub scale: f64,
    pub kind: BandwidthKind,
}

impl BandwidthRule {
    /// `n^{-1/2} (ln n)^{-1/4}`.
    pub fn cdf() -> Self {
        Self { exponent: 0.5, log_exponent: 0.25, scale: 1.0, kind: BandwidthKind::Cdf }
    }

    /// `n^{-0.4}`.
    pub fn density() -> Self {
        Self { exponent: 0.4, log_exponent: 0.0, scale: 1.0, kind: BandwidthKind::Density }
    }

    pub fn for_kind(kind: BandwidthKind) -> Self {
        match kind {
            BandwidthKind::Cdf => Self::cdf(),
            BandwidthKind::Density => Self::density(),
        }
    }

    pub fn with_scale(self, scale: f64) -> Self {
        Self { scale, ..self }
    }

    pub fn bandwidth(&self, n: usize) -> Result<f64> {
        if n < 2 {
            return domain(format!("bandwidth rules need n >= 2, got {n}"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return domain(format!("bandwidth scale must be positive, got {}", self.scale));
        }
        let nf = n as f64;
        Ok(self.scale * nf.powf(-self.exponent) * nf.ln().powf(-self.log_exponent))
    }
}

pub fn bandwidth_for_cdf(n: usize) -> Result<f64> {
    BandwidthRule::cdf().bandwidth(n)
}

pub fn bandwidth_for_density(n: usize) -> Result<f64> {
    BandwidthRule::density().bandwidth(n)
}

//! The Marchenko–Pastur law: density, distribution function, quantiles and
//! the Stieltjes transforms used by the estimators and the CLT code.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quadrature::adaptive_simpson;

/// A point `u + iv` of the complex plane.
pub type ComplexPoint = Complex64;

const CDF_TOL: f64 = 1e-12;

/// Limiting spectral law of `XXᵀ/n` for aspect ratio `c = p/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpLaw {
    c: f64,
    a: f64,
    b: f64,
}

impl MpLaw {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return domain(format!("aspect ratio must be positive and finite, got {c}"));
        }
        let root = c.sqrt();
        let a = if c == 1.0 { 0.0 } else { (1.0 - root) * (1.0 - root) };
        Ok(Self { c, a, b: (1.0 + root) * (1.0 + root) })
    }

    /// The finite-sample law with `c_n = p/n`, which is what every centering
    /// in this crate uses.
    pub fn for_dims(p: usize, n: usize) -> Result<Self> {
        if p == 0 || n == 0 {
            return domain(format!("dimensions must be positive, got p={p}, n={n}"));
        }
        Self::new(p as f64 / n as f64)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Lower spectral edge `(1 - √c)²`.
    pub fn lower_edge(&self) -> f64 {
        self.a
    }

    /// Upper spectral edge `(1 + √c)²`.
    pub fn upper_edge(&self) -> f64 {
        self.b
    }

    /// True when `x` lies strictly inside the bulk `(a, b)`.
    pub fn is_interior(&self, x: f64) -> bool {
        x > self.a && x < self.b
    }

    /// Continuous part of the law; the atom at zero is reported by
    /// [`MpLaw::point_mass_at_zero`].
    pub fn density(&self, x: f64) -> f64 {
        if !(x >= self.a && x <= self.b) || x <= 0.0 {
            return 0.0;
        }
        let radicand = (self.b - x) * (x - self.a);
        if radicand <= 0.0 {
            return 0.0;
        }
        radicand.sqrt() / (2.0 * PI * self.c * x)
    }

    pub fn point_mass_at_zero(&self) -> f64 {
        (1.0 - 1.0 / self.c).max(0.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let atom = self.point_mass_at_zero();
        if x <= self.a {
            return atom;
        }
        if x >= self.b {
            return 1.0;
        }
        let width = self.b - self.a;
        let theta = ((x - self.a) / width).sqrt().clamp(0.0, 1.0).asin();
        let continuous = adaptive_simpson(|t| self.cdf_integrand(t), 0.0, theta, CDF_TOL, 48);
        (atom + continuous).clamp(0.0, 1.0)
    }

    /// Density integrand after `y = a + (b - a) sin²θ`, which removes the
    /// square-root behaviour at both edges.
    fn cdf_integrand(&self, theta: f64) -> f64 {
        let (s, co) = theta.sin_cos();
        let width = self.b - self.a;
        if self.a == 0.0 {
            return width * co * co / (PI * self.c);
        }
        let y = self.a + width * s * s;
        width * width * s * s * co * co / (PI * self.c * y)
    }

    /// Leftmost `x` with `cdf(x) >= alpha`, located by bisection.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("quantile level must lie in (0, 1), got {alpha}"));
        }
        if alpha <= self.point_mass_at_zero() {
            return Ok(0.0);
        }
        let mut lo = if self.a == 0.0 { 1e-12 } else { self.a };
        let mut hi = self.b;
        if self.cdf(lo) >= alpha {
            return Ok(lo);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= alpha {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    fn check_off_support(&self, z: ComplexPoint) -> Result<()> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return domain(format!("non-finite point {z}"));
        }
        if z.im == 0.0 && (z.re == 0.0 || (z.re >= self.a && z.re <= self.b)) {
            return domain(format!("z = {} lies on the support or at the origin", z.re));
        }
        Ok(())
    }

    /// `√(z - a)·√(z - b)` with principal roots: analytic off `[a, b]` and
    /// asymptotic to `z` at infinity, which makes the transform Herglotz.
    fn edge_root(&self, z: ComplexPoint) -> ComplexPoint {
        (z - self.a).sqrt() * (z - self.b).sqrt()
    }

    /// Stieltjes transform `m(z) = ∫ (x - z)⁻¹ dF_c(x)`.
    pub fn stieltjes(&self, z: ComplexPoint) -> Result<ComplexPoint> {
        self.check_off_support(z)?;
        let root = self.edge_root(z);
        let base = Complex64::new(1.0 - self.c, 0.0) - z;
        let plus = base + root;
        let minus = base - root;
        // plus·minus = 4cz; use whichever form avoids cancellation.
        if plus.norm() > minus.norm() {
            Ok(plus / (2.0 * self.c * z))
        } else {
            Ok(2.0 / minus)
        }
    }

    /// Stieltjes transform of the limiting spectrum of `XᵀX/n`.
    pub fn companion_stieltjes(&self, z: ComplexPoint) -> Result<ComplexPoint> {
        let m = self.stieltjes(z)?;
        Ok(-(1.0 - self.c) / z + self.c * m)
    }

    /// Boundary value of the companion transform on the bulk.
    pub fn real_axis_companion(&self, x: f64) -> Result<ComplexPoint> {
        if !self.is_interior(x) {
            return domain(format!("x = {x} is not inside ({}, {})", self.a, self.b));
        }
        let im = ((x - self.a) * (self.b - x)).sqrt();
        Ok(Complex64::new(-(x + 1.0 - self.c), im) / (2.0 * x))
    }

    /// `z + c - 1 + 2cz·m(z)`, equal to `√((a - z)(b - z))` on the branch
    /// induced by [`MpLaw::stieltjes`].
    pub fn edge_factor(&self, z: ComplexPoint) -> Result<ComplexPoint> {
        let m = self.stieltjes(z)?;
        Ok(z + self.c - 1.0 + 2.0 * self.c * z * m)
    }
}

//! Kernel-smoothed estimators of the spectral distribution: the density
//! `f_n`, the distribution function `F_n`, smoothed quantiles, the smoothed
//! MP centering, and the Cauchy-contour cross-check that ties them together.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::io::write_csv_rows;
use crate::kernels::KernelProfile;
use crate::mp_law::{ComplexPoint, MpLaw};
use crate::quadrature::{adaptive_gk, GaussLegendre};
use crate::spectral::SpectralSample;

fn check_bandwidth(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return domain(format!("bandwidth must be positive and finite, got {h}"));
    }
    Ok(())
}

/// `f_n(x) = (ph)⁻¹ Σ K((x - λ_i)/h)`.
pub fn smoothed_density(s: &SpectralSample, k: &KernelProfile, h: f64, x: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let sum: f64 = s.eigenvalues().iter().map(|&l| k.value((x - l) / h)).sum();
    Ok(sum / (s.p() as f64 * h))
}

/// `F_n(x) = p⁻¹ Σ 𝒦((x - λ_i)/h)` with `𝒦` the kernel antiderivative.
pub fn smoothed_cdf(s: &SpectralSample, k: &KernelProfile, h: f64, x: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let sum: f64 = s.eigenvalues().iter().map(|&l| k.antiderivative((x - l) / h)).sum();
    Ok(sum / s.p() as f64)
}

/// `inf {x : F_n(x) >= alpha}` by bisection over
/// `[min λ - 10h, max λ + 10h]`.
pub fn smoothed_quantile(s: &SpectralSample, k: &KernelProfile, h: f64, alpha: f64) -> Result<f64> {
    check_bandwidth(h)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("quantile level must lie in (0, 1), got {alpha}"));
    }
    let mut lo = s.min() - 10.0 * h;
    let mut hi = s.max() + 10.0 * h;
    let cdf = |x: f64| -> f64 {
        s.eigenvalues().iter().map(|&l| k.antiderivative((x - l) / h)).sum::<f64>() / s.p() as f64
    };
    // Extend the bracket for kernels with heavier tails than the default window.
    while cdf(lo) >= alpha {
        lo -= 10.0 * h;
    }
    while cdf(hi) < alpha {
        hi += 10.0 * h;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) >= alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `f_n` and `F_n` tabulated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedEstimate {
    pub grid: Vec<f64>,
    pub density_values: Vec<f64>,
    pub cdf_values: Vec<f64>,
    pub bandwidth: f64,
    pub p: usize,
    pub n: usize,
}

impl SmoothedEstimate {
    pub fn evaluate(s: &SpectralSample, k: &KernelProfile, h: f64, grid: &[f64]) -> Result<Self> {
        check_bandwidth(h)?;
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("grid must be strictly increasing".into()));
        }
        let density_values = grid.iter().map(|&x| smoothed_density(s, k, h, x)).collect::<Result<_>>()?;
        let cdf_values = grid.iter().map(|&x| smoothed_cdf(s, k, h, x)).collect::<Result<_>>()?;
        Ok(Self { grid: grid.to_vec(), density_values, cdf_values, bandwidth: h, p: s.p(), n: s.n() })
    }

    /// Grid CSV with columns `x,f_n,F_n`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows = (0..self.grid.len()).map(|i| vec![self.grid[i], self.density_values[i], self.cdf_values[i]]);
        write_csv_rows(out, &["x", "f_n", "F_n"], rows)
    }
}

// Breakpoints (in units of h) that let the adaptive rule find a narrow kernel.
const KERNEL_BREAKS: [f64; 15] =
    [-40.0, -20.0, -10.0, -6.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 6.0, 10.0, 20.0, 40.0];

/// `h⁻¹ ∫_a^b K((x - y)/h) f_c(y) dy`, the centering of the density
/// statistic when `h` is not small enough for `f_c(x)` itself.
pub fn smoothed_mp_reference(law: &MpLaw, k: &KernelProfile, h: f64, x: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let (a, b, c) = (law.lower_edge(), law.upper_edge(), law.c());
    let width = b - a;
    let theta_of = |y: f64| ((y - a) / width).clamp(0.0, 1.0).sqrt().asin();
    let mut breaks = vec![0.0];
    for &t in &KERNEL_BREAKS {
        let y = x + t * h;
        if y > a && y < b {
            breaks.push(theta_of(y));
        }
    }
    breaks.push(FRAC_PI_2);
    breaks.dedup();
    let integrand = |theta: f64| {
        let (sn, co) = theta.sin_cos();
        let y = a + width * sn * sn;
        // f_c(y) dy in the θ variable; edges are smooth here.
        let weight = if a == 0.0 {
            width * co * co / (PI * c)
        } else {
            width * width * sn * sn * co * co / (PI * c * y)
        };
        k.value((x - y) / h) / h * weight
    };
    Ok(adaptive_gk(integrand, &breaks, 1e-11, 20_000)?.value)
}

/// Rectangle enclosing the spectrum: horizontal sides at `±v0·h`,
/// vertical sides at `a_l` and `a_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub a_l: f64,
    pub a_r: f64,
    pub v0: f64,
    pub points_per_side: usize,
}

impl ContourSpec {
    /// `a_l = a/2`, `a_r = b + 1`, `v0 = 1`, 2000 points per side.
    pub fn default_for(law: &MpLaw) -> Self {
        Self { a_l: 0.5 * law.lower_edge(), a_r: law.upper_edge() + 1.0, v0: 1.0, points_per_side: 2000 }
    }

    fn validate(&self, law: &MpLaw) -> Result<()> {
        if !(self.a_l < law.lower_edge() && self.a_r > law.upper_edge() && self.v0 > 0.0) {
            return Err(Error::Precondition(format!(
                "contour [{}, {}] x v0={} must enclose [{}, {}] with v0 > 0",
                self.a_l,
                self.a_r,
                self.v0,
                law.lower_edge(),
                law.upper_edge()
            )));
        }
        if self.points_per_side < GL_ORDER {
            return Err(Error::Precondition(format!("need at least {GL_ORDER} points per side")));
        }
        Ok(())
    }
}

/// Both sides of the contour identity at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourReport {
    /// `p·h·(f_n(x) - smoothed_mp_reference(x))`.
    pub direct: f64,
    /// Real part of the contour integral.
    pub contour: f64,
    /// Imaginary part of the contour integral (zero in exact arithmetic).
    pub contour_imag: f64,
    /// `|direct - contour| / (|direct| + 1e-12)`.
    pub relative_residual: f64,
}

const GL_ORDER: usize = 10;

/// `-(2πi)⁻¹ ∮ K((x - z)/h) g(z) dz` over the rectangle, counter-clockwise.
pub(crate) fn contour_integral<G>(k: &KernelProfile, h: f64, x: f64, spec: &ContourSpec, g: G) -> Result<Complex64>
where
    G: Fn(ComplexPoint) -> Result<Complex64>,
{
    let gl = GaussLegendre::new(GL_ORDER);
    let panels = spec.points_per_side / GL_ORDER;
    let w = spec.v0 * h;
    let kernel = |z: ComplexPoint| -> Result<Complex64> {
        k.complex_value((x - z) / h)
            .ok_or_else(|| Error::Precondition(format!("kernel `{}` has no complex extension", k.name())))
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = None;
    let mut side = |from: Complex64, to: Complex64| {
        let dz = to - from;
        gl.for_each_node(0.0, 1.0, panels, |t, wt| {
            if err.is_some() {
                return;
            }
            let z = from + dz * t;
            match kernel(z).and_then(|kv| g(z).map(|gv| kv * gv)) {
                Ok(v) => total += v * dz * wt,
                Err(e) => err = Some(e),
            }
        });
    };
    let (bl, br) = (Complex64::new(spec.a_l, -w), Complex64::new(spec.a_r, -w));
    let (tr, tl) = (Complex64::new(spec.a_r, w), Complex64::new(spec.a_l, w));
    side(bl, br);
    side(br, tr);
    side(tr, tl);
    side(tl, bl);
    if let Some(e) = err {
        return Err(e);
    }
    Ok(-total / Complex64::new(0.0, 2.0 * PI))
}

/// Evaluates the smoothed statistic directly and as the contour integral of
/// the centered resolvent trace `p·(m_{F^A}(z) - m_{c_n}(z))`.
pub fn contour_check(
    s: &SpectralSample,
    law: &MpLaw,
    k: &KernelProfile,
    h: f64,
    x: f64,
    spec: &ContourSpec,
) -> Result<ContourReport> {
    check_bandwidth(h)?;
    spec.validate(law)?;
    if !law.is_interior(x) {
        return Err(Error::Precondition(format!("x = {x} is not inside the bulk")));
    }
    if s.min() <= spec.a_l || s.max() >= spec.a_r {
        return Err(Error::Precondition(format!(
            "spectrum [{}, {}] is not enclosed by the contour ({}, {})",
            s.min(),
            s.max(),
            spec.a_l,
            spec.a_r
        )));
    }
    let p = s.p() as f64;
    let resolvent = |z: ComplexPoint| -> Result<Complex64> { Ok(p * (s.esd_stieltjes(z)? - law.stieltjes(z)?)) };
    let contour = contour_integral(k, h, x, spec, resolvent)?;
    let direct = p * h * (smoothed_density(s, k, h, x)? - smoothed_mp_reference(law, k, h, x)?);
    Ok(ContourReport {
        direct,
        contour: contour.re,
        contour_imag: contour.im,
        relative_residual: (direct - contour.re).abs().hypot(contour.im) / (direct.abs() + 1e-12),
    })
}

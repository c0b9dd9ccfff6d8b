//! Reference computations that share no code path with the library.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// `(sign, ln|det|)` by LU with partial pivoting on a row-major matrix.
pub fn lu_log_det(a: &[f64], n: usize) -> (f64, f64) {
    let mut m = a.to_vec();
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    for k in 0..n {
        let pivot = (k..n).max_by(|&i, &j| m[i * n + k].abs().total_cmp(&m[j * n + k].abs())).unwrap();
        if m[pivot * n + k] == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if pivot != k {
            for j in 0..n {
                m.swap(k * n + j, pivot * n + j);
            }
            sign = -sign;
        }
        let d = m[k * n + k];
        if d < 0.0 {
            sign = -sign;
        }
        log_abs += d.abs().ln();
        for i in k + 1..n {
            let f = m[i * n + k] / d;
            if f != 0.0 {
                for j in k + 1..n {
                    m[i * n + j] -= f * m[k * n + j];
                }
            }
        }
    }
    (sign, log_abs)
}

/// Symmetric matrix with independent standard normal entries on and above
/// the diagonal, row-major.
pub fn random_symmetric(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut a = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let v: f64 = rng.sample(rand_distr::StandardNormal);
            a[i * dim + j] = v;
            a[j * dim + i] = v;
        }
    }
    a
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = 2 * panels;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn mp_edges(c: f64) -> (f64, f64) {
    ((1.0 - c.sqrt()).powi(2), (1.0 + c.sqrt()).powi(2))
}

fn mp_density(c: f64, x: f64) -> f64 {
    let (a, b) = mp_edges(c);
    if x <= a || x >= b {
        return 0.0;
    }
    ((b - x) * (x - a)).sqrt() / (2.0 * PI * c * x)
}

/// `∫_a^b f` for a density with square-root behaviour at both ends, by
/// Simpson after `y = a + u²` on the lower half and `y = b - u²` on the upper.
pub fn edge_integral(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = (mid - a).sqrt();
    simpson(|u| 2.0 * u * f(a + u * u), 0.0, half, 4000) + simpson(|u| 2.0 * u * f(b - u * u), 0.0, half, 4000)
}

/// `∫_a^x f_c` with the same substitutions.
pub fn mp_bulk_mass(c: f64, x: f64) -> f64 {
    let (a, b) = mp_edges(c);
    let x = x.clamp(a, b);
    let mid = 0.5 * (a + b);
    let lower = |upto: f64| simpson(|u| 2.0 * u * mp_density(c, a + u * u), 0.0, (upto - a).sqrt(), 4000);
    if x <= mid {
        lower(x)
    } else {
        let upper_from = |from: f64| simpson(|u| 2.0 * u * mp_density(c, b - u * u), 0.0, (b - from).sqrt(), 4000);
        lower(mid) + upper_from(mid) - upper_from(x)
    }
}

pub fn mp_cdf(c: f64, x: f64) -> f64 {
    let atom = (1.0 - 1.0 / c).max(0.0);
    if x < 0.0 {
        return 0.0;
    }
    atom + mp_bulk_mass(c, x)
}

fn gaussian_derivative(x: f64) -> f64 {
    -x * (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Gauss–Legendre rule on [-1, 1] by Golub–Welsch-free Newton iteration,
/// written out separately from the library.
fn legendre_rule(order: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(order);
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

fn composite(rule: &[(f64, f64)], a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        total += rule.iter().map(|&(t, wt)| wt * f(mid + 0.5 * w * t)).sum::<f64>() * 0.5 * w;
    }
    total
}

/// σ² for the Gaussian kernel by the iterated integral
/// `∫ K'(x) ∫ K'(y) ln (x - y)² dy dx`, with the inner integral split at
/// `y = x` and graded by `u = e^{-t}` next to the singularity.
pub fn gaussian_sigma2_iterated(panels_per_unit: usize) -> f64 {
    let rule = legendre_rule(20);
    let half = 12.0;
    let inner = |x: f64| -> f64 {
        let pair = |u: f64| gaussian_derivative(x - u) + gaussian_derivative(x + u);
        // ∫_0^1 g(u) ln u² du = -2 ∫_0^∞ t e^{-t} g(e^{-t}) dt
        let near = -2.0 * composite(&rule, 0.0, 45.0, 45 * panels_per_unit, |t| t * (-t).exp() * pair((-t).exp()));
        let reach = half + x.abs() + 1.0;
        let far = composite(&rule, 1.0, reach, ((reach - 1.0).ceil() as usize) * panels_per_unit, |u| {
            pair(u) * (u * u).ln()
        });
        near + far
    };
    let double = composite(&rule, -half, half, 2 * half as usize * panels_per_unit, |x| gaussian_derivative(x) * inner(x));
    -double / (2.0 * PI * PI)
}

/// Importance-sampling estimate of the same σ², drawing both arguments from
/// `|K'| / ∫|K'|` (a Rayleigh magnitude with a random sign).
pub fn gaussian_sigma2_monte_carlo(draws: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let total_variation = 2.0 / (2.0 * PI).sqrt();
    let draw = |rng: &mut ChaCha20Rng| -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        let r = (-2.0 * u.ln()).sqrt();
        if rng.random::<bool>() {
            r
        } else {
            -r
        }
    };
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..draws {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        // sign(K'(x)) sign(K'(y)) = sign(x) sign(y)
        let v = (x * y).signum() * ((x - y) * (x - y)).ln();
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / draws as f64;
    let se = ((sum_sq / draws as f64 - mean * mean) / draws as f64).sqrt();
    let scale = total_variation * total_variation / (2.0 * PI * PI);
    (-mean * scale, se * scale)
}

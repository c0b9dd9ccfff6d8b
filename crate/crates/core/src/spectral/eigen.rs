//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by implicit-shift QL with Wilkinson shifts.
//!
//! Matrices are stored row-major in a flat `Vec<f64>`.

use crate::error::{Error, Result};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Wraps row-major storage; asymmetry above `1e-12` (relative to the
    /// largest entry) is rejected.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::Precondition(format!(
                "expected {dim}x{dim} storage, got {} entries",
                data.len()
            )));
        }
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..dim {
            for j in 0..i {
                if (data[i * dim + j] - data[j * dim + i]).abs() > 1e-12 * scale {
                    return Err(Error::Precondition(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("matrix has non-finite entries".into()));
        }
        Ok(Self { dim, data })
    }

    pub(crate) fn from_trusted(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Symmetric tridiagonal matrix with diagonal `diag` and sub-diagonal
/// `off` (`off[i]` couples rows `i` and `i + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Output of [`tridiagonalize`]: `A = Q T Qᵀ`.
#[derive(Debug, Clone)]
pub struct TridiagonalForm {
    pub tri: Tridiagonal,
    /// Row-major orthogonal `Q`, present when requested.
    pub q: Option<Vec<f64>>,
}

/// Householder reduction. With `accumulate` the orthogonal factor is formed
/// explicitly.
pub fn tridiagonalize(a: &SymmetricMatrix, accumulate: bool) -> TridiagonalForm {
    let n = a.dim;
    let mut m = a.data.clone();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    // Householder vectors, one per step, kept for accumulation.
    let mut reflectors: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];

    for k in 0..n.saturating_sub(2) {
        let start = k + 1;
        let len = n - start;
        // x = column k below the diagonal (row k by symmetry, contiguous).
        let row_k = &m[k * n + start..k * n + n];
        let scale: f64 = row_k.iter().map(|x| x.abs()).sum();
        if scale == 0.0 {
            diag[k] = m[k * n + k];
            off[k] = 0.0;
            continue;
        }
        let mut sigma = 0.0;
        for (dst, &x) in v[..len].iter_mut().zip(row_k) {
            *dst = x / scale;
            sigma += *dst * *dst;
        }
        let alpha = -v[0].signum() * sigma.sqrt();
        let alpha = if alpha == 0.0 { -sigma.sqrt() } else { alpha };
        v[0] -= alpha;
        let vnorm2 = sigma - 2.0 * alpha * (v[0] + alpha) + alpha * alpha;
        // vnorm2 = |x/scale - alpha e1|^2
        let vnorm2 = if vnorm2 > 0.0 { vnorm2 } else { v[..len].iter().map(|x| x * x).sum() };
        if vnorm2 == 0.0 {
            diag[k] = m[k * n + k];
            off[k] = m[k * n + start];
            continue;
        }
        let beta = 2.0 / vnorm2;

        // w = beta * A22 v
        for i in 0..len {
            let row = &m[(start + i) * n + start..(start + i) * n + n];
            w[i] = beta * dot(row, &v[..len]);
        }
        // w <- w - (beta/2)(vᵀw) v
        let gamma = 0.5 * beta * dot(&w[..len], &v[..len]);
        for i in 0..len {
            w[i] -= gamma * v[i];
        }
        // A22 <- A22 - v wᵀ - w vᵀ
        for i in 0..len {
            let (vi, wi) = (v[i], w[i]);
            let row = &mut m[(start + i) * n + start..(start + i) * n + n];
            for ((r, &vj), &wj) in row.iter_mut().zip(&v[..len]).zip(&w[..len]) {
                *r -= vi * wj + wi * vj;
            }
        }
        diag[k] = m[k * n + k];
        off[k] = alpha * scale;
        if accumulate {
            reflectors.push((start, v[..len].to_vec(), beta));
        }
    }
    if n >= 2 {
        diag[n - 2] = m[(n - 2) * n + n - 2];
        off[n - 2] = m[(n - 2) * n + n - 1];
    }
    diag[n - 1] = m[(n - 1) * n + n - 1];

    let q = accumulate.then(|| {
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            q[i * n + i] = 1.0;
        }
        // Q = H_0 H_1 ... H_{n-3}; apply right-to-left to the identity.
        for (start, v, beta) in reflectors.iter().rev() {
            let len = v.len();
            // Q[start.., start..] <- (I - beta v vᵀ) Q[start.., start..]
            let mut t = vec![0.0; n];
            for (i, &vi) in v.iter().enumerate() {
                let row = &q[(start + i) * n..(start + i) * n + n];
                for (tj, &qij) in t.iter_mut().zip(row) {
                    *tj += vi * qij;
                }
            }
            for i in 0..len {
                let f = beta * v[i];
                let row = &mut q[(start + i) * n..(start + i) * n + n];
                for (qij, &tj) in row.iter_mut().zip(&t) {
                    *qij -= f * tj;
                }
            }
        }
        q
    });

    TridiagonalForm { tri: Tridiagonal { diag, off }, q }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub(crate) fn dot_product(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b)
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// When `z` is given (row-major `n×n`), the rotations are applied to its
/// columns so that on return column `j` is the eigenvector for `diag[j]`.
///
/// Eigenvalues are returned unsorted in `diag`; `off` is destroyed.
pub fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = diag.len();
    if n <= 1 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[..n - 1]);
    let max_sweeps = 50 * n;
    let mut sweeps = 0usize;

    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > max_sweeps {
                return Err(Error::NoConvergence { what: "tridiagonal QL", iterations: sweeps });
            }
            // Wilkinson shift from the leading 2x2 block.
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for row in 0..n {
                        let zi1 = z[row * n + i + 1];
                        let zi = z[row * n + i];
                        z[row * n + i + 1] = s * zi + c * zi1;
                        z[row * n + i] = c * zi - s * zi1;
                    }
                }
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    off.iter_mut().for_each(|x| *x = 0.0);
    Ok(())
}

/// All eigenvalues of `a`, nondecreasing.
pub fn symmetric_eigenvalues(a: &SymmetricMatrix) -> Result<Vec<f64>> {
    let TridiagonalForm { tri, .. } = tridiagonalize(a, false);
    let Tridiagonal { mut diag, mut off } = tri;
    tridiagonal_ql(&mut diag, &mut off, None)?;
    diag.sort_by(f64::total_cmp);
    Ok(diag)
}

/// Eigenvalues (nondecreasing) and the row-major matrix whose columns are
/// the matching orthonormal eigenvectors.
pub fn symmetric_eigen(a: &SymmetricMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.dim;
    let TridiagonalForm { tri, q } = tridiagonalize(a, true);
    let mut z = q.expect("accumulated factor");
    let Tridiagonal { mut diag, mut off } = tri;
    tridiagonal_ql(&mut diag, &mut off, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new, &old) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + new] = z[row * n + old];
        }
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
        let mut rng = crate::spectral::rng::rng_from_seed(seed);
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.sample(StandardNormal);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymmetricMatrix::from_row_major(n, data).unwrap()
    }

    fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
        v.fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn diagonal_and_two_by_two() {
        let a = SymmetricMatrix::from_row_major(3, vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(symmetric_eigenvalues(&a).unwrap(), vec![1.0, 2.0, 3.0]);
        let a = SymmetricMatrix::from_row_major(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let ev = symmetric_eigenvalues(&a).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn one_by_one() {
        let a = SymmetricMatrix::from_row_major(1, vec![-4.5]).unwrap();
        assert_eq!(symmetric_eigenvalues(&a).unwrap(), vec![-4.5]);
    }

    #[test]
    fn rejects_asymmetric_input() {
        assert!(SymmetricMatrix::from_row_major(2, vec![1.0, 2.0, 3.0, 1.0]).is_err());
        assert!(SymmetricMatrix::from_row_major(2, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn tridiagonal_stage_is_orthogonal_and_exact() {
        for &n in &[5usize, 40, 128] {
            let a = random_symmetric(n, n as u64);
            let form = tridiagonalize(&a, true);
            let q = form.q.unwrap();
            // QᵀQ = I
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let s: f64 = (0..n).map(|k| q[k * n + i] * q[k * n + j]).sum();
                    worst = worst.max((s - if i == j { 1.0 } else { 0.0 }).abs());
                }
            }
            assert!(worst <= 1e-10, "n={n}: orthogonality {worst}");
            // Q T Qᵀ = A
            let t = |i: usize, j: usize| -> f64 {
                if i == j {
                    form.tri.diag[i]
                } else if i + 1 == j {
                    form.tri.off[i]
                } else if j + 1 == i {
                    form.tri.off[j]
                } else {
                    0.0
                }
            };
            let mut qt = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    qt[i * n + j] = (j.saturating_sub(1)..(j + 2).min(n)).map(|k| q[i * n + k] * t(k, j)).sum();
                }
            }
            let mut err: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let s: f64 = (0..n).map(|k| qt[i * n + k] * q[j * n + k]).sum();
                    err = err.max((s - a.get(i, j)).abs());
                }
            }
            assert!(err <= 1e-10 * a.norm(), "n={n}: reconstruction {err}");
        }
    }

    #[test]
    fn backward_error_on_random_instances() {
        for &n in &[3usize, 17, 64, 200] {
            let a = random_symmetric(n, 100 + n as u64);
            let (values, vectors) = symmetric_eigen(&a).unwrap();
            // ‖A − QΛQᵀ‖_F
            let mut err2 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let s: f64 = (0..n).map(|k| vectors[i * n + k] * values[k] * vectors[j * n + k]).sum();
                    err2 += (s - a.get(i, j)).powi(2);
                }
            }
            assert!(err2.sqrt() <= 1e-10 * a.norm(), "n={n}");
            assert!(values.windows(2).all(|w| w[0] <= w[1]));
            let fast = symmetric_eigenvalues(&a).unwrap();
            assert!(max_abs(fast.iter().zip(&values).map(|(x, y)| x - y)) < 1e-10 * a.norm());
        }
    }

    #[test]
    fn repeated_eigenvalues_and_zero_blocks() {
        let mut data = vec![0.0; 16];
        for i in 0..4 {
            data[i * 4 + i] = 2.0;
        }
        let a = SymmetricMatrix::from_row_major(4, data).unwrap();
        assert_eq!(symmetric_eigenvalues(&a).unwrap(), vec![2.0; 4]);
        let zero = SymmetricMatrix::from_row_major(3, vec![0.0; 9]).unwrap();
        assert_eq!(symmetric_eigenvalues(&zero).unwrap(), vec![0.0; 3]);
    }
}

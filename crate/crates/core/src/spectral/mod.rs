//! Sample covariance matrices, their spectra, and the empirical spectral
//! distribution.

pub mod eigen;
pub mod rng;

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mp_law::ComplexPoint;

pub use eigen::{symmetric_eigen, symmetric_eigenvalues, SymmetricMatrix};
pub use rng::{replication_seed, rng_from_seed, SpectralRng};

/// Eigenvalues above this negative floor are clamped to zero silently.
pub const ZERO_FLOOR: f64 = -1e-9;

/// Distribution of the i.i.d. matrix entries. Both have mean 0, variance 1
/// and fourth moment 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryDistribution {
    #[default]
    Gaussian,
    /// `±√3` with probability 1/6 each, `0` with probability 2/3.
    ThreePoint,
}

impl EntryDistribution {
    fn draw(self, rng: &mut SpectralRng) -> f64 {
        match self {
            Self::Gaussian => rng.sample(StandardNormal),
            Self::ThreePoint => {
                let u: u32 = rng.random_range(0..6);
                match u {
                    0 => 3f64.sqrt(),
                    1 => -(3f64.sqrt()),
                    _ => 0.0,
                }
            }
        }
    }
}

/// A `p×n` data matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    p: usize,
    n: usize,
    entries: Vec<f64>,
    seed: Option<u64>,
}

impl DataMatrix {
    pub fn from_row_major(p: usize, n: usize, entries: Vec<f64>) -> Result<Self> {
        if p == 0 || n == 0 {
            return Err(Error::Precondition(format!("data matrix must be non-empty, got {p}x{n}")));
        }
        if entries.len() != p * n {
            return Err(Error::Precondition(format!("expected {} entries, got {}", p * n, entries.len())));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("data matrix has non-finite entries".into()));
        }
        Ok(Self { p, n, entries, seed: None })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }
}

/// Draws a `p×n` matrix of i.i.d. entries from ChaCha8 seeded with `seed`.
pub fn sample_data_matrix(p: usize, n: usize, seed: u64, dist: EntryDistribution) -> Result<DataMatrix> {
    if p == 0 || n == 0 {
        return Err(Error::Precondition(format!("dimensions must be positive, got p={p}, n={n}")));
    }
    let mut rng = rng_from_seed(seed);
    let entries = (0..p * n).map(|_| dist.draw(&mut rng)).collect();
    Ok(DataMatrix { p, n, entries, seed: Some(seed) })
}

/// `A = XXᵀ/n`, symmetric by construction (only the upper triangle is
/// computed).
pub fn sample_covariance(x: &DataMatrix) -> SymmetricMatrix {
    let (p, n) = (x.p, x.n);
    let inv_n = 1.0 / n as f64;
    let mut a = vec![0.0; p * p];
    for i in 0..p {
        let ri = x.row(i);
        for j in i..p {
            let v = eigen::dot_product(ri, x.row(j)) * inv_n;
            a[i * p + j] = v;
            a[j * p + i] = v;
        }
    }
    SymmetricMatrix::from_trusted(p, a)
}

/// Spectrum of one sample covariance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    eigenvalues: Vec<f64>,
    p: usize,
    n: usize,
}

impl SpectralSample {
    /// Validates and sorts a spectrum obtained elsewhere (e.g. read from CSV).
    pub fn new(mut eigenvalues: Vec<f64>, n: usize) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Precondition("spectrum is empty".into()));
        }
        if n == 0 {
            return Err(Error::Precondition("sample size must be positive".into()));
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("spectrum has non-finite values".into()));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self { p: eigenvalues.len(), eigenvalues, n })
    }

    /// Eigendecomposes `XXᵀ/n`.
    pub fn from_data(x: &DataMatrix) -> Result<Self> {
        let a = sample_covariance(x);
        let mut eigenvalues = symmetric_eigenvalues(&a)?;
        for v in eigenvalues.iter_mut() {
            if *v < 0.0 {
                if *v < ZERO_FLOOR {
                    log::warn!("eigenvalue {v:e} below the numerical zero floor; clamping");
                }
                *v = 0.0;
            }
        }
        Ok(Self { p: x.p, n: x.n, eigenvalues })
    }

    /// Samples a data matrix and returns its spectrum.
    pub fn simulate(p: usize, n: usize, seed: u64, dist: EntryDistribution) -> Result<Self> {
        Self::from_data(&sample_data_matrix(p, n, seed, dist)?)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `p / n`.
    pub fn aspect_ratio(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.p - 1]
    }

    /// `F^A(x) = #{λ ≤ x} / p`.
    pub fn esd(&self, x: f64) -> f64 {
        let count = self.eigenvalues.partition_point(|&v| v <= x);
        count as f64 / self.p as f64
    }

    /// `(1/p) Σ (λ_k - z)⁻¹`.
    pub fn esd_stieltjes(&self, z: ComplexPoint) -> Result<ComplexPoint> {
        if z.im == 0.0 && self.eigenvalues.binary_search_by(|v| v.total_cmp(&z.re)).is_ok() {
            return domain(format!("z = {} coincides with an eigenvalue", z.re));
        }
        let sum: Complex64 = self.eigenvalues.iter().map(|&l| 1.0 / (l - z)).sum();
        Ok(sum / self.p as f64)
    }

    /// Writes the eigenvalue CSV: header `eigenvalue`, one value per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "eigenvalue")?;
        for v in &self.eigenvalues {
            writeln!(out, "{}", crate::io::fmt_f64(*v))?;
        }
        Ok(())
    }

    /// Reads the eigenvalue CSV written by [`SpectralSample::write_csv`].
    pub fn read_csv<R: BufRead>(input: R, n: usize) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.ok_or_else(|| Error::Parse("empty eigenvalue file".into()))?;
        if header.trim() != "eigenvalue" {
            return Err(Error::Parse(format!("expected header `eigenvalue`, found `{}`", header.trim())));
        }
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let v: f64 = t
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: `{t}` is not a number", i + 2)))?;
            values.push(v);
        }
        Self::new(values, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mp_law::MpLaw;

    #[test]
    fn data_matrix_is_reproducible() {
        let a = sample_data_matrix(1, 1, 42, EntryDistribution::Gaussian).unwrap();
        let b = sample_data_matrix(1, 1, 42, EntryDistribution::Gaussian).unwrap();
        assert_eq!(a.entries()[0].to_bits(), b.entries()[0].to_bits());
        assert_eq!(a.seed(), Some(42));
        let c = sample_data_matrix(1, 1, 43, EntryDistribution::Gaussian).unwrap();
        assert_ne!(a.entries()[0], c.entries()[0]);
        assert!(sample_data_matrix(0, 3, 1, EntryDistribution::Gaussian).is_err());
    }

    #[test]
    fn entry_moments() {
        for dist in [EntryDistribution::Gaussian, EntryDistribution::ThreePoint] {
            let x = sample_data_matrix(100, 200, 2024, dist).unwrap();
            let m = x.entries().len() as f64;
            let mean = x.entries().iter().sum::<f64>() / m;
            let fourth = x.entries().iter().map(|v| v.powi(4)).sum::<f64>() / m;
            assert!(mean.abs() < 4.0 / (2e4f64).sqrt(), "{dist:?} mean {mean}");
            assert!((fourth - 3.0).abs() < 0.6, "{dist:?} fourth {fourth}");
        }
    }

    #[test]
    fn covariance_small_cases() {
        let x = DataMatrix::from_row_major(1, 1, vec![2.0]).unwrap();
        assert_eq!(sample_covariance(&x).as_slice(), &[4.0]);
        let x = DataMatrix::from_row_major(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        // XXᵀ = [[5, 11], [11, 25]]
        assert_eq!(sample_covariance(&x).as_slice(), &[2.5, 5.5, 5.5, 12.5]);
    }

    #[test]
    fn covariance_trace_identity() {
        let x = sample_data_matrix(7, 13, 5, EntryDistribution::Gaussian).unwrap();
        let a = sample_covariance(&x);
        let direct: f64 = x.entries().iter().map(|v| v * v).sum::<f64>() / 13.0;
        assert!((a.trace() - direct).abs() < 1e-13 * direct);
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(a.get(i, j), a.get(j, i));
            }
        }
    }

    #[test]
    fn esd_counts() {
        let s = SpectralSample::new(vec![3.0, 1.0, 2.0], 3).unwrap();
        assert_eq!(s.eigenvalues(), &[1.0, 2.0, 3.0]);
        assert!((s.esd(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.esd(0.5), 0.0);
        assert_eq!(s.esd(3.5), 1.0);
        assert!((s.esd(1.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn esd_stieltjes_examples() {
        let s = SpectralSample::new(vec![1.0], 1).unwrap();
        let m = s.esd_stieltjes(Complex64::new(0.0, 1.0)).unwrap();
        assert!((m - Complex64::new(0.5, 0.5)).norm() < 1e-15);
        assert!(s.esd_stieltjes(Complex64::new(1.0, 0.0)).is_err());
        assert!(s.esd_stieltjes(Complex64::new(2.0, 0.0)).is_ok());
    }

    #[test]
    fn spectrum_respects_trace_and_floor() {
        let x = sample_data_matrix(60, 40, 9, EntryDistribution::Gaussian).unwrap();
        let a = sample_covariance(&x);
        let s = SpectralSample::from_data(&x).unwrap();
        let sum: f64 = s.eigenvalues().iter().sum();
        assert!((sum - a.trace()).abs() <= 1e-8 * a.trace());
        // p > n: 20 exact zeros up to rounding
        assert!(s.min() >= 0.0);
        assert!(s.eigenvalues()[19] < 1e-9);
        assert!(s.eigenvalues()[20] > 1e-3);
    }

    #[test]
    fn moderate_size_against_mp() {
        let s = SpectralSample::simulate(200, 400, 11, EntryDistribution::Gaussian).unwrap();
        let law = MpLaw::for_dims(200, 400).unwrap();
        let z = Complex64::new(1.0, 0.5);
        let diff = (s.esd_stieltjes(z).unwrap() - law.stieltjes(z).unwrap()).norm();
        assert!(diff < 0.05, "{diff}");
        assert!(s.max() < law.upper_edge() + 0.3);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let s = SpectralSample::new(vec![0.1, 1.0 / 3.0, 2.5], 6).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = SpectralSample::read_csv(&buf[..], 6).unwrap();
        assert_eq!(back, s);
        assert!(matches!(SpectralSample::read_csv(&b"value\n1\n"[..], 3), Err(Error::Parse(_))));
        assert!(matches!(SpectralSample::read_csv(&b"eigenvalue\n1\nabc\n"[..], 3), Err(Error::Parse(_))));
        assert!(matches!(SpectralSample::read_csv(&b""[..], 3), Err(Error::Parse(_))));
    }
}

//! Seeded replication harness for the limit theorems.
//!
//! Replication `r` always uses the seed `replication_seed(master_seed, r)`
//! and results are gathered in replication order, so a report depends only
//! on its configuration, never on the thread count.

pub mod ks;

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clt::{
    cdf_statistic, confidence_interval_cdf, confidence_interval_quantile, density_statistic,
    density_statistic_centered, quantile_statistic, quantile_variance, sigma_squared, DensityPlugIn,
    StatisticKind,
};
use crate::error::{Error, Result};
use crate::kernels::{gaussian_kernel, normal_cdf, BandwidthKind, BandwidthRule, KernelProfile};
use crate::mp_law::{ComplexPoint, MpLaw};
use crate::spectral::{replication_seed, EntryDistribution, SpectralSample};

pub use ks::{kolmogorov_survival, ks_statistic, ks_test, KsResult};

fn default_ks_threshold() -> f64 {
    0.01
}

fn default_covariance_tolerance() -> f64 {
    0.2
}

fn default_scale() -> f64 {
    1.0
}

/// One Monte Carlo verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: usize,
    pub n: usize,
    pub replications: usize,
    pub statistic: StatisticKind,
    /// Evaluation points for the distribution and density statistics.
    #[serde(default)]
    pub points: Vec<f64>,
    /// Quantile levels for the quantile statistic.
    #[serde(default)]
    pub alpha_list: Vec<f64>,
    /// Bandwidth regime; defaults to the regime of `statistic`.
    #[serde(default)]
    pub bandwidth_kind: Option<BandwidthKind>,
    /// Explicit bandwidth, overriding the rule.
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_scale")]
    pub bandwidth_scale: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub entry_dist: EntryDistribution,
    #[serde(default = "default_ks_threshold")]
    pub ks_threshold: f64,
    /// Bound on the absolute off-diagonal correlation.
    #[serde(default = "default_covariance_tolerance")]
    pub covariance_tolerance: f64,
}

impl ExperimentConfig {
    /// Defaults for everything but the scale, statistic and evaluation points.
    pub fn new(p: usize, n: usize, replications: usize, statistic: StatisticKind, master_seed: u64) -> Self {
        Self {
            p,
            n,
            replications,
            statistic,
            points: Vec::new(),
            alpha_list: Vec::new(),
            bandwidth_kind: None,
            bandwidth: None,
            bandwidth_scale: 1.0,
            master_seed,
            entry_dist: EntryDistribution::Gaussian,
            ks_threshold: default_ks_threshold(),
            covariance_tolerance: default_covariance_tolerance(),
        }
    }

    pub fn with_points(mut self, points: &[f64]) -> Self {
        self.points = points.to_vec();
        self
    }

    pub fn with_alphas(mut self, alphas: &[f64]) -> Self {
        self.alpha_list = alphas.to_vec();
        self
    }

    pub fn law(&self) -> Result<MpLaw> {
        MpLaw::for_dims(self.p, self.n)
    }

    pub fn bandwidth_kind(&self) -> BandwidthKind {
        self.bandwidth_kind.unwrap_or(match self.statistic {
            StatisticKind::Cdf | StatisticKind::Quantile => BandwidthKind::Cdf,
            StatisticKind::Density | StatisticKind::DensityCentered => BandwidthKind::Density,
        })
    }

    pub fn bandwidth(&self) -> Result<f64> {
        match self.bandwidth {
            Some(h) if h > 0.0 && h.is_finite() => Ok(h),
            Some(h) => Err(Error::Config(format!("bandwidth must be positive, got {h}"))),
            None => BandwidthRule::for_kind(self.bandwidth_kind()).with_scale(self.bandwidth_scale).bandwidth(self.n),
        }
    }

    /// The evaluation coordinates: points, or quantile levels for the
    /// quantile statistic.
    pub fn coordinates(&self) -> &[f64] {
        match self.statistic {
            StatisticKind::Quantile => &self.alpha_list,
            _ => &self.points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.replications < 2 {
            return bad(format!("replications must be at least 2, got {}", self.replications));
        }
        if self.p == 0 || self.n < 3 {
            return bad(format!("need p >= 1 and n >= 3, got p={}, n={}", self.p, self.n));
        }
        if self.p >= self.n {
            return bad(format!("p/n must lie in (0, 1), got {}/{}", self.p, self.n));
        }
        if !(self.ks_threshold > 0.0 && self.ks_threshold < 1.0) {
            return bad(format!("ks_threshold must lie in (0, 1), got {}", self.ks_threshold));
        }
        self.bandwidth()?;
        let law = self.law()?;
        let coords = self.coordinates();
        if coords.is_empty() {
            return bad(match self.statistic {
                StatisticKind::Quantile => "alpha_list is empty".into(),
                _ => "points is empty".into(),
            });
        }
        for (i, &x) in coords.iter().enumerate() {
            if coords[..i].contains(&x) {
                return bad(format!("duplicate evaluation coordinate {x}"));
            }
            match self.statistic {
                StatisticKind::Quantile => {
                    if !(x > 0.0 && x < 1.0) {
                        return bad(format!("quantile level {x} is not in (0, 1)"));
                    }
                    let q = law.quantile(x)?;
                    if !law.is_interior(q) {
                        return bad(format!("quantile level {x} maps to the spectral edge"));
                    }
                }
                _ => {
                    if !law.is_interior(x) {
                        return bad(format!(
                            "point {x} is outside ({}, {})",
                            law.lower_edge(),
                            law.upper_edge()
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Spectra of `replications` independent data matrices, in replication order.
pub fn simulate_replications(
    p: usize,
    n: usize,
    replications: usize,
    master_seed: u64,
    dist: EntryDistribution,
) -> Result<Vec<SpectralSample>> {
    (0..replications)
        .into_par_iter()
        .map(|r| {
            SpectralSample::simulate(p, n, replication_seed(master_seed, r as u64), dist)
                .map_err(|e| Error::Replication { index: r, source: Box::new(e) })
        })
        .collect()
}

/// Aggregated output of [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub config: ExperimentConfig,
    pub bandwidth: f64,
    /// One row per replication, one column per point.
    pub statistics: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Limiting variance at each point.
    pub theoretical_variance: Vec<f64>,
    pub ks: Vec<KsResult>,
    pub checks: PassFlags,
    pub pass: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassFlags {
    pub ks: Vec<bool>,
    /// `|mean| <= 4 sd / √R` per point.
    pub mean_zero: Vec<bool>,
    /// Largest absolute off-diagonal correlation.
    pub max_off_diagonal_correlation: f64,
    pub off_diagonal: bool,
}

impl CltReport {
    pub fn variances(&self) -> Vec<f64> {
        (0..self.mean.len()).map(|j| self.covariance[j][j]).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the wall-clock field zeroed; identical for identical configs.
    pub fn to_canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.seconds = 0.0;
        copy.to_json()
    }
}

fn limiting_variances(cfg: &ExperimentConfig, law: &MpLaw, kernel: &KernelProfile) -> Result<Vec<f64>> {
    match cfg.statistic {
        StatisticKind::Cdf => Ok(vec![1.0; cfg.points.len()]),
        StatisticKind::Density | StatisticKind::DensityCentered => {
            let s2 = sigma_squared(kernel)?.value;
            Ok(vec![s2; cfg.points.len()])
        }
        StatisticKind::Quantile => cfg.alpha_list.iter().map(|&a| Ok(quantile_variance(law, a)?.value)).collect(),
    }
}

fn statistic_row(
    cfg: &ExperimentConfig,
    law: &MpLaw,
    kernel: &KernelProfile,
    h: f64,
    s: &SpectralSample,
) -> Result<Vec<f64>> {
    cfg.coordinates()
        .iter()
        .map(|&x| match cfg.statistic {
            StatisticKind::Cdf => cdf_statistic(law, s, kernel, h, x),
            StatisticKind::Density => density_statistic(law, s, kernel, h, x),
            StatisticKind::DensityCentered => density_statistic_centered(law, s, kernel, h, x),
            StatisticKind::Quantile => quantile_statistic(law, s, kernel, h, x),
        })
        .collect()
}

fn mean_and_covariance(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let r = rows.len() as f64;
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= r);
    let mut cov = vec![vec![0.0; d]; d];
    for row in rows {
        for i in 0..d {
            for j in i..d {
                cov[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= r - 1.0;
            cov[j][i] = cov[i][j];
        }
    }
    (mean, cov)
}

/// Runs the configured experiment on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<CltReport> {
    cfg.validate()?;
    let samples = simulate_replications(cfg.p, cfg.n, cfg.replications, cfg.master_seed, cfg.entry_dist)?;
    evaluate_experiment(cfg, &samples)
}

/// Runs the experiment on a dedicated pool of `threads` workers.
pub fn run_experiment_in(cfg: &ExperimentConfig, threads: usize) -> Result<CltReport> {
    with_threads(threads, || run_experiment(cfg))
}

/// Runs `f` inside a rayon pool with `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    pool.install(f)
}

/// Computes the report from already simulated spectra, which must have been
/// produced by [`simulate_replications`] with the config's parameters.
pub fn evaluate_experiment(cfg: &ExperimentConfig, samples: &[SpectralSample]) -> Result<CltReport> {
    let start = Instant::now();
    cfg.validate()?;
    if samples.len() != cfg.replications || samples.iter().any(|s| s.p() != cfg.p || s.n() != cfg.n) {
        return Err(Error::Config("samples do not match the configuration".into()));
    }
    let law = cfg.law()?;
    let kernel = gaussian_kernel();
    let h = cfg.bandwidth()?;
    let statistics: Vec<Vec<f64>> = samples
        .par_iter()
        .enumerate()
        .map(|(r, s)| {
            statistic_row(cfg, &law, &kernel, h, s).map_err(|e| Error::Replication { index: r, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;

    let (mean, covariance) = mean_and_covariance(&statistics);
    let theoretical_variance = limiting_variances(cfg, &law, &kernel)?;
    let d = mean.len();
    let r = statistics.len();

    let mut ks = Vec::with_capacity(d);
    let mut ks_pass = Vec::with_capacity(d);
    let mut mean_zero = Vec::with_capacity(d);
    for j in 0..d {
        let column: Vec<f64> = statistics.iter().map(|row| row[j]).collect();
        let sd = theoretical_variance[j].sqrt();
        let result = ks_test(&column, |x| normal_cdf(x / sd))?;
        ks_pass.push(result.p_value > cfg.ks_threshold);
        ks.push(result);
        mean_zero.push(mean[j].abs() <= 4.0 * covariance[j][j].sqrt() / (r as f64).sqrt());
    }
    let mut max_corr = 0.0f64;
    for i in 0..d {
        for j in 0..i {
            let corr = covariance[i][j] / (covariance[i][i] * covariance[j][j]).sqrt();
            max_corr = max_corr.max(corr.abs());
        }
    }
    let checks = PassFlags {
        off_diagonal: max_corr < cfg.covariance_tolerance,
        ks: ks_pass,
        mean_zero,
        max_off_diagonal_correlation: max_corr,
    };
    let pass = checks.off_diagonal && checks.ks.iter().all(|&b| b) && checks.mean_zero.iter().all(|&b| b);
    Ok(CltReport {
        config: cfg.clone(),
        bandwidth: h,
        statistics,
        mean,
        covariance,
        theoretical_variance,
        ks,
        checks,
        pass,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Empirical coverage of the nominal-`level` intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub level: f64,
    pub replications: usize,
    /// Coverage fraction per evaluation coordinate.
    pub coverage: Vec<f64>,
    /// Binomial standard error `√(level (1 - level) / R)`.
    pub standard_error: Vec<f64>,
}

/// Fraction of replications whose interval contains the limit value.
pub fn coverage_check(cfg: &ExperimentConfig, level: f64) -> Result<CoverageReport> {
    cfg.validate()?;
    let samples = simulate_replications(cfg.p, cfg.n, cfg.replications, cfg.master_seed, cfg.entry_dist)?;
    coverage_from_samples(cfg, &samples, level)
}

pub fn coverage_from_samples(cfg: &ExperimentConfig, samples: &[SpectralSample], level: f64) -> Result<CoverageReport> {
    cfg.validate()?;
    let law = cfg.law()?;
    let kernel = gaussian_kernel();
    let h = cfg.bandwidth()?;
    let coords = cfg.coordinates().to_vec();
    let hits: Vec<Vec<bool>> = samples
        .par_iter()
        .enumerate()
        .map(|(r, s)| {
            coords
                .iter()
                .map(|&x| -> Result<bool> {
                    match cfg.statistic {
                        StatisticKind::Cdf => {
                            Ok(confidence_interval_cdf(&law, s, &kernel, h, x, level)?.contains(law.cdf(x)))
                        }
                        StatisticKind::Quantile => {
                            let ci =
                                confidence_interval_quantile(&law, s, &kernel, h, x, level, DensityPlugIn::Model)?;
                            Ok(ci.contains(law.quantile(x)?))
                        }
                        _ => Err(Error::Config("coverage is defined for cdf and quantile statistics".into())),
                    }
                })
                .collect::<Result<Vec<bool>>>()
                .map_err(|e| Error::Replication { index: r, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let r = samples.len() as f64;
    let coverage: Vec<f64> =
        (0..coords.len()).map(|j| hits.iter().filter(|row| row[j]).count() as f64 / r).collect();
    let se = (level * (1.0 - level) / r).sqrt();
    Ok(CoverageReport { level, replications: samples.len(), standard_error: vec![se; coords.len()], coverage })
}

/// Configuration of the Stieltjes-bias rate check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasConfig {
    /// Aspect ratio; `p = round(c n)`.
    pub c: f64,
    /// Smaller sample size; the check also runs at `4n`.
    pub n: usize,
    pub replications: usize,
    /// Evaluation points as `[re, im]` pairs.
    pub z_grid: Vec<[f64; 2]>,
    pub master_seed: u64,
    #[serde(default)]
    pub entry_dist: EntryDistribution,
}

impl BiasConfig {
    /// `points` evenly spaced real parts across the bulk at height `v`.
    pub fn bulk_grid(c: f64, n: usize, replications: usize, points: usize, v: f64, master_seed: u64) -> Result<Self> {
        let law = MpLaw::new(c)?;
        let (a, b) = (law.lower_edge(), law.upper_edge());
        let z_grid = (1..=points)
            .map(|i| [a + (b - a) * i as f64 / (points + 1) as f64, v])
            .collect();
        Ok(Self { c, n, replications, z_grid, master_seed, entry_dist: EntryDistribution::Gaussian })
    }
}

/// Bias of the averaged ESD transform at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasLevel {
    pub p: usize,
    pub n: usize,
    /// `n v |Ê m_n(z) - m_{c_n}(z)|` per grid point.
    pub scaled_bias: Vec<f64>,
    pub max_scaled_bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub config: BiasConfig,
    pub levels: Vec<BiasLevel>,
    /// Larger over smaller of the two maxima.
    pub ratio: f64,
    pub pass: bool,
    /// Set when a single replication makes the average meaningless.
    pub low_confidence: bool,
    pub seconds: f64,
}

impl BiasReport {
    pub fn to_canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.seconds = 0.0;
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }
}

fn bias_level(cfg: &BiasConfig, n: usize, seed: u64) -> Result<BiasLevel> {
    let p = ((cfg.c * n as f64).round() as usize).max(1);
    let law = MpLaw::for_dims(p, n)?;
    let z: Vec<ComplexPoint> = cfg.z_grid.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
    let sums: Vec<Vec<Complex64>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| -> Result<Vec<Complex64>> {
            let s = SpectralSample::simulate(p, n, replication_seed(seed, r as u64), cfg.entry_dist)
                .map_err(|e| Error::Replication { index: r, source: Box::new(e) })?;
            z.iter().map(|&zz| s.esd_stieltjes(zz)).collect()
        })
        .collect::<Result<_>>()?;
    let mut scaled_bias = Vec::with_capacity(z.len());
    for (j, &zz) in z.iter().enumerate() {
        let mean: Complex64 = sums.iter().map(|row| row[j]).sum::<Complex64>() / cfg.replications as f64;
        let bias = (mean - law.stieltjes(zz)?).norm();
        scaled_bias.push(n as f64 * zz.im * bias);
    }
    let max_scaled_bias = scaled_bias.iter().cloned().fold(0.0, f64::max);
    Ok(BiasLevel { p, n, scaled_bias, max_scaled_bias })
}

/// Checks that `n v |E m_n(z) - m(z)|` stays bounded between `n` and `4n`.
pub fn bias_check(cfg: &BiasConfig) -> Result<BiasReport> {
    let start = Instant::now();
    if cfg.replications == 0 || cfg.z_grid.is_empty() {
        return Err(Error::Config("bias check needs replications >= 1 and a non-empty grid".into()));
    }
    MpLaw::new(cfg.c)?;
    let floor = 2.0 / (cfg.n as f64).sqrt();
    if let Some(low) = cfg.z_grid.iter().find(|z| z[1] < floor) {
        return Err(Error::Precondition(format!(
            "grid point {}+{}i lies below the admissible height 2/√n = {floor}",
            low[0], low[1]
        )));
    }
    let small = bias_level(cfg, cfg.n, replication_seed(cfg.master_seed, u64::MAX))?;
    let large = bias_level(cfg, 4 * cfg.n, replication_seed(cfg.master_seed, u64::MAX - 1))?;
    let (lo, hi) = if small.max_scaled_bias < large.max_scaled_bias {
        (small.max_scaled_bias, large.max_scaled_bias)
    } else {
        (large.max_scaled_bias, small.max_scaled_bias)
    };
    let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(BiasReport {
        config: cfg.clone(),
        levels: vec![small, large],
        ratio,
        pass: ratio < 3.0,
        low_confidence: cfg.replications < 2,
        seconds: start.elapsed().as_secs_f64(),
    })
}

//! Marchenko–Pastur law, kernel-smoothed estimators of the spectral
//! distribution of sample covariance matrices, and Monte Carlo verification
//! of their central limit theorems.
//!
//! The modules build on each other bottom-up:
//!
//! - [`mp_law`]: density, distribution function, quantiles and Stieltjes
//!   transforms of the limiting law.
//! - [`kernels`]: smoothing kernels and bandwidth rules.
//! - [`spectral`]: data matrices, sample covariance, eigensolver, ESD.
//! - [`estimators`]: `f_n`, `F_n`, smoothed quantiles, contour check.
//! - [`clt`]: standardized statistics, variance constants, intervals.
//! - [`montecarlo`]: seeded replication harness and KS tests.

pub mod clt;
pub mod error;
pub mod estimators;
pub mod io;
pub mod kernels;
pub mod montecarlo;
pub mod mp_law;
pub mod quadrature;
pub mod spectral;

pub use clt::{
    cdf_statistic, confidence_interval_cdf, confidence_interval_quantile, density_statistic,
    density_statistic_centered, mean_correction, quantile_statistic, quantile_variance, sigma_squared,
    DensityPlugIn, Interval, StatisticKind, VarianceConstant,
};
pub use error::{Error, Result};
pub use estimators::{
    contour_check, smoothed_cdf, smoothed_density, smoothed_mp_reference, smoothed_quantile, ContourReport,
    ContourSpec, SmoothedEstimate,
};
pub use kernels::{
    bandwidth_for_cdf, bandwidth_for_density, check_kernel_conditions, gaussian_kernel, BandwidthKind,
    BandwidthRule, ConditionReport, KernelProfile,
};
pub use montecarlo::{
    bias_check, coverage_check, ks_test, run_experiment, BiasConfig, BiasReport, CltReport, CoverageReport,
    ExperimentConfig,
};
pub use mp_law::{ComplexPoint, MpLaw};
pub use spectral::{
    sample_covariance, sample_data_matrix, symmetric_eigenvalues, DataMatrix, EntryDistribution, SpectralSample,
    SymmetricMatrix,
};

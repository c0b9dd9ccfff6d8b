use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use mpspec::estimators::{contour_check, smoothed_quantile, ContourSpec, SmoothedEstimate};
use mpspec::io::{fmt_f64, linspace, write_csv_rows};
use mpspec::montecarlo::{bias_check, run_experiment, BiasConfig, ExperimentConfig};
use mpspec::{
    gaussian_kernel, sigma_squared, BandwidthKind, BandwidthRule, EntryDistribution, Error, MpLaw, SpectralSample,
};
use serde::Serialize;

use crate::{
    BiasArgs, ContourArgs, Dist, EstimateArgs, MpArgs, OutputArgs, QuantileArgs, Regime, Sigma2Args, SourceArgs,
    VerifyArgs,
};

pub enum Outcome {
    Pass,
    Fail,
}

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn failure(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } | Error::Replication { .. } | Error::Degenerate(_) => {
                CliError::failure(e.to_string())
            }
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

type CliResult = Result<Outcome, CliError>;

pub fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("MPSPEC_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("MPSPEC_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::usage(format!("cannot write {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut out = open_output(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::usage(e.to_string()))?;
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}

fn sidecar_path(output: &OutputArgs) -> Option<PathBuf> {
    output.sidecar.clone().or_else(|| output.out.as_ref().map(|p| p.with_extension("json")))
}

fn write_sidecar<T: Serialize>(output: &OutputArgs, value: &T) -> Result<(), CliError> {
    match sidecar_path(output) {
        Some(path) => write_json(Some(&path), value),
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|e| CliError::usage(e.to_string()))?;
            eprintln!("{text}");
            Ok(())
        }
    }
}

fn entry_distribution(d: Dist) -> EntryDistribution {
    match d {
        Dist::Gaussian => EntryDistribution::Gaussian,
        Dist::ThreePoint => EntryDistribution::ThreePoint,
    }
}

fn bandwidth_kind(r: Regime) -> BandwidthKind {
    match r {
        Regime::Cdf => BandwidthKind::Cdf,
        Regime::Density => BandwidthKind::Density,
    }
}

fn load_spectrum(src: &SourceArgs) -> Result<SpectralSample, CliError> {
    let sample = if let Some(path) = &src.input {
        let n = src.n.ok_or_else(|| CliError::usage("--in needs --n for the sample size"))?;
        let file = File::open(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        SpectralSample::read_csv(BufReader::new(file), n)?
    } else if let Some(overrides) = &src.simulate {
        let (mut p, mut n, mut seed) = (src.p, src.n, src.seed);
        for kv in overrides {
            let (key, value) =
                kv.split_once('=').ok_or_else(|| CliError::usage(format!("expected KEY=VALUE, got `{kv}`")))?;
            let bad = || CliError::usage(format!("invalid value in `{kv}`"));
            match key {
                "p" => p = Some(value.parse().map_err(|_| bad())?),
                "n" => n = Some(value.parse().map_err(|_| bad())?),
                "seed" => seed = value.parse().map_err(|_| bad())?,
                _ => return Err(CliError::usage(format!("unknown simulate key `{key}`"))),
            }
        }
        let (p, n) = match (p, n) {
            (Some(p), Some(n)) => (p, n),
            _ => return Err(CliError::usage("--simulate needs p and n")),
        };
        info!("simulating p={p}, n={n}, seed={seed}");
        SpectralSample::simulate(p, n, seed, entry_distribution(src.dist))?
    } else {
        return Err(CliError::usage("give either --in or --simulate"));
    };
    if let Some(path) = &src.export {
        let mut out = open_output(Some(path))?;
        sample.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok(sample)
}

fn resolve_bandwidth(h: Option<f64>, regime: Regime, n: usize) -> Result<f64, CliError> {
    match h {
        Some(h) if h > 0.0 && h.is_finite() => Ok(h),
        Some(h) => Err(CliError::usage(format!("--h must be positive, got {h}"))),
        None => Ok(BandwidthRule::for_kind(bandwidth_kind(regime)).bandwidth(n)?),
    }
}

fn check_grid(points: usize, from: f64, to: f64) -> Result<(), CliError> {
    if points == 0 {
        return Err(CliError::usage("--points must be at least 1"));
    }
    if !(from.is_finite() && to.is_finite()) || (points > 1 && from >= to) {
        return Err(CliError::usage(format!("invalid grid [{from}, {to}]")));
    }
    Ok(())
}

#[derive(Serialize)]
struct MpSidecar {
    c: f64,
    a: f64,
    b: f64,
    point_mass: f64,
    points: usize,
}

pub fn mp(args: MpArgs) -> CliResult {
    let law = MpLaw::new(args.c)?;
    let from = args.from.unwrap_or(law.lower_edge());
    let to = args.to.unwrap_or(law.upper_edge());
    check_grid(args.points, from, to)?;
    let out = open_output(args.output.out.as_deref())?;
    let rows = linspace(from, to, args.points).into_iter().map(|x| vec![x, law.density(x), law.cdf(x)]);
    write_csv_rows(out, &["x", "density", "cdf"], rows)?;
    write_sidecar(
        &args.output,
        &MpSidecar {
            c: law.c(),
            a: law.lower_edge(),
            b: law.upper_edge(),
            point_mass: law.point_mass_at_zero(),
            points: args.points,
        },
    )?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct EstimateSidecar {
    h: f64,
    p: usize,
    n: usize,
    c_n: f64,
    regime: &'static str,
    bandwidth_from_rule: bool,
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Cdf => "cdf",
        Regime::Density => "density",
    }
}

pub fn estimate(args: EstimateArgs) -> CliResult {
    let sample = load_spectrum(&args.source)?;
    let h = resolve_bandwidth(args.h, args.regime, sample.n())?;
    let from = args.from.unwrap_or(sample.min() - 3.0 * h);
    let to = args.to.unwrap_or(sample.max() + 3.0 * h);
    check_grid(args.points, from, to)?;
    let grid = linspace(from, to, args.points);
    let estimate = SmoothedEstimate::evaluate(&sample, &gaussian_kernel(), h, &grid)?;
    let out = open_output(args.output.out.as_deref())?;
    estimate.write_csv(out)?;
    write_sidecar(
        &args.output,
        &EstimateSidecar {
            h,
            p: sample.p(),
            n: sample.n(),
            c_n: sample.aspect_ratio(),
            regime: regime_name(args.regime),
            bandwidth_from_rule: args.h.is_none(),
        },
    )?;
    Ok(Outcome::Pass)
}

pub fn quantile(args: QuantileArgs) -> CliResult {
    let sample = load_spectrum(&args.source)?;
    let h = resolve_bandwidth(args.h, args.regime, sample.n())?;
    let k = gaussian_kernel();
    let law = MpLaw::for_dims(sample.p(), sample.n())?;
    let mut rows = Vec::with_capacity(args.alpha.len());
    for &alpha in &args.alpha {
        rows.push(vec![alpha, smoothed_quantile(&sample, &k, h, alpha)?, law.quantile(alpha)?]);
    }
    let out = open_output(args.output.out.as_deref())?;
    write_csv_rows(out, &["alpha", "x_n", "x_mp"], rows)?;
    write_sidecar(
        &args.output,
        &EstimateSidecar {
            h,
            p: sample.p(),
            n: sample.n(),
            c_n: sample.aspect_ratio(),
            regime: regime_name(args.regime),
            bandwidth_from_rule: args.h.is_none(),
        },
    )?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct Sigma2Output {
    kernel: String,
    sigma2: f64,
    error_estimate: f64,
}

pub fn sigma2(args: Sigma2Args) -> CliResult {
    let kernel = match args.kernel.as_str() {
        "gaussian" => gaussian_kernel(),
        other => return Err(CliError::usage(format!("unknown kernel `{other}`; available: gaussian"))),
    };
    let v = sigma_squared(&kernel)?;
    write_json(
        args.out.as_deref(),
        &Sigma2Output { kernel: args.kernel, sigma2: v.value, error_estimate: v.quadrature_error_estimate },
    )?;
    Ok(Outcome::Pass)
}

pub fn verify(args: VerifyArgs) -> CliResult {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid config: {e}")))?;
    if let Some(r) = args.reps {
        cfg.replications = r;
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    let report = run_experiment(&cfg)?;
    let mut out = open_output(args.out.as_deref())?;
    writeln!(out, "{}", report.to_json())?;
    out.flush()?;
    info!("verification finished in {:.2} s", report.seconds);
    Ok(if report.pass { Outcome::Pass } else { Outcome::Fail })
}

#[derive(Serialize)]
struct ContourPoint {
    x: f64,
    direct: f64,
    contour: f64,
    contour_imag: f64,
    relative_residual: f64,
}

#[derive(Serialize)]
struct ContourOutput {
    p: usize,
    n: usize,
    h: f64,
    contour: ContourSpec,
    tolerance: f64,
    points: Vec<ContourPoint>,
    max_relative_residual: f64,
    pass: bool,
}

pub fn contour(args: ContourArgs) -> CliResult {
    let sample = load_spectrum(&args.source)?;
    let law = MpLaw::for_dims(sample.p(), sample.n())?;
    let h = resolve_bandwidth(args.h, args.regime, sample.n())?;
    let defaults = ContourSpec::default_for(&law);
    let spec = ContourSpec {
        a_l: args.a_l.unwrap_or(defaults.a_l),
        a_r: args.a_r.unwrap_or(defaults.a_r),
        v0: args.v0.unwrap_or(defaults.v0),
        points_per_side: args.per_side.unwrap_or(defaults.points_per_side),
    };
    let k = gaussian_kernel();
    let mut points = Vec::with_capacity(args.at.len());
    for &x in &args.at {
        let r = contour_check(&sample, &law, &k, h, x, &spec).map_err(|e| match e {
            Error::Precondition(m) => CliError::failure(m),
            other => other.into(),
        })?;
        points.push(ContourPoint {
            x,
            direct: r.direct,
            contour: r.contour,
            contour_imag: r.contour_imag,
            relative_residual: r.relative_residual,
        });
    }
    let max_relative_residual = points.iter().map(|p| p.relative_residual).fold(0.0, f64::max);
    let pass = max_relative_residual <= args.tolerance;
    write_json(
        args.out.as_deref(),
        &ContourOutput {
            p: sample.p(),
            n: sample.n(),
            h,
            contour: spec,
            tolerance: args.tolerance,
            points,
            max_relative_residual,
            pass,
        },
    )?;
    if !pass {
        eprintln!("relative residual {} exceeds {}", fmt_f64(max_relative_residual), args.tolerance);
    }
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

pub fn bias(args: BiasArgs) -> CliResult {
    let cfg = BiasConfig::bulk_grid(args.c, args.n, args.reps, args.points, args.v, args.seed)?;
    let report = bias_check(&cfg)?;
    write_json(args.out.as_deref(), &report)?;
    Ok(if report.pass { Outcome::Pass } else { Outcome::Fail })
}

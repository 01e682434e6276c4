//! Experiment configurations and their parallel drivers.
//!
//! Replication `k` always draws from stream `k` of the configured seed, so
//! results do not depend on the thread count. Samples are sorted before
//! they are written.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use riskbound_core::asymptotics::{anderson_darling_normal, AD_MIN_SAMPLES, mean_sd, CltExperiment};
use riskbound_core::losses::{
    normal_inv_cdf, normal_pdf, sample_ccr_instance, sample_gaussian_linear_instance, CcrParams,
};
use riskbound_core::rng::substream;
use riskbound_core::stability::{
    line_metric, perturbation_sweep, PerturbationReport, Scheme, SweepConfig, ValueSpec,
};
use riskbound_core::{discretize_spectrum, solve_mes, Instance};

use crate::error::{AppError, AppResult};
use crate::formats::{read_json, write_json, InstanceJson};
use crate::gev::{fit_gev, GevFit};
use crate::sigma::SigmaJson;
use crate::svg::{histogram_svg, Overlay};

/// Instance given inline or as a path relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    Path(PathBuf),
    Inline(InstanceJson),
}

impl InstanceSource {
    pub fn load(&self, base: &Path) -> AppResult<InstanceJson> {
        match self {
            Self::Inline(j) => Ok(j.clone()),
            Self::Path(p) => read_json(&base.join(p)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcrParamsJson {
    pub pd1: f64,
    pub pd2: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub r: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl From<CcrParamsJson> for CcrParams {
    fn from(p: CcrParamsJson) -> Self {
        Self {
            pd1: p.pd1,
            pd2: p.pd2,
            rho1: p.rho1,
            rho2: p.rho2,
            r: p.r,
            mu1: p.mu1,
            mu2: p.mu2,
            sigma1: p.sigma1,
            sigma2: p.sigma2,
        }
    }
}

/// What one replication computes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CltModel {
    /// Empirical marginals resampled from a fixed finite instance;
    /// deviations `sqrt(n_x) (V_n - V)`.
    Resample {
        instance: InstanceSource,
        alpha: f64,
        n_x: usize,
        n_y: usize,
    },
    /// Fresh standard normal samples, `L = x + y`; deviations from the
    /// exact value `2 ES_alpha(N(0, 1))`.
    GaussianLinear { alpha: f64, n_x: usize, n_y: usize },
    /// Fresh credit-exposure samples; raw optimal values.
    Ccr {
        alpha: f64,
        n: usize,
        #[serde(default)]
        params: Option<CcrParamsJson>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltConfig {
    #[serde(flatten)]
    pub model: CltModel,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub bins: Option<usize>,
    /// Fit and draw a GEV density as well as the normal one.
    #[serde(default)]
    pub gev: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltSummary {
    pub model: String,
    /// `deviation` or `value`.
    pub statistic: String,
    pub seed: u64,
    pub replications: usize,
    /// Exact value the deviations are taken from, when known.
    pub center: Option<f64>,
    pub mean: f64,
    pub sd: f64,
    /// Absent below the sample size the test needs.
    pub normality: Option<NormalityTest>,
    pub gev: Option<GevFit>,
}

/// Anderson–Darling test against a normal with estimated parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityTest {
    pub statistic: f64,
    pub p_value: f64,
    pub reject_at_5pct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltOutcome {
    /// Sorted.
    pub samples: Vec<f64>,
    pub summary: CltSummary,
}

/// `2 ES_alpha` of a standard normal: `2 phi(Phi^{-1}(alpha)) / (1 - alpha)`.
pub fn gaussian_linear_value(alpha: f64) -> AppResult<f64> {
    Ok(2.0 * normal_pdf(normal_inv_cdf(alpha)?) / (1.0 - alpha))
}

/// Runs `f(k)` for `k = 0..count` on the current rayon pool, in index order.
fn replicate<F>(count: usize, f: F) -> AppResult<Vec<f64>>
where
    F: Fn(usize) -> AppResult<f64> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Runs `f` inside a pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> AppResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| AppError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn run_clt(config: &CltConfig, base: &Path) -> AppResult<CltOutcome> {
    if config.replications == 0 {
        return Err(AppError::Config("replications must be positive".into()));
    }
    let seed = config.seed;
    let r = config.replications;
    let (name, statistic, center, mut samples) = match &config.model {
        CltModel::Resample {
            instance,
            alpha,
            n_x,
            n_y,
        } => {
            let inst = instance.load(base)?.to_instance()?;
            let exp = CltExperiment {
                mu: inst.mu,
                nu: inst.nu,
                loss: inst.loss,
                alpha: *alpha,
                n_x: *n_x,
                n_y: *n_y,
                replications: r,
                seed,
            };
            exp.validate()?;
            let v = exp.true_value()?;
            info!("resampling {r} replications around V = {v}");
            let dev = replicate(r, |k| Ok(exp.replicate(k, v)?))?;
            ("resample", "deviation", Some(v), dev)
        }
        CltModel::GaussianLinear { alpha, n_x, n_y } => {
            let v = gaussian_linear_value(*alpha)?;
            let scale = (*n_x as f64).sqrt();
            info!("gaussian-linear: {r} replications of {n_x} x {n_y}");
            let dev = replicate(r, |k| {
                let s = sample_gaussian_linear_instance(*n_x, *n_y, &mut substream(seed, k as u64))?;
                let i = &s.instance;
                let vn = solve_mes(&i.mu, &i.nu, &i.loss, *alpha)?.value;
                Ok(scale * (vn - v))
            })?;
            ("gaussian-linear", "deviation", Some(v), dev)
        }
        CltModel::Ccr { alpha, n, params } => {
            let p: CcrParams = params.map(Into::into).unwrap_or_else(CcrParams::reference);
            p.validate()?;
            info!("ccr: {r} replications of {n} x {n}");
            let values = replicate(r, |k| {
                let s = sample_ccr_instance(&p, *n, &mut substream(seed, k as u64))?;
                let i = &s.instance;
                Ok(solve_mes(&i.mu, &i.nu, &i.loss, *alpha)?.value)
            })?;
            ("ccr", "value", None, values)
        }
    };
    samples.sort_by(f64::total_cmp);
    let (mean, sd) = mean_sd(&samples);
    let normality = if samples.len() >= AD_MIN_SAMPLES {
        let ad = anderson_darling_normal(&samples)?;
        Some(NormalityTest {
            statistic: ad.statistic,
            p_value: ad.p_value,
            reject_at_5pct: ad.reject_at_5pct,
        })
    } else {
        warn!("{} samples: skipping the normality test", samples.len());
        None
    };
    let gev = if config.gev { Some(fit_gev(&samples)?) } else { None };
    Ok(CltOutcome {
        summary: CltSummary {
            model: name.into(),
            statistic: statistic.into(),
            seed,
            replications: r,
            center,
            mean,
            sd,
            normality,
            gev,
        },
        samples,
    })
}

fn create_dir(dir: &Path) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

/// Writes `samples.csv`, `summary.json` and `histogram.svg` into `dir`.
pub fn write_clt_outputs(outcome: &CltOutcome, bins: Option<usize>, dir: &Path) -> AppResult<()> {
    create_dir(dir)?;
    let csv_path = dir.join("samples.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record([outcome.summary.statistic.as_str()])?;
    for v in &outcome.samples {
        w.write_record([format!("{v:.12e}")])?;
    }
    w.flush().map_err(|e| AppError::io(&csv_path, e))?;
    write_json(&dir.join("summary.json"), &outcome.summary)?;

    let s = &outcome.summary;
    let (mean, sd) = (s.mean, s.sd);
    let mut overlays = Vec::new();
    if sd > 0.0 {
        overlays.push(Overlay {
            label: format!("normal({mean:.3}, {sd:.3})"),
            color: "#c0392b",
            density: Box::new(move |x| normal_pdf((x - mean) / sd) / sd),
        });
    }
    if let Some(g) = s.gev {
        overlays.push(Overlay {
            label: format!("GEV({:.3}, {:.3}, {:.3})", g.location, g.scale, g.shape),
            color: "#27ae60",
            density: Box::new(move |x| g.pdf(x)),
        });
    }
    let bins = bins.unwrap_or_else(|| (outcome.samples.len() as f64).sqrt().ceil() as usize);
    let title = format!("{} {} (R = {}, seed {})", s.model, s.statistic, s.replications, s.seed);
    let svg = histogram_svg(&outcome.samples, bins, &title, &overlays);
    let svg_path = dir.join("histogram.svg");
    fs::write(&svg_path, svg).map_err(|e| AppError::io(&svg_path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeJson {
    Mix,
    Resample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub instance: InstanceSource,
    /// Expected shortfall level; otherwise `sigma` (or the instance's) is used.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub sigma: Option<SigmaJson>,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeJson,
    #[serde(default = "default_order")]
    pub r: f64,
    #[serde(default)]
    pub seed: u64,
    /// Support points on the line; discrete metric when absent.
    #[serde(default)]
    pub x_points: Option<Vec<f64>>,
    #[serde(default)]
    pub y_points: Option<Vec<f64>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_levels() -> usize {
    64
}
fn default_steps() -> usize {
    11
}
fn default_scheme() -> SchemeJson {
    SchemeJson::Mix
}
fn default_order() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub base_value: f64,
    pub lipschitz: f64,
    pub slope: Option<f64>,
    pub bounds_hold: bool,
    pub converging: bool,
}

pub fn value_spec(
    alpha: Option<f64>,
    sigma: Option<&SigmaJson>,
    levels: usize,
) -> AppResult<ValueSpec> {
    match (alpha, sigma) {
        (Some(a), _) => Ok(ValueSpec::ExpectedShortfall(a)),
        (None, Some(SigmaJson::Es { alpha })) => Ok(ValueSpec::ExpectedShortfall(*alpha)),
        (None, Some(s)) => Ok(ValueSpec::Spectral(discretize_spectrum(&s.to_function()?, levels)?)),
        (None, None) => Err(AppError::Config("give alpha or sigma".into())),
    }
}

pub fn run_stability(config: &StabilityConfig, base: &Path) -> AppResult<PerturbationReport> {
    let ij = config.instance.load(base)?;
    let inst: Instance = ij.to_instance()?;
    let sigma = config.sigma.as_ref().or(ij.sigma.as_ref());
    let spec = value_spec(config.alpha, sigma, config.levels)?;
    let metric = |pts: &Option<Vec<f64>>, n: usize| -> AppResult<_> {
        match pts {
            None => Ok(None),
            Some(p) if p.len() == n => Ok(Some(line_metric(p, p)?)),
            Some(p) => Err(AppError::Config(format!("{} points for {n} atoms", p.len()))),
        }
    };
    let sweep = SweepConfig {
        scheme: match config.scheme {
            SchemeJson::Mix => Scheme::MixUniform,
            SchemeJson::Resample => Scheme::Resample { seed: config.seed },
        },
        steps: config.steps,
        r: config.r,
        dx: metric(&config.x_points, inst.mu.len())?,
        dy: metric(&config.y_points, inst.nu.len())?,
    };
    Ok(perturbation_sweep(&inst.mu, &inst.nu, &inst.loss, &spec, &sweep)?)
}

/// Writes `stability.csv` and `summary.json` into `dir`.
pub fn write_stability_outputs(report: &PerturbationReport, dir: &Path) -> AppResult<StabilitySummary> {
    create_dir(dir)?;
    let csv_path = dir.join("stability.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["epsilon", "w_r_mu", "w_r_nu", "value", "delta_value", "bound"])?;
    for r in &report.rows {
        w.write_record(
            [r.epsilon, r.w_r_mu, r.w_r_nu, r.value, r.delta_value, r.bound].map(|v| format!("{v:.12e}")),
        )?;
    }
    w.flush().map_err(|e| AppError::io(&csv_path, e))?;
    let summary = StabilitySummary {
        base_value: report.base_value,
        lipschitz: report.lipschitz,
        slope: report.slope,
        bounds_hold: report.bounds_hold(),
        converging: report.converging(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

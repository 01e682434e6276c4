//! Maximum-likelihood fit of the generalized extreme value distribution.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};

use riskbound_core::asymptotics::mean_sd;

use crate::error::{AppError, AppResult};

/// `|xi|` below this is treated as the Gumbel limit.
const GUMBEL_TOL: f64 = 1e-8;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_ITERS: u64 = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevFit {
    pub location: f64,
    pub scale: f64,
    pub shape: f64,
    pub log_likelihood: f64,
}

impl GevFit {
    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        if self.shape.abs() < GUMBEL_TOL {
            return (-z - (-z).exp()).exp() / self.scale;
        }
        let t = 1.0 + self.shape * z;
        if t <= 0.0 {
            return 0.0;
        }
        let s = t.powf(-1.0 / self.shape);
        s.powf(1.0 + self.shape) * (-s).exp() / self.scale
    }
}

struct NegLogLik<'a> {
    x: &'a [f64],
}

/// `(location, ln scale, shape)` -> negative log likelihood, `+inf` off the
/// support.
fn neg_log_lik(x: &[f64], p: &[f64]) -> f64 {
    let (mu, sigma, xi) = (p[0], p[1].exp(), p[2]);
    let n = x.len() as f64;
    let mut total = n * sigma.ln();
    if xi.abs() < GUMBEL_TOL {
        for &v in x {
            let z = (v - mu) / sigma;
            total += z + (-z).exp();
        }
        return total;
    }
    for &v in x {
        let t = 1.0 + xi * (v - mu) / sigma;
        if t <= 0.0 {
            return f64::INFINITY;
        }
        total += (1.0 + 1.0 / xi) * t.ln() + t.powf(-1.0 / xi);
    }
    if total.is_finite() {
        total
    } else {
        f64::INFINITY
    }
}

impl CostFunction for NegLogLik<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, argmin::core::Error> {
        Ok(neg_log_lik(self.x, p))
    }
}

/// Nelder–Mead from the Gumbel moment fit.
pub fn fit_gev(samples: &[f64]) -> AppResult<GevFit> {
    if samples.len() < 3 {
        return Err(AppError::Fit(format!("{} samples", samples.len())));
    }
    let (mean, sd) = mean_sd(samples);
    if sd.is_nan() || sd <= 0.0 {
        return Err(AppError::Fit("sample has no spread".into()));
    }
    let scale0 = sd * 6f64.sqrt() / std::f64::consts::PI;
    let loc0 = mean - EULER_GAMMA * scale0;
    let start = vec![loc0, scale0.ln(), 0.1];
    let simplex = vec![
        start.clone(),
        vec![loc0 + 0.5 * scale0, scale0.ln(), 0.1],
        vec![loc0, scale0.ln() + 0.3, 0.1],
        vec![loc0, scale0.ln(), -0.1],
    ];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-10)
        .map_err(|e| AppError::Fit(e.to_string()))?;
    let res = Executor::new(NegLogLik { x: samples }, solver)
        .configure(|s| s.max_iters(MAX_ITERS))
        .run()
        .map_err(|e| AppError::Fit(e.to_string()))?;
    let best = res
        .state()
        .best_param
        .clone()
        .ok_or_else(|| AppError::Fit("no parameter found".into()))?;
    let nll = neg_log_lik(samples, &best);
    if !nll.is_finite() {
        return Err(AppError::Fit("likelihood is zero at the optimum".into()));
    }
    Ok(GevFit {
        location: best[0],
        scale: best[1].exp(),
        shape: best[2],
        log_likelihood: -nll,
    })
}

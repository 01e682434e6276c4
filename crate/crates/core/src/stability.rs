//! Sensitivity of the worst-case value to the marginals.
//!
//! Distances between laws on a finite support are Wasserstein distances for
//! a caller-supplied ground metric, computed as transport problems.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::bounds::{solve_mes, solve_msp};
use crate::domain::{Coupling, LossMatrix, ProbabilityVector};
use crate::lp::{solve_transport, Sense};
use crate::math;
use crate::riskmeasures::{spectral_risk, DiscreteLaw};
use crate::rng::substream;
use crate::spectrum::SpectralGrid;
use crate::{Error, Result};

/// `|dV|` below this is treated as zero in slope fits.
pub const NEGLIGIBLE_CHANGE: f64 = 1e-12;
/// Transport costs below this (relative to the largest ground cost) are
/// round-off.
pub const ROUNDOFF_FLOOR: f64 = 1e-14;
/// Slack allowed on every bound check.
pub const BOUND_TOL: f64 = 1e-7;

/// Which worst-case value is being perturbed.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueSpec {
    ExpectedShortfall(f64),
    Spectral(SpectralGrid),
}

impl ValueSpec {
    pub fn solve(
        &self,
        mu: &ProbabilityVector,
        nu: &ProbabilityVector,
        loss: &LossMatrix,
    ) -> Result<f64> {
        match self {
            Self::ExpectedShortfall(alpha) => Ok(solve_mes(mu, nu, loss, *alpha)?.value),
            Self::Spectral(grid) => Ok(solve_msp(mu, nu, loss, grid)?.value),
        }
    }

    /// `sup sigma` of the represented spectrum.
    pub fn sigma_sup(&self) -> f64 {
        match self {
            Self::ExpectedShortfall(alpha) => 1.0 / (1.0 - alpha),
            Self::Spectral(grid) => grid.sigma_norm(f64::INFINITY),
        }
    }
}

/// `d(i, j) = 1` for `i != j`.
pub fn discrete_metric(n: usize) -> LossMatrix {
    LossMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }).expect("n >= 1")
}

/// `|a_i - b_j|` for points on the line.
pub fn line_metric(a: &[f64], b: &[f64]) -> Result<LossMatrix> {
    LossMatrix::from_fn(a.len(), b.len(), |i, j| (a[i] - b[j]).abs())
}

/// Sum metric on the cells `(i, j)` of a product of two supports, indexed
/// row-major.
pub fn product_metric(dx: &LossMatrix, dy: &LossMatrix) -> Result<LossMatrix> {
    let (n, m) = (dx.rows(), dy.rows());
    LossMatrix::from_fn(n * m, n * m, |a, b| {
        dx.get(a / m, b / m) + dy.get(a % m, b % m)
    })
}

/// `(min over couplings of sum ground^r m)^{1/r}`.
pub fn wasserstein_discrete(
    p: &ProbabilityVector,
    q: &ProbabilityVector,
    ground: &LossMatrix,
    r: f64,
) -> Result<f64> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::InvalidParams(format!("Wasserstein order {r} must be >= 1")));
    }
    if ground.values().iter().any(|&d| d < 0.0) {
        return Err(Error::InvalidParams("ground distances must be nonnegative".to_string()));
    }
    let cost = ground.map(|d| math::powf(d, r))?;
    let ot = solve_transport(p, q, &cost, Sense::Minimize)?;
    // The root amplifies round-off in a vanishing transport cost.
    let floor = ROUNDOFF_FLOOR * cost.max().max(1.0);
    let value = if ot.value <= floor { 0.0 } else { ot.value };
    Ok(math::powf(value, 1.0 / r))
}

/// Largest `|L(c) - L(c')| / d(c, c')^q` over pairs of cells, where the
/// ground metric is the sum of the two marginal metrics.
pub fn estimate_holder_constant(
    loss: &LossMatrix,
    dx: &LossMatrix,
    dy: &LossMatrix,
    q: f64,
) -> Result<f64> {
    let cells = product_metric(dx, dy)?;
    let v = loss.values();
    let mut c = 0.0f64;
    for a in 0..v.len() {
        for b in 0..a {
            let d = cells.get(a, b);
            if d > 0.0 {
                c = c.max((v[a] - v[b]).abs() / math::powf(d, q));
            }
        }
    }
    Ok(c)
}

/// Lipschitz constant of the loss for the sum metric: the larger of its
/// Lipschitz constants in each coordinate.
pub fn lipschitz_constant(loss: &LossMatrix, dx: &LossMatrix, dy: &LossMatrix) -> f64 {
    let (n, m) = (loss.rows(), loss.cols());
    let mut c = 0.0f64;
    for j in 0..m {
        for i in 0..n {
            for k in 0..i {
                let d = dx.get(i, k);
                if d > 0.0 {
                    c = c.max((loss.get(i, j) - loss.get(k, j)).abs() / d);
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..m {
            for k in 0..j {
                let d = dy.get(j, k);
                if d > 0.0 {
                    c = c.max((loss.get(i, j) - loss.get(i, k)).abs() / d);
                }
            }
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// `(1 - eps) law + eps uniform` for `eps = 1, 1/2, ..., 2^{1 - steps}`.
    MixUniform,
    /// Empirical laws of `n` draws, `n = 4, 16, 64, ...` (`steps` sizes),
    /// reported with `eps = 1 / sqrt(n)`.
    Resample { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationRow {
    pub epsilon: f64,
    pub w_r_mu: f64,
    pub w_r_nu: f64,
    pub value: f64,
    pub delta_value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub base_value: f64,
    pub rows: Vec<PerturbationRow>,
    /// Lipschitz constant of the loss used in the bound.
    pub lipschitz: f64,
    /// Least-squares slope of `log |dV|` against `log eps`.
    pub slope: Option<f64>,
}

impl PerturbationReport {
    /// Every row respects its bound.
    pub fn bounds_hold(&self) -> bool {
        self.rows.iter().all(|r| r.delta_value <= r.bound + BOUND_TOL)
    }

    /// `|dV|` shrinks with `eps` (positive slope), or never moved at all.
    pub fn converging(&self) -> bool {
        self.slope.is_none_or(|s| s > 0.0)
    }
}

/// Sweep settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub scheme: Scheme,
    pub steps: usize,
    /// Wasserstein order used in the report.
    pub r: f64,
    /// Ground metrics on the two supports; discrete metrics when `None`.
    pub dx: Option<LossMatrix>,
    pub dy: Option<LossMatrix>,
}

impl SweepConfig {
    pub fn mixing(steps: usize) -> Self {
        Self {
            scheme: Scheme::MixUniform,
            steps,
            r: 1.0,
            dx: None,
            dy: None,
        }
    }
}

/// Perturbed marginals for step `k` of the scheme, with their `eps`.
pub fn perturbed_marginals(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    scheme: Scheme,
    k: usize,
) -> Result<(f64, ProbabilityVector, ProbabilityVector)> {
    match scheme {
        Scheme::MixUniform => {
            let eps = math::powf(0.5, k as f64);
            let um = ProbabilityVector::uniform(mu.len())?;
            let un = ProbabilityVector::uniform(nu.len())?;
            Ok((eps, mu.mix(&um, eps)?, nu.mix(&un, eps)?))
        }
        Scheme::Resample { seed } => {
            let n = 4usize.pow(k as u32 + 1);
            let mut rng = substream(seed, k as u64);
            let a = crate::asymptotics::sample_empirical(mu, n, &mut rng)?;
            let b = crate::asymptotics::sample_empirical(nu, n, &mut rng)?;
            Ok((1.0 / math::sqrt(n as f64), a, b))
        }
    }
}

/// Records `|V(perturbed) - V|` with Wasserstein distances and the bound
/// `C_L * sup sigma * (W_r(mu) + W_r(nu))`, which holds because `W_1 <= W_r`.
pub fn perturbation_sweep(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    spec: &ValueSpec,
    config: &SweepConfig,
) -> Result<PerturbationReport> {
    loss.check_marginals(mu, nu)?;
    let dx = config.dx.clone().unwrap_or_else(|| discrete_metric(mu.len()));
    let dy = config.dy.clone().unwrap_or_else(|| discrete_metric(nu.len()));
    if dx.rows() != mu.len() || dx.cols() != mu.len() || dy.rows() != nu.len() || dy.cols() != nu.len() {
        return Err(Error::DimensionMismatch("ground metrics do not match the supports".to_string()));
    }
    let base = spec.solve(mu, nu, loss)?;
    let lipschitz = lipschitz_constant(loss, &dx, &dy);
    let sup = spec.sigma_sup();

    let mut rows = alloc::vec![PerturbationRow {
        epsilon: 0.0,
        w_r_mu: 0.0,
        w_r_nu: 0.0,
        value: base,
        delta_value: 0.0,
        bound: 0.0,
    }];
    for k in 0..config.steps {
        let (eps, m2, n2) = perturbed_marginals(mu, nu, config.scheme, k)?;
        let value = spec.solve(&m2, &n2, loss)?;
        let w_r_mu = wasserstein_discrete(mu, &m2, &dx, config.r)?;
        let w_r_nu = wasserstein_discrete(nu, &n2, &dy, config.r)?;
        rows.push(PerturbationRow {
            epsilon: eps,
            w_r_mu,
            w_r_nu,
            value,
            delta_value: (value - base).abs(),
            bound: lipschitz * sup * (w_r_mu + w_r_nu),
        });
    }
    let slope = log_log_slope(&rows);
    Ok(PerturbationReport {
        base_value: base,
        rows,
        lipschitz,
        slope,
    })
}

/// Least-squares slope of `log |dV|` on `log eps` over rows with `eps > 0`
/// and a non-negligible change.
pub fn log_log_slope(rows: &[PerturbationRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.epsilon > 0.0 && r.delta_value > NEGLIGIBLE_CHANGE)
        .map(|r| (math::ln(r.epsilon), math::ln(r.delta_value)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Compares `|R_{pi1}(L) - R_{pi2}(L)|` with
/// `C_q * W_r(pi1, pi2; d^q) * ||sigma||_{r'}`, `r' = r / (r - 1)`.
///
/// `cells` is the ground metric on the cells of the product support
/// (row-major) for which `L` is `(q, C_q)`-Hölder. The Wasserstein distance
/// is taken for the metric `d^q`, and the conjugate exponent `r'` is at
/// least `r / (r - q)` for `q <= 1`.
#[allow(clippy::too_many_arguments)]
pub fn holder_sensitivity_check(
    loss: &LossMatrix,
    pi1: &Coupling,
    pi2: &Coupling,
    grid: &SpectralGrid,
    c_q: f64,
    q: f64,
    r: f64,
    cells: &LossMatrix,
) -> Result<HolderCheck> {
    let bad = |m: alloc::string::String| Err(Error::InvalidHolderData(m));
    if !(q > 0.0 && q <= 1.0) {
        return bad(format!("Hölder exponent {q} outside (0, 1]"));
    }
    if !(r >= 1.0) || !r.is_finite() {
        return bad(format!("Wasserstein order {r} must be >= 1"));
    }
    if !(c_q >= 0.0) || !c_q.is_finite() {
        return bad(format!("Hölder constant {c_q} must be nonnegative"));
    }
    let size = loss.values().len();
    if cells.rows() != size || cells.cols() != size {
        return bad(format!("cell metric must be {size}x{size}"));
    }
    let law1 = DiscreteLaw::from_coupling(loss, pi1)?;
    let law2 = DiscreteLaw::from_coupling(loss, pi2)?;
    let lhs = (spectral_risk(&law1, grid)? - spectral_risk(&law2, grid)?).abs();
    let p1 = ProbabilityVector::from_masses(pi1.matrix().to_vec())?;
    let p2 = ProbabilityVector::from_masses(pi2.matrix().to_vec())?;
    let ground = cells.map(|d| math::powf(d.max(0.0), q))?;
    let w = wasserstein_discrete(&p1, &p2, &ground, r)?;
    let conj = if r == 1.0 { f64::INFINITY } else { r / (r - 1.0) };
    let rhs = c_q * w * grid.sigma_norm(conj);
    Ok(HolderCheck {
        lhs,
        rhs,
        pass: lhs <= rhs + BOUND_TOL,
    })
}

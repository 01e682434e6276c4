//! Sampling behaviour of the worst-case expected shortfall.
//!
//! With empirical marginals built from `n_x` and `n_y` draws,
//! `sqrt(n_x) (V(mu_n, nu_n) - V(mu, nu))` converges to `V'(Z_X, c Z_Y)`,
//! where `V'` is the directional derivative of the value, `Z_X`, `Z_Y` are
//! centred normals with multinomial covariances and `c = sqrt(n_x / n_y)`.
//!
//! The value is `min phi.mu + psi.nu + lambda` over a dual polyhedron that
//! does not depend on the marginals, so `V'(d)` is the minimum of
//! `phi.d_mu + psi.d_nu` over the optimal face. [`OptimalFace`] holds that
//! face as an LP: dual feasibility for every cell, tight wherever the
//! optimal primal is positive, with `phi_0 = 0`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;

use crate::bounds::{check_mes_input, solve_mes, solve_reduced};
use crate::domain::{LossMatrix, ProbabilityVector};
use crate::linalg::{apply_factor, psd_factor};
use crate::losses::normal_cdf;
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense};
use crate::math;
use crate::rng::{standard_normal, substream, ChaCha20Rng};
use crate::{Error, Result};

/// Primal entries above this make their dual constraint tight.
pub const ACTIVE_TOL: f64 = 1e-10;
/// Allowed `|sum d|` per unit of `||d||_1` for a tangent direction.
pub const TANGENT_TOL: f64 = 1e-9;
/// Step sizes of the one-sided finite-difference sweep.
pub const FD_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Minimum sample size for the Anderson–Darling test.
pub const AD_MIN_SAMPLES: usize = 8;

/// Empirical law of `n` independent draws from `p`.
pub fn sample_empirical<R: Rng + ?Sized>(
    p: &ProbabilityVector,
    n: usize,
    rng: &mut R,
) -> Result<ProbabilityVector> {
    if n == 0 {
        return Err(Error::InvalidParams("sample size must be positive".to_string()));
    }
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &w in p.weights() {
        acc += w;
        cdf.push(acc);
    }
    let last = p.weights().iter().rposition(|&w| w > 0.0).unwrap_or(0);
    let mut counts = vec![0u64; p.len()];
    for _ in 0..n {
        let u = rng.random::<f64>() * acc;
        let k = cdf.partition_point(|&c| c <= u).min(last);
        counts[k] += 1;
    }
    ProbabilityVector::new(counts.iter().map(|&c| c as f64 / n as f64).collect())
}

/// `Sigma_ii = p_i (1 - p_i)`, `Sigma_ij = -p_i p_j`.
pub fn multinomial_covariance(p: &ProbabilityVector) -> DMatrix<f64> {
    let w = p.weights();
    DMatrix::from_fn(w.len(), w.len(), |i, j| {
        if i == j {
            w[i] * (1.0 - w[i])
        } else {
            -w[i] * w[j]
        }
    })
}

/// Optimal face of the dual of the worst-case expected shortfall LP.
#[derive(Debug, Clone)]
pub struct OptimalFace {
    n: usize,
    m: usize,
    value: f64,
    lp: LinearProgram,
}

impl OptimalFace {
    pub fn new(
        mu: &ProbabilityVector,
        nu: &ProbabilityVector,
        loss: &LossMatrix,
        alpha: f64,
    ) -> Result<Self> {
        check_mes_input(mu, nu, loss, alpha)?;
        let red = solve_reduced(mu, nu, loss, alpha)?;
        let (n, m) = (mu.len(), nu.len());
        let tail = 1.0 - alpha;

        // Variables: phi_1..phi_{n-1}, psi_0..psi_{m-1}, lambda.
        let mut lp = LinearProgram::new(Sense::Minimize);
        for _ in 0..n - 1 + m + 1 {
            lp.add_free_var(0.0);
        }
        let lambda = n - 1 + m;
        let pair = |i: usize, j: usize, s: f64| {
            let mut c = vec![(n - 1 + j, s)];
            if i > 0 {
                c.push((i - 1, s));
            }
            c
        };
        for i in 0..n {
            for j in 0..m {
                let k = i * m + j;
                let mut tail_row = pair(i, j, tail);
                tail_row.push((lambda, 1.0));
                let rel = if red.theta[k] > ACTIVE_TOL { Relation::Eq } else { Relation::Ge };
                lp.add_constraint(tail_row, rel, loss.get(i, j));
                let rel = if red.body[k] > ACTIVE_TOL { Relation::Eq } else { Relation::Ge };
                lp.add_constraint(pair(i, j, 1.0), rel, 0.0);
            }
        }
        Ok(Self {
            n,
            m,
            value: red.value,
            lp,
        })
    }

    /// Worst-case value at the base marginals.
    pub fn value(&self) -> f64 {
        self.value
    }

    fn check_direction(&self, d_mu: &[f64], d_nu: &[f64]) -> Result<()> {
        if d_mu.len() != self.n || d_nu.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "directions of length {} and {} for supports of {} and {}",
                d_mu.len(),
                d_nu.len(),
                self.n,
                self.m
            )));
        }
        for (name, d) in [("mu", d_mu), ("nu", d_nu)] {
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::DirectionNotTangent(format!("non-finite entry in d_{name}")));
            }
            let scale: f64 = d.iter().map(|v| v.abs()).sum();
            let total = math::sum(d.iter().copied());
            if total.abs() > TANGENT_TOL * scale.max(1.0) {
                return Err(Error::DirectionNotTangent(format!(
                    "d_{name} sums to {total:e}"
                )));
            }
        }
        Ok(())
    }

    fn optimize(&self, cost: Vec<f64>, sense: Sense) -> Result<Option<f64>> {
        let mut lp = LinearProgram::new(sense);
        for &c in &cost {
            lp.add_free_var(c);
        }
        for c in self.lp.constraints() {
            lp.add_constraint(c.coeffs.clone(), c.relation, c.rhs);
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => Ok(Some(sol.objective)),
            LpStatus::Unbounded => Ok(None),
            LpStatus::Infeasible => Err(Error::NumericalFailure {
                reason: "optimal dual face came out empty".to_string(),
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
            }),
        }
    }

    fn direction_cost(&self, d_mu: &[f64], d_nu: &[f64]) -> Vec<f64> {
        let mut cost = Vec::with_capacity(self.n + self.m);
        cost.extend_from_slice(&d_mu[1..]);
        cost.extend_from_slice(d_nu);
        cost.push(0.0);
        cost
    }

    /// `min phi.d_mu + psi.d_nu` over the face.
    pub fn derivative(&self, d_mu: &[f64], d_nu: &[f64]) -> Result<f64> {
        self.check_direction(d_mu, d_nu)?;
        if d_mu.iter().chain(d_nu).all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        self.optimize(self.direction_cost(d_mu, d_nu), Sense::Minimize)?
            .ok_or_else(|| {
                Error::DirectionNotTangent("direction removes mass from an atom that has none".to_string())
            })
    }

    /// `[min, max]` of each potential over the face, in the order
    /// `phi_1..phi_{n-1}, psi_0..psi_{m-1}, lambda`; infinite when unbounded.
    pub fn coordinate_ranges(&self) -> Result<Vec<(f64, f64)>> {
        let k = self.n + self.m;
        (0..k)
            .map(|v| {
                let mut cost = vec![0.0; k];
                cost[v] = 1.0;
                let lo = self.optimize(cost.clone(), Sense::Minimize)?.unwrap_or(f64::NEG_INFINITY);
                let hi = self.optimize(cost, Sense::Maximize)?.unwrap_or(f64::INFINITY);
                Ok((lo, hi))
            })
            .collect()
    }

    /// Number of potentials that are not pinned down by the face.
    pub fn free_coordinates(&self, tol: f64) -> Result<usize> {
        Ok(self
            .coordinate_ranges()?
            .iter()
            .filter(|(lo, hi)| !(hi - lo <= tol))
            .count())
    }

    /// The face is a single point, so `V'` is linear.
    pub fn is_unique(&self, tol: f64) -> Result<bool> {
        Ok(self.free_coordinates(tol)? == 0)
    }
}

/// Directional derivative of the worst-case expected shortfall along a
/// tangent direction `(d_mu, d_nu)` of the product of simplices.
pub fn hadamard_derivative(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    alpha: f64,
    d_mu: &[f64],
    d_nu: &[f64],
) -> Result<f64> {
    OptimalFace::new(mu, nu, loss, alpha)?.derivative(d_mu, d_nu)
}

fn shifted(p: &ProbabilityVector, d: &[f64], t: f64) -> Result<ProbabilityVector> {
    let w: Vec<f64> = p.weights().iter().zip(d).map(|(a, b)| a + t * b).collect();
    ProbabilityVector::from_masses(w)
        .map_err(|e| Error::DirectionNotTangent(format!("step {t} leaves the simplex: {e}")))
}

/// `(V(mu + t d_mu, nu + t d_nu) - base) / t`.
#[allow(clippy::too_many_arguments)]
pub fn finite_difference(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    alpha: f64,
    d_mu: &[f64],
    d_nu: &[f64],
    t: f64,
    base: f64,
) -> Result<f64> {
    if d_mu.len() != mu.len() || d_nu.len() != nu.len() {
        return Err(Error::DimensionMismatch("direction lengths differ from supports".to_string()));
    }
    let v = solve_mes(&shifted(mu, d_mu, t)?, &shifted(nu, d_nu, t)?, loss, alpha)?.value;
    Ok((v - base) / t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSweep {
    pub steps: [f64; 3],
    pub quotients: [f64; 3],
    /// `(10 D(t / 10) - D(t)) / 9` on the two smallest steps.
    pub richardson: f64,
}

impl FdSweep {
    /// Quotient at the smallest step.
    pub fn finest(&self) -> f64 {
        self.quotients[2]
    }
}

/// One-sided difference quotients at [`FD_STEPS`].
pub fn finite_difference_sweep(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    alpha: f64,
    d_mu: &[f64],
    d_nu: &[f64],
) -> Result<FdSweep> {
    let base = solve_mes(mu, nu, loss, alpha)?.value;
    let mut quotients = [0.0; 3];
    for (q, &t) in quotients.iter_mut().zip(&FD_STEPS) {
        *q = finite_difference(mu, nu, loss, alpha, d_mu, d_nu, t, base)?;
    }
    Ok(FdSweep {
        steps: FD_STEPS,
        quotients,
        richardson: (10.0 * quotients[2] - quotients[1]) / 9.0,
    })
}

/// Resampling experiment: empirical marginals of sizes `n_x`, `n_y` drawn
/// from `(mu, nu)`, deviations scaled by `sqrt(n_x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CltExperiment {
    pub mu: ProbabilityVector,
    pub nu: ProbabilityVector,
    pub loss: LossMatrix,
    pub alpha: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub replications: usize,
    pub seed: u64,
}

impl CltExperiment {
    pub fn validate(&self) -> Result<()> {
        check_mes_input(&self.mu, &self.nu, &self.loss, self.alpha)?;
        if self.n_x == 0 || self.n_y == 0 || self.replications == 0 {
            return Err(Error::InvalidParams("sample sizes and replications must be positive".to_string()));
        }
        Ok(())
    }

    pub fn true_value(&self) -> Result<f64> {
        Ok(solve_mes(&self.mu, &self.nu, &self.loss, self.alpha)?.value)
    }

    /// Deviation of replication `index` from `true_value`, on stream `index`.
    pub fn replicate(&self, index: usize, true_value: f64) -> Result<f64> {
        let mut rng = substream(self.seed, index as u64);
        let mu_n = sample_empirical(&self.mu, self.n_x, &mut rng)?;
        let nu_n = sample_empirical(&self.nu, self.n_y, &mut rng)?;
        let v = solve_mes(&mu_n, &nu_n, &self.loss, self.alpha)?.value;
        Ok(math::sqrt(self.n_x as f64) * (v - true_value))
    }

    /// `sqrt(n_x / n_y)`, the weight of `Z_Y` in the limit.
    pub fn ratio(&self) -> f64 {
        math::sqrt(self.n_x as f64 / self.n_y as f64)
    }
}

/// All replications in index order.
pub fn simulate_error_distribution(exp: &CltExperiment) -> Result<Vec<f64>> {
    exp.validate()?;
    let v = exp.true_value()?;
    (0..exp.replications).map(|k| exp.replicate(k, v)).collect()
}

/// Runs `f` on stream `k` of `seed` for `k = 0..replications`, for
/// experiments that draw a fresh instance per replication.
pub fn simulate_fresh<F>(replications: usize, seed: u64, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&mut ChaCha20Rng) -> Result<f64>,
{
    (0..replications)
        .map(|k| f(&mut substream(seed, k as u64)))
        .collect()
}

/// Draws of `V'(Z_X, Z_Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSample {
    pub draws: Vec<f64>,
}

/// Gaussian sampler for tangent directions with multinomial covariance.
#[derive(Debug, Clone)]
pub struct TangentGaussian {
    factor: DMatrix<f64>,
    support: Vec<bool>,
}

impl TangentGaussian {
    pub fn new(p: &ProbabilityVector) -> Self {
        Self {
            factor: psd_factor(&multinomial_covariance(p)),
            support: p.weights().iter().map(|&w| w > 0.0).collect(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.factor.ncols()).map(|_| standard_normal(rng)).collect();
        let d = apply_factor(&self.factor, &z);
        d.iter()
            .zip(&self.support)
            .map(|(&v, &s)| if s { v } else { 0.0 })
            .collect()
    }
}

/// `R` draws of `V'(Z_X, Z_Y)` with `Z_X ~ N(0, Sigma_mu)`,
/// `Z_Y ~ N(0, Sigma_nu)` independent.
pub fn simulate_limit_distribution<R: Rng + ?Sized>(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    alpha: f64,
    replications: usize,
    rng: &mut R,
) -> Result<LimitSample> {
    simulate_limit_distribution_scaled(mu, nu, loss, alpha, replications, 1.0, rng)
}

/// As [`simulate_limit_distribution`] with `Z_Y` multiplied by `ratio`
/// (`sqrt(n_x / n_y)` for unequal sample sizes).
pub fn simulate_limit_distribution_scaled<R: Rng + ?Sized>(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    alpha: f64,
    replications: usize,
    ratio: f64,
    rng: &mut R,
) -> Result<LimitSample> {
    let face = OptimalFace::new(mu, nu, loss, alpha)?;
    let gx = TangentGaussian::new(mu);
    let gy = TangentGaussian::new(nu);
    let mut draws = Vec::with_capacity(replications);
    for _ in 0..replications {
        let dx = gx.draw(rng);
        let dy: Vec<f64> = gy.draw(rng).iter().map(|v| ratio * v).collect();
        draws.push(face.derivative(&dx, &dy)?);
    }
    Ok(LimitSample { draws })
}

/// Sample mean and standard deviation (denominator `n - 1`).
pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = math::sum(x.iter().copied()) / n;
    let ss = math::sum(x.iter().map(|v| (v - mean) * (v - mean)));
    let sd = if x.len() > 1 { math::sqrt(ss / (n - 1.0)) } else { 0.0 };
    (mean, sd)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdResult {
    /// `A^2` adjusted by `1 + 0.75 / n + 2.25 / n^2`.
    pub statistic: f64,
    pub p_value: f64,
    pub reject_at_5pct: bool,
}

/// Anderson–Darling test of normality with mean and variance estimated
/// from the sample.
pub fn anderson_darling_normal(samples: &[f64]) -> Result<AdResult> {
    let n = samples.len();
    if n < AD_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            given: n,
            needed: AD_MIN_SAMPLES,
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainError("non-finite sample".to_string()));
    }
    let (mean, sd) = mean_sd(samples);
    if !(sd > 0.0) {
        return Ok(AdResult {
            statistic: f64::INFINITY,
            p_value: 0.0,
            reject_at_5pct: true,
        });
    }
    let mut z: Vec<f64> = samples.iter().map(|v| (v - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let lo = math::ln(normal_cdf(z[i]).max(f64::MIN_POSITIVE));
        let hi = math::ln(normal_cdf(-z[n - 1 - i]).max(f64::MIN_POSITIVE));
        s += (2 * i + 1) as f64 * (lo + hi);
    }
    let a2 = -nf - s / nf;
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a >= 0.6 {
        math::exp(1.2937 - 5.709 * a + 0.0186 * a * a)
    } else if a >= 0.34 {
        math::exp(0.9177 - 4.279 * a - 1.38 * a * a)
    } else if a >= 0.2 {
        1.0 - math::exp(-8.318 + 42.796 * a - 59.938 * a * a)
    } else {
        1.0 - math::exp(-13.436 + 101.14 * a - 223.73 * a * a)
    };
    let p = p.clamp(0.0, 1.0);
    Ok(AdResult {
        statistic: a,
        p_value: p,
        reject_at_5pct: p < 0.05,
    })
}

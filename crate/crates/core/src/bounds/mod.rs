//! Worst-case expected shortfall and spectral risk over all couplings.
//!
//! [`solve_mes`] maximizes `ES_alpha` of the loss over couplings of the two
//! marginals and [`solve_msp`] does the same for a discretized spectral
//! risk measure. Both return the optimal coupling together with a dual
//! certificate that [`verify_duality`] checks without trusting the solver.
//! [`brute_force_mes`] reaches the same value by the threshold
//! minimization route and serves as an independent oracle.

mod mes;
mod msp;
mod oracle;

pub use mes::{build_mes_lp, solve_mes};
pub(crate) use mes::solve_reduced;
pub use msp::{build_msp_lp, solve_msp, MAX_MSP_CELL_LEVELS};
pub use oracle::{brute_force_mes, transport_vertices, MAX_ORACLE_CELLS};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::domain::{Coupling, LossMatrix, ProbabilityVector, COUPLING_TOL};
use crate::math;
use crate::spectrum::SpectralGrid;
use crate::{Error, Result};

/// Largest violation of a dual constraint still accepted.
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-8;
/// Largest accepted `dual - primal`, relative to `max(1, |primal|)`.
pub const GAP_TOL: f64 = 1e-7;
/// Largest accepted `primal - dual`: weak duality.
pub const WEAK_DUALITY_TOL: f64 = 1e-9;

/// Feasible point of the dual problem; its value bounds the primal.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// One threshold for expected shortfall, one per grid level otherwise.
    pub beta: Vec<f64>,
    /// Slack variables of the expected shortfall dual, row-major; empty for
    /// spectral problems.
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MesSolution {
    pub value: f64,
    pub alpha: f64,
    pub coupling: Coupling,
    /// Row-major tail measure `Theta`, bounded by `pi / (1 - alpha)`.
    pub theta: Vec<f64>,
    pub certificate: DualCertificate,
    pub gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MspSolution {
    pub value: f64,
    pub grid: SpectralGrid,
    pub coupling: Coupling,
    /// One row-major tail measure per grid level.
    pub thetas: Vec<Vec<f64>>,
    /// `VaR_{u_k}` of the loss under the optimal coupling.
    pub betas: Vec<f64>,
    pub certificate: DualCertificate,
    pub gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub enum SolutionRef<'a> {
    Mes(&'a MesSolution),
    Msp(&'a MspSolution),
}

impl<'a> From<&'a MesSolution> for SolutionRef<'a> {
    fn from(s: &'a MesSolution) -> Self {
        Self::Mes(s)
    }
}

impl<'a> From<&'a MspSolution> for SolutionRef<'a> {
    fn from(s: &'a MspSolution) -> Self {
        Self::Msp(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub primal: f64,
    pub dual: f64,
    /// `dual - primal`.
    pub gap: f64,
    /// Row sums of the coupling minus `mu`.
    pub row_residuals: Vec<f64>,
    /// Column sums of the coupling minus `nu`.
    pub col_residuals: Vec<f64>,
    /// Per cell, `phi_i + psi_j` minus what the certificate must cover there.
    pub dual_slack: Vec<f64>,
}

/// `k* = min L - 1` and `K* = max L + 1`: every threshold minimizer lies
/// in between.
pub fn bracket_beta(loss: &LossMatrix) -> (f64, f64) {
    (loss.min() - 1.0, loss.max() + 1.0)
}

/// `C^beta_ij = sum_k g_k max(L_ij - beta_k, 0)`.
///
/// `beta` has one entry per grid level, or one more whose first entry is a
/// threshold for the atom `z0` at zero.
pub fn c_beta_evaluate(loss: &LossMatrix, grid: &SpectralGrid, beta: &[f64]) -> Result<LossMatrix> {
    let k = grid.len();
    let (atom, levels) = if beta.len() == k {
        (None, beta)
    } else if beta.len() == k + 1 {
        (Some(beta[0]), &beta[1..])
    } else {
        return Err(Error::DimensionMismatch(format!(
            "{} thresholds for a grid of {k} levels",
            beta.len()
        )));
    };
    loss.map(|l| {
        let mut c = atom.map_or(0.0, |b0| grid.z0() * (l - b0).max(0.0));
        for (&g, &b) in grid.gamma_weights().iter().zip(levels) {
            c += g * (l - b).max(0.0);
        }
        c
    })
}

/// Checks an expected shortfall certificate and returns its value
/// `phi . mu + psi . nu + beta`.
pub fn check_mes_certificate(
    cert: &DualCertificate,
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    alpha: f64,
) -> Result<(f64, Vec<f64>)> {
    check_shapes(cert, mu, nu, 1)?;
    let (n, m) = (mu.len(), nu.len());
    if cert.rho.len() != n * m {
        return Err(Error::DimensionMismatch(format!(
            "certificate has {} slack entries for {n}x{m} cells",
            cert.rho.len()
        )));
    }
    let beta = cert.beta[0];
    let mut problems = Vec::new();
    let mut slack = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let rho = cert.rho[i * m + j];
            let cover = (1.0 - alpha) * (cert.phi[i] + cert.psi[j]) - rho;
            let reach = rho + beta - loss.get(i, j);
            if cover < -DUAL_FEASIBILITY_TOL {
                problems.push(format!("(1-alpha)(phi+psi) < rho at ({i},{j}) by {:e}", -cover));
            }
            if reach < -DUAL_FEASIBILITY_TOL {
                problems.push(format!("rho + beta < L at ({i},{j}) by {:e}", -reach));
            }
            if rho < -DUAL_FEASIBILITY_TOL {
                problems.push(format!("rho negative at ({i},{j})"));
            }
            slack.push(cover.min(reach).min(rho));
        }
    }
    if !problems.is_empty() {
        return Err(Error::CertificateInvalid(problems));
    }
    Ok((mu.expectation(&cert.phi) + nu.expectation(&cert.psi) + beta, slack))
}

/// Checks a spectral certificate, `phi_i + psi_j >= z0 L + C^beta`, and
/// returns its value `phi . mu + psi . nu + sum_k w_k beta_k`.
pub fn check_msp_certificate(
    cert: &DualCertificate,
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    grid: &SpectralGrid,
) -> Result<(f64, Vec<f64>)> {
    check_shapes(cert, mu, nu, grid.len())?;
    let c = c_beta_evaluate(loss, grid, &cert.beta)?;
    let m = nu.len();
    let mut problems = Vec::new();
    let mut slack = Vec::with_capacity(mu.len() * m);
    for i in 0..mu.len() {
        for j in 0..m {
            let s = cert.phi[i] + cert.psi[j] - grid.z0() * loss.get(i, j) - c.get(i, j);
            if s < -DUAL_FEASIBILITY_TOL {
                problems.push(format!("phi+psi below the covered cost at ({i},{j}) by {:e}", -s));
            }
            slack.push(s);
        }
    }
    if !problems.is_empty() {
        return Err(Error::CertificateInvalid(problems));
    }
    let value = mu.expectation(&cert.phi)
        + nu.expectation(&cert.psi)
        + math::dot(grid.weights(), &cert.beta);
    Ok((value, slack))
}

fn check_shapes(
    cert: &DualCertificate,
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    betas: usize,
) -> Result<()> {
    if cert.phi.len() != mu.len() || cert.psi.len() != nu.len() || cert.beta.len() != betas {
        return Err(Error::DimensionMismatch(format!(
            "certificate sizes ({}, {}, {}) do not match ({}, {}, {betas})",
            cert.phi.len(),
            cert.psi.len(),
            cert.beta.len(),
            mu.len(),
            nu.len()
        )));
    }
    if cert.phi.iter().chain(&cert.psi).chain(&cert.beta).any(|v| !v.is_finite()) {
        return Err(Error::CertificateInvalid(alloc::vec![String::from(
            "certificate has non-finite entries"
        )]));
    }
    Ok(())
}

/// Recomputes the primal value from the returned coupling and tail
/// measures, the dual value from the certificate, and checks both
/// feasibility and the gap.
pub fn verify_duality<'a>(
    sol: impl Into<SolutionRef<'a>>,
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
) -> Result<GapReport> {
    let sol = sol.into();
    loss.check_marginals(mu, nu)?;
    let coupling = match sol {
        SolutionRef::Mes(s) => &s.coupling,
        SolutionRef::Msp(s) => &s.coupling,
    };
    if coupling.rows() != mu.len() || coupling.cols() != nu.len() {
        return Err(Error::DimensionMismatch(String::from(
            "coupling does not match the marginals",
        )));
    }
    let mut problems = Vec::new();
    let row_residuals: Vec<f64> = coupling
        .row_sums()
        .iter()
        .zip(mu.weights())
        .map(|(a, b)| a - b)
        .collect();
    let col_residuals: Vec<f64> = coupling
        .col_sums()
        .iter()
        .zip(nu.weights())
        .map(|(a, b)| a - b)
        .collect();
    let worst = row_residuals
        .iter()
        .chain(&col_residuals)
        .fold(0.0f64, |a, r| a.max(r.abs()));
    if worst > COUPLING_TOL {
        problems.push(format!("coupling marginals off by {worst:e}"));
    }
    if coupling.matrix().iter().any(|&p| p < -COUPLING_TOL) {
        problems.push(String::from("coupling has negative mass"));
    }

    let (primal, dual, dual_slack) = match sol {
        SolutionRef::Mes(s) => {
            check_theta(&s.theta, coupling, s.alpha, "theta", &mut problems);
            let primal = math::dot(&s.theta, loss.values());
            let (dual, slack) = check_mes_certificate(&s.certificate, mu, nu, loss, s.alpha)?;
            (primal, dual, slack)
        }
        SolutionRef::Msp(s) => {
            if s.thetas.len() != s.grid.len() {
                problems.push(format!(
                    "{} tail measures for {} levels",
                    s.thetas.len(),
                    s.grid.len()
                ));
            }
            let mut primal = s.grid.z0() * coupling.expectation(loss);
            for (k, theta) in s.thetas.iter().enumerate() {
                let u = s.grid.levels()[k];
                check_theta(theta, coupling, u, &format!("theta[{k}]"), &mut problems);
                primal += s.grid.weights()[k] * math::dot(theta, loss.values());
            }
            let (dual, slack) = check_msp_certificate(&s.certificate, mu, nu, loss, &s.grid)?;
            (primal, dual, slack)
        }
    };
    let gap = dual - primal;
    if gap < -WEAK_DUALITY_TOL * 1.0f64.max(primal.abs()) {
        problems.push(format!("weak duality violated: dual {dual} below primal {primal}"));
    }
    if gap > GAP_TOL * 1.0f64.max(primal.abs()) {
        problems.push(format!("duality gap {gap:e} exceeds tolerance"));
    }
    if !problems.is_empty() {
        return Err(Error::CertificateInvalid(problems));
    }
    Ok(GapReport {
        primal,
        dual,
        gap,
        row_residuals,
        col_residuals,
        dual_slack,
    })
}

fn check_theta(theta: &[f64], pi: &Coupling, level: f64, name: &str, problems: &mut Vec<String>) {
    if theta.len() != pi.matrix().len() {
        problems.push(format!("{name} has the wrong shape"));
        return;
    }
    let cap = 1.0 / (1.0 - level);
    let over = theta
        .iter()
        .zip(pi.matrix())
        .map(|(&t, &p)| t - cap * p)
        .fold(0.0f64, f64::max);
    if over > COUPLING_TOL {
        problems.push(format!("{name} exceeds pi/(1-u) by {over:e}"));
    }
    if theta.iter().any(|&t| t < -COUPLING_TOL) {
        problems.push(format!("{name} has negative mass"));
    }
    let mass = math::sum(theta.iter().copied());
    if (mass - 1.0).abs() > COUPLING_TOL {
        problems.push(format!("{name} has mass {mass}"));
    }
}

/// Checks the dimensions and alpha shared by every expected shortfall entry
/// point.
pub(crate) fn check_mes_input(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    alpha: f64,
) -> Result<()> {
    loss.check_marginals(mu, nu)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    Ok(())
}

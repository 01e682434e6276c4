//! Discrete optimal transport as a linear program.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{solve_lp, LinearProgram, LpStatus, Relation, Sense};
use crate::domain::{LossMatrix, ProbabilityVector, MASS_TOL};
use crate::{Error, Result};

/// Largest number of cells accepted by [`solve_transport`].
pub const MAX_TRANSPORT_CELLS: usize = 2000 * 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub value: f64,
    /// Optimal plan, row-major over the full `rows x cols` grid.
    pub plan: Vec<f64>,
    /// Row potentials, normalized so that the first one is zero.
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub iterations: usize,
}

/// Optimizes `sum_ij cost_ij pi_ij` over couplings of `mu` and `nu`.
///
/// The potentials satisfy `phi_i + psi_j >= cost_ij` when maximizing and
/// `<=` when minimizing, on every cell including those of zero-mass atoms,
/// and `phi . mu + psi . nu` equals the optimal value.
pub fn solve_transport(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    cost: &LossMatrix,
    sense: Sense,
) -> Result<TransportSolution> {
    cost.check_marginals(mu, nu)?;
    let (n, m) = (mu.len(), nu.len());
    if n * m > MAX_TRANSPORT_CELLS {
        return Err(Error::ProblemTooLarge(format!(
            "transport problem with {n} x {m} cells"
        )));
    }
    let rows: Vec<usize> = (0..n).filter(|&i| mu.weights()[i] > MASS_TOL).collect();
    let cols: Vec<usize> = (0..m).filter(|&j| nu.weights()[j] > MASS_TOL).collect();

    let mut lp = LinearProgram::new(sense);
    let mut var = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        for &j in &cols {
            var.push(lp.add_nonneg_var(cost.get(i, j)));
        }
    }
    let k = cols.len();
    for (a, &i) in rows.iter().enumerate() {
        let coeffs = (0..k).map(|b| (var[a * k + b], 1.0)).collect();
        lp.add_constraint(coeffs, Relation::Eq, mu.weights()[i]);
    }
    for (b, &j) in cols.iter().enumerate() {
        let coeffs = (0..rows.len()).map(|a| (var[a * k + b], 1.0)).collect();
        lp.add_constraint(coeffs, Relation::Eq, nu.weights()[j]);
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }

    let mut plan = vec![0.0; n * m];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            plan[i * m + j] = sol.x[var[a * k + b]].max(0.0);
        }
    }
    let mut phi = vec![f64::NAN; n];
    let mut psi = vec![f64::NAN; m];
    for (a, &i) in rows.iter().enumerate() {
        phi[i] = sol.duals[a];
    }
    for (b, &j) in cols.iter().enumerate() {
        psi[j] = sol.duals[rows.len() + b];
    }
    complete_potentials(&mut phi, &mut psi, |i, j| cost.get(i, j), sense);

    Ok(TransportSolution {
        value: sol.objective,
        plan,
        phi,
        psi,
        iterations: sol.iterations,
    })
}

/// Fills potentials of zero-mass atoms (marked `NaN`) with the tightest
/// feasible values and shifts so that `phi[0] == 0`.
pub(crate) fn complete_potentials(
    phi: &mut [f64],
    psi: &mut [f64],
    cost: impl Fn(usize, usize) -> f64,
    sense: Sense,
) {
    let pick = |acc: f64, v: f64| match sense {
        Sense::Maximize => acc.max(v),
        Sense::Minimize => acc.min(v),
    };
    let start = match sense {
        Sense::Maximize => f64::NEG_INFINITY,
        Sense::Minimize => f64::INFINITY,
    };
    for j in 0..psi.len() {
        if psi[j].is_nan() {
            let mut v = start;
            for (i, &p) in phi.iter().enumerate() {
                if !p.is_nan() {
                    v = pick(v, cost(i, j) - p);
                }
            }
            psi[j] = if v.is_finite() { v } else { 0.0 };
        }
    }
    for i in 0..phi.len() {
        if phi[i].is_nan() {
            let mut v = start;
            for (j, &q) in psi.iter().enumerate() {
                v = pick(v, cost(i, j) - q);
            }
            phi[i] = v;
        }
    }
    let shift = phi[0];
    phi.iter_mut().for_each(|p| *p -= shift);
    psi.iter_mut().for_each(|q| *q += shift);
}

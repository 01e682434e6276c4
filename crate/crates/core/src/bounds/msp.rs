//! Maximum spectral risk for a discretized spectrum.
//!
//! One coupling `pi` is shared by all levels; level `k` gets its own tail
//! measure `Theta^k <= pi / (1 - u_k)` of unit mass. The objective is
//! `z0 sum L pi + sum_k w_k sum L Theta^k`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{c_beta_evaluate, verify_duality, DualCertificate, MspSolution};
use crate::domain::{Coupling, LossMatrix, ProbabilityVector, MASS_TOL};
use crate::lp::{complete_potentials, solve_lp, LinearProgram, LpStatus, Relation, Sense};
use crate::riskmeasures::{var, DiscreteLaw};
use crate::spectrum::SpectralGrid;
use crate::{Error, Result};

/// Largest accepted `cells x levels`.
pub const MAX_MSP_CELL_LEVELS: usize = 5_000_000;

struct Lifted {
    lp: LinearProgram,
    pi: Vec<usize>,
    theta: Vec<Vec<usize>>,
    mass_row: usize,
}

/// The lifted LP over the cells `rows x cols`.
fn assemble(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    grid: &SpectralGrid,
    rows: &[usize],
    cols: &[usize],
) -> Lifted {
    let (nr, nc) = (rows.len(), cols.len());
    let cells = nr * nc;
    let cell_loss = |k: usize| loss.get(rows[k / nc], cols[k % nc]);

    let mut lp = LinearProgram::new(Sense::Maximize);
    let pi: Vec<usize> = (0..cells)
        .map(|k| lp.add_nonneg_var(grid.z0() * cell_loss(k)))
        .collect();
    let theta: Vec<Vec<usize>> = grid
        .weights()
        .iter()
        .map(|&w| (0..cells).map(|k| lp.add_nonneg_var(w * cell_loss(k))).collect())
        .collect();
    for a in 0..nr {
        let coeffs = (0..nc).map(|b| (pi[a * nc + b], 1.0)).collect();
        lp.add_constraint(coeffs, Relation::Eq, mu.weights()[rows[a]]);
    }
    for b in 0..nc {
        let coeffs = (0..nr).map(|a| (pi[a * nc + b], 1.0)).collect();
        lp.add_constraint(coeffs, Relation::Eq, nu.weights()[cols[b]]);
    }
    for (lvl, &u) in grid.levels().iter().enumerate() {
        let cap = 1.0 / (1.0 - u);
        for k in 0..cells {
            lp.add_constraint(vec![(theta[lvl][k], 1.0), (pi[k], -cap)], Relation::Le, 0.0);
        }
    }
    let mass_row = lp.num_constraints();
    for t in &theta {
        lp.add_constraint(t.iter().map(|&v| (v, 1.0)).collect(), Relation::Eq, 1.0);
    }
    Lifted {
        lp,
        pi,
        theta,
        mass_row,
    }
}

/// The lifted LP on the full supports: `pi` block, then one `Theta` block
/// per level. Rows: marginals, caps per level and cell, unit masses.
pub fn build_msp_lp(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    grid: &SpectralGrid,
) -> Result<LinearProgram> {
    loss.check_marginals(mu, nu)?;
    let rows: Vec<usize> = (0..mu.len()).collect();
    let cols: Vec<usize> = (0..nu.len()).collect();
    Ok(assemble(mu, nu, loss, grid, &rows, &cols).lp)
}

pub fn solve_msp(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    grid: &SpectralGrid,
) -> Result<MspSolution> {
    loss.check_marginals(mu, nu)?;
    let (n, m) = (mu.len(), nu.len());
    let levels = grid.len();
    if n * m * levels.max(1) > MAX_MSP_CELL_LEVELS {
        return Err(Error::ProblemTooLarge(format!(
            "{n} x {m} cells with {levels} levels"
        )));
    }
    let rows: Vec<usize> = (0..n).filter(|&i| mu.weights()[i] > MASS_TOL).collect();
    let cols: Vec<usize> = (0..m).filter(|&j| nu.weights()[j] > MASS_TOL).collect();
    let (nr, nc) = (rows.len(), cols.len());
    let Lifted {
        lp,
        pi,
        theta,
        mass_row,
    } = assemble(mu, nu, loss, grid, &rows, &cols);

    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }

    let scatter = |vars: &[usize]| {
        let mut full = vec![0.0; n * m];
        for (k, &v) in vars.iter().enumerate() {
            full[rows[k / nc] * m + cols[k % nc]] = sol.x[v].max(0.0);
        }
        full
    };
    let coupling = Coupling::new(mu, nu, scatter(&pi))?;
    let thetas: Vec<Vec<f64>> = theta.iter().map(|t| scatter(t)).collect();
    let cert_beta: Vec<f64> = grid
        .weights()
        .iter()
        .enumerate()
        .map(|(lvl, &w)| sol.duals[mass_row + lvl] / w)
        .collect();

    let mut phi = vec![f64::NAN; n];
    let mut psi = vec![f64::NAN; m];
    for (a, &i) in rows.iter().enumerate() {
        phi[i] = sol.duals[a];
    }
    for (b, &j) in cols.iter().enumerate() {
        psi[j] = sol.duals[nr + b];
    }
    let cover = c_beta_evaluate(loss, grid, &cert_beta)?;
    complete_potentials(
        &mut phi,
        &mut psi,
        |i, j| grid.z0() * loss.get(i, j) + cover.get(i, j),
        Sense::Maximize,
    );

    let law = DiscreteLaw::from_coupling(loss, &coupling)?;
    let betas = grid
        .levels()
        .iter()
        .map(|&u| var(&law, u))
        .collect::<Result<Vec<f64>>>()?;

    let mut out = MspSolution {
        value: sol.objective,
        grid: grid.clone(),
        coupling,
        thetas,
        betas,
        certificate: DualCertificate {
            phi,
            psi,
            beta: cert_beta,
            rho: Vec::new(),
        },
        gap: 0.0,
        iterations: sol.iterations,
    };
    out.gap = verify_duality(&out, mu, nu, loss)?.gap;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::solve_mes;
    use crate::lp::solve_transport;

    fn pv(w: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(w.to_vec()).unwrap()
    }

    #[test]
    fn full_support_lp_has_the_displayed_shape() {
        let mu = pv(&[0.0, 1.0]);
        let nu = pv(&[0.5, 0.5]);
        let loss = LossMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 0.0]]).unwrap();
        let grid = SpectralGrid::new(0.2, vec![0.3, 0.7], vec![0.5, 0.3]).unwrap();
        let lp = build_msp_lp(&mu, &nu, &loss, &grid).unwrap();
        // 4 pi + 2 x 4 Theta; 2 + 2 marginals, 2 x 4 caps, 2 masses.
        assert_eq!((lp.num_vars(), lp.num_constraints()), (12, 14));
        let direct = solve_lp(&lp).unwrap().objective;
        assert!((direct - solve_msp(&mu, &nu, &loss, &grid).unwrap().value).abs() < 1e-10);
    }

    #[test]
    fn single_level_grid_is_mes() {
        let mu = pv(&[0.2, 0.5, 0.3]);
        let nu = pv(&[0.45, 0.55]);
        let loss = LossMatrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0], vec![2.0, 0.0]]).unwrap();
        for alpha in [0.1, 0.6, 0.95] {
            let grid = SpectralGrid::expected_shortfall(alpha).unwrap();
            let a = solve_msp(&mu, &nu, &loss, &grid).unwrap();
            let b = solve_mes(&mu, &nu, &loss, alpha).unwrap();
            assert!((a.value - b.value).abs() < 1e-10);
        }
    }

    #[test]
    fn flat_grid_is_transport() {
        let mu = pv(&[0.2, 0.5, 0.3]);
        let nu = pv(&[0.45, 0.0, 0.55]);
        let loss = LossMatrix::from_fn(3, 3, |i, j| ((i + 2 * j) % 4) as f64).unwrap();
        let a = solve_msp(&mu, &nu, &loss, &SpectralGrid::flat()).unwrap();
        let b = solve_transport(&mu, &nu, &loss, Sense::Maximize).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
        assert!(a.betas.is_empty());
    }

    #[test]
    fn mixed_grid_two_point_example() {
        let mu = pv(&[0.5, 0.5]);
        let loss = LossMatrix::from_fn(2, 2, |i, j| (i + j) as f64).unwrap();
        let grid = SpectralGrid::new(0.5, vec![0.5], vec![0.5]).unwrap();
        let s = solve_msp(&mu, &mu, &loss, &grid).unwrap();
        assert!((s.value - 1.5).abs() < 1e-12);
        assert!(s.gap.abs() < 1e-9);
        // VaR_{0.5} of L in {0, 2} with equal mass.
        assert_eq!(s.betas, vec![0.0]);
    }
}

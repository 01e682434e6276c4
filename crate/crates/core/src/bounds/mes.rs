//! Maximum expected shortfall.
//!
//! The displayed program over `(pi, Theta)` has a cap row for every cell.
//! [`solve_mes`] solves an equivalent program with one fewer family of
//! rows: writing `pi = (1 - alpha) Theta + B` with `B >= 0` turns the caps
//! into nonnegativity of the body `B`, leaving only the marginal rows and
//! the unit-mass row of `Theta`. The multiplier of that row is the
//! threshold `beta`, and the cap multipliers are recovered as
//! `rho = max(L - beta, 0)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_mes_input, verify_duality, DualCertificate, MesSolution};
use crate::domain::{Coupling, LossMatrix, ProbabilityVector, MASS_TOL};
use crate::lp::{
    complete_potentials, solve_lp, LinearProgram, LpStatus, Relation, Sense, MAX_TRANSPORT_CELLS,
};
use crate::{Error, Result};

/// The program exactly as displayed: variables `pi_ij` (row-major, first
/// block) and `Theta_ij` (second block).
pub fn build_mes_lp(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    alpha: f64,
) -> Result<LinearProgram> {
    check_mes_input(mu, nu, loss, alpha)?;
    let (n, m) = (mu.len(), nu.len());
    let cap = 1.0 / (1.0 - alpha);
    let mut lp = LinearProgram::new(Sense::Maximize);
    let pi: Vec<usize> = (0..n * m).map(|_| lp.add_nonneg_var(0.0)).collect();
    let theta: Vec<usize> = (0..n * m)
        .map(|k| lp.add_nonneg_var(loss.values()[k]))
        .collect();
    for i in 0..n {
        let row = (0..m).map(|j| (pi[i * m + j], 1.0)).collect();
        lp.add_constraint(row, Relation::Eq, mu.weights()[i]);
    }
    for j in 0..m {
        let col = (0..n).map(|i| (pi[i * m + j], 1.0)).collect();
        lp.add_constraint(col, Relation::Eq, nu.weights()[j]);
    }
    for k in 0..n * m {
        lp.add_constraint(vec![(theta[k], 1.0), (pi[k], -cap)], Relation::Le, 0.0);
    }
    lp.add_constraint(theta.iter().map(|&t| (t, 1.0)).collect(), Relation::Eq, 1.0);
    Ok(lp)
}

/// Optimal primal and dual data of the reduced program, mapped back to the
/// full supports.
#[derive(Debug, Clone)]
pub(crate) struct ReducedMes {
    pub value: f64,
    /// Row-major over the full grid; zero on dropped atoms.
    pub theta: Vec<f64>,
    pub body: Vec<f64>,
    /// Potentials on every atom, `phi[0] == 0`.
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub beta: f64,
    pub iterations: usize,
}

pub(crate) fn solve_reduced(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    alpha: f64,
) -> Result<ReducedMes> {
    check_mes_input(mu, nu, loss, alpha)?;
    let (n, m) = (mu.len(), nu.len());
    if n * m > MAX_TRANSPORT_CELLS {
        return Err(Error::ProblemTooLarge(format!("{n} x {m} cells")));
    }
    let rows: Vec<usize> = (0..n).filter(|&i| mu.weights()[i] > MASS_TOL).collect();
    let cols: Vec<usize> = (0..m).filter(|&j| nu.weights()[j] > MASS_TOL).collect();
    let (nr, nc) = (rows.len(), cols.len());
    let tail = 1.0 - alpha;

    // Variable 2k is Theta and 2k + 1 the body of active cell k.
    let mut lp = LinearProgram::new(Sense::Maximize);
    for &i in &rows {
        for &j in &cols {
            lp.add_nonneg_var(loss.get(i, j));
            lp.add_nonneg_var(0.0);
        }
    }
    for a in 0..nr {
        let coeffs = (0..nc)
            .flat_map(|b| {
                let k = a * nc + b;
                [(2 * k, tail), (2 * k + 1, 1.0)]
            })
            .collect();
        lp.add_constraint(coeffs, Relation::Eq, mu.weights()[rows[a]]);
    }
    for b in 0..nc {
        let coeffs = (0..nr)
            .flat_map(|a| {
                let k = a * nc + b;
                [(2 * k, tail), (2 * k + 1, 1.0)]
            })
            .collect();
        lp.add_constraint(coeffs, Relation::Eq, nu.weights()[cols[b]]);
    }
    lp.add_constraint((0..nr * nc).map(|k| (2 * k, 1.0)).collect(), Relation::Eq, 1.0);

    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }

    let mut theta = vec![0.0; n * m];
    let mut body = vec![0.0; n * m];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            let k = a * nc + b;
            theta[i * m + j] = sol.x[2 * k].max(0.0);
            body[i * m + j] = sol.x[2 * k + 1].max(0.0);
        }
    }
    let beta = sol.duals[nr + nc];
    let mut phi = vec![f64::NAN; n];
    let mut psi = vec![f64::NAN; m];
    for (a, &i) in rows.iter().enumerate() {
        phi[i] = sol.duals[a];
    }
    for (b, &j) in cols.iter().enumerate() {
        psi[j] = sol.duals[nr + b];
    }
    let cap = 1.0 / tail;
    complete_potentials(
        &mut phi,
        &mut psi,
        |i, j| cap * (loss.get(i, j) - beta).max(0.0),
        Sense::Maximize,
    );
    Ok(ReducedMes {
        value: sol.objective,
        theta,
        body,
        phi,
        psi,
        beta,
        iterations: sol.iterations,
    })
}

/// Largest `ES_alpha` of the loss over all couplings of `mu` and `nu`.
pub fn solve_mes(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    alpha: f64,
) -> Result<MesSolution> {
    let r = solve_reduced(mu, nu, loss, alpha)?;
    let tail = 1.0 - alpha;
    let pi: Vec<f64> = r
        .theta
        .iter()
        .zip(&r.body)
        .map(|(&t, &b)| tail * t + b)
        .collect();
    let coupling = Coupling::new(mu, nu, pi)?;
    let rho = loss
        .values()
        .iter()
        .map(|&l| (l - r.beta).max(0.0))
        .collect();
    let mut sol = MesSolution {
        value: r.value,
        alpha,
        coupling,
        theta: r.theta,
        certificate: DualCertificate {
            phi: r.phi,
            psi: r.psi,
            beta: vec![r.beta],
            rho,
        },
        gap: 0.0,
        iterations: r.iterations,
    };
    sol.gap = verify_duality(&sol, mu, nu, loss)?.gap;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve_lp;

    fn pv(w: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(w.to_vec()).unwrap()
    }

    fn sum_on_two_points() -> (ProbabilityVector, ProbabilityVector, LossMatrix) {
        let loss = LossMatrix::from_fn(2, 2, |i, j| (i + j) as f64).unwrap();
        (pv(&[0.5, 0.5]), pv(&[0.5, 0.5]), loss)
    }

    #[test]
    fn displayed_program_shape() {
        let (mu, nu, loss) = sum_on_two_points();
        let lp = build_mes_lp(&mu, &nu, &loss, 0.5).unwrap();
        assert_eq!(lp.num_vars(), 8);
        assert_eq!(lp.num_constraints(), 2 + 2 + 4 + 1);
        let one = LossMatrix::new(1, 1, vec![3.5]).unwrap();
        let lp = build_mes_lp(&pv(&[1.0]), &pv(&[1.0]), &one, 0.3).unwrap();
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.x, vec![1.0, 1.0]);
        assert!((s.objective - 3.5).abs() < 1e-12);
    }

    #[test]
    fn product_coupling_is_feasible() {
        let mu = pv(&[0.2, 0.3, 0.5]);
        let nu = pv(&[0.6, 0.4]);
        let loss = LossMatrix::from_fn(3, 2, |i, j| (i * j) as f64).unwrap();
        let lp = build_mes_lp(&mu, &nu, &loss, 0.7).unwrap();
        let mut x: Vec<f64> = Coupling::product(&mu, &nu).matrix().to_vec();
        x.extend_from_slice(&x.clone());
        let act = lp.row_activity(&x);
        for (c, a) in lp.constraints().iter().zip(act) {
            match c.relation {
                Relation::Eq => assert!((a - c.rhs).abs() < 1e-15),
                Relation::Le => assert!(a <= c.rhs + 1e-15),
                Relation::Ge => unreachable!(),
            }
        }
    }

    #[test]
    fn reduced_and_displayed_programs_agree() {
        let mu = pv(&[0.1, 0.25, 0.3, 0.35]);
        let nu = pv(&[0.4, 0.0, 0.6]);
        let loss = LossMatrix::from_fn(4, 3, |i, j| ((i * 5 + j * 7) % 6) as f64 * 0.7 - 1.0)
            .unwrap();
        for alpha in [0.05, 0.5, 0.93] {
            let full = solve_lp(&build_mes_lp(&mu, &nu, &loss, alpha).unwrap()).unwrap();
            let sol = solve_mes(&mu, &nu, &loss, alpha).unwrap();
            assert!((full.objective - sol.value).abs() < 1e-10);
            assert!(sol.gap.abs() < 1e-9);
            assert_eq!(sol.certificate.phi[0], 0.0);
        }
    }

    #[test]
    fn comonotone_two_point_example() {
        let (mu, nu, loss) = sum_on_two_points();
        let sol = solve_mes(&mu, &nu, &loss, 0.5).unwrap();
        assert!((sol.value - 2.0).abs() < 1e-12);
        let sol = solve_mes(&mu, &nu, &loss, 1e-9).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dirac_marginals() {
        let loss = LossMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let mu = ProbabilityVector::dirac(2, 1).unwrap();
        let nu = ProbabilityVector::dirac(2, 0).unwrap();
        let sol = solve_mes(&mu, &nu, &loss, 0.8).unwrap();
        assert!((sol.value - 3.0).abs() < 1e-12);
        assert!((sol.coupling.get(1, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_alpha() {
        let (mu, nu, loss) = sum_on_two_points();
        assert_eq!(
            solve_mes(&mu, &nu, &loss, 1.0).unwrap_err(),
            Error::AlphaOutOfRange(1.0)
        );
        let small = pv(&[1.0]);
        assert!(matches!(
            solve_mes(&small, &nu, &loss, 0.5),
            Err(Error::DimensionMismatch(_))
        ));
    }
}

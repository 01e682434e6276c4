//! Threshold-minimization oracle for the maximum expected shortfall.
//!
//! `MES = min_beta { beta + (1 - alpha)^{-1} max_pi E_pi[(L - beta)_+] }`.
//! The inner maximum is a transport problem; the outer function is convex
//! in `beta`, so a coarse scan followed by golden-section search finds its
//! minimum. On small supports every transport optimum is also checked
//! against an explicit enumeration of the transportation polytope's
//! vertices.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{bracket_beta, check_mes_input};
use crate::domain::{LossMatrix, ProbabilityVector};
use crate::lp::{solve_transport, Sense};
use crate::math;
use crate::{Error, Result};

/// Largest number of cells the oracle accepts.
pub const MAX_ORACLE_CELLS: usize = 100;
/// Supports up to this size on both sides are cross-checked by vertices.
const VERTEX_CHECK_SIDE: usize = 4;
const BETA_TOL: f64 = 1e-7;
const VERTEX_AGREEMENT_TOL: f64 = 1e-8;

/// All vertices of the transportation polytope of `mu` and `nu`, row-major.
///
/// A vertex is supported on the edges of a spanning forest of the
/// bipartite row/column graph, so every choice of `n + m - 1` cells that
/// forms a tree is solved by repeatedly fixing a row or column with a
/// single open cell. Degenerate vertices may appear more than once.
pub fn transport_vertices(mu: &ProbabilityVector, nu: &ProbabilityVector) -> Vec<Vec<f64>> {
    let (n, m) = (mu.len(), nu.len());
    let cells = n * m;
    let size = n + m - 1;
    let mut out = Vec::new();
    let mut pick: Vec<usize> = (0..size).collect();
    loop {
        if let Some(v) = solve_tree(mu.weights(), nu.weights(), &pick, m) {
            out.push(v);
        }
        // Next combination in lexicographic order.
        let mut k = size;
        while k > 0 && pick[k - 1] == cells - size + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        pick[k - 1] += 1;
        for t in k..size {
            pick[t] = pick[t - 1] + 1;
        }
    }
    out
}

fn solve_tree(mu: &[f64], nu: &[f64], cells: &[usize], m: usize) -> Option<Vec<f64>> {
    let n = mu.len();
    let mut row = mu.to_vec();
    let mut col = nu.to_vec();
    let mut open = vec![true; cells.len()];
    let mut plan = vec![0.0; n * m];
    let mut remaining = cells.len();
    while remaining > 0 {
        let mut progressed = false;
        for i in 0..n {
            let mine: Vec<usize> = (0..cells.len())
                .filter(|&t| open[t] && cells[t] / m == i)
                .collect();
            if mine.len() == 1 {
                let t = mine[0];
                let v = row[i];
                plan[cells[t]] = v;
                row[i] -= v;
                col[cells[t] % m] -= v;
                open[t] = false;
                remaining -= 1;
                progressed = true;
            }
        }
        for j in 0..m {
            let mine: Vec<usize> = (0..cells.len())
                .filter(|&t| open[t] && cells[t] % m == j)
                .collect();
            if mine.len() == 1 {
                let t = mine[0];
                let v = col[j];
                plan[cells[t]] = v;
                col[j] -= v;
                row[cells[t] / m] -= v;
                open[t] = false;
                remaining -= 1;
                progressed = true;
            }
        }
        if !progressed {
            return None;
        }
    }
    let feasible = row.iter().chain(&col).all(|r| r.abs() <= 1e-12)
        && plan.iter().all(|&p| p >= -1e-12);
    feasible.then(|| plan.into_iter().map(|p| p.max(0.0)).collect())
}

/// Independent value of the maximum expected shortfall (see module docs).
pub fn brute_force_mes(
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
    loss: &LossMatrix,
    alpha: f64,
    beta_grid_size: usize,
) -> Result<f64> {
    check_mes_input(mu, nu, loss, alpha)?;
    let cells = mu.len() * nu.len();
    if cells > MAX_ORACLE_CELLS {
        return Err(Error::ProblemTooLarge(format!(
            "oracle accepts at most {MAX_ORACLE_CELLS} cells, got {cells}"
        )));
    }
    if beta_grid_size < 3 {
        return Err(Error::InvalidParams(format!(
            "threshold grid needs at least 3 points, got {beta_grid_size}"
        )));
    }
    let vertices = (mu.len() <= VERTEX_CHECK_SIDE && nu.len() <= VERTEX_CHECK_SIDE)
        .then(|| transport_vertices(mu, nu));
    let cap = 1.0 / (1.0 - alpha);

    let outer = |beta: f64| -> Result<f64> {
        let excess = loss.map(|l| (l - beta).max(0.0))?;
        let ot = solve_transport(mu, nu, &excess, Sense::Maximize)?.value;
        if let Some(vs) = &vertices {
            let best = vs
                .iter()
                .map(|v| crate::math::dot(v, excess.values()))
                .fold(f64::NEG_INFINITY, f64::max);
            if (best - ot).abs() > VERTEX_AGREEMENT_TOL {
                return Err(Error::OracleMismatch(format!(
                    "transport value {ot} but best vertex gives {best} at beta = {beta}"
                )));
            }
        }
        Ok(beta + cap * ot)
    };

    let (lo, hi) = bracket_beta(loss);
    let step = (hi - lo) / (beta_grid_size - 1) as f64;
    let mut best = f64::INFINITY;
    let mut best_idx = 0;
    for k in 0..beta_grid_size {
        let v = outer(lo + k as f64 * step)?;
        if v < best {
            best = v;
            best_idx = k;
        }
    }

    let golden = 0.5 * (math::sqrt(5.0) - 1.0);
    let mut a = lo + best_idx.saturating_sub(1) as f64 * step;
    let mut b = lo + (best_idx + 1).min(beta_grid_size - 1) as f64 * step;
    let mut x1 = b - golden * (b - a);
    let mut x2 = a + golden * (b - a);
    let mut f1 = outer(x1)?;
    let mut f2 = outer(x2)?;
    while b - a > BETA_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - golden * (b - a);
            f1 = outer(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + golden * (b - a);
            f2 = outer(x2)?;
        }
    }
    best = best.min(f1).min(f2);

    // The outer function is piecewise linear; loss values are natural
    // breakpoints, so evaluating them sharpens the search result.
    let mut values = loss.values().to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    for v in values {
        best = best.min(outer(v)?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::solve_mes;

    fn pv(w: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(w.to_vec()).unwrap()
    }

    #[test]
    fn vertices_of_two_by_two() {
        let mu = pv(&[0.5, 0.5]);
        let vs = transport_vertices(&mu, &mu);
        let mut distinct: Vec<Vec<f64>> = Vec::new();
        for v in vs {
            if !distinct.iter().any(|d| d == &v) {
                distinct.push(v);
            }
        }
        distinct.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(distinct, vec![vec![0.0, 0.5, 0.5, 0.0], vec![0.5, 0.0, 0.0, 0.5]]);
    }

    #[test]
    fn oracle_examples() {
        let one = LossMatrix::new(1, 1, vec![2.5]).unwrap();
        let d = pv(&[1.0]);
        assert!((brute_force_mes(&d, &d, &one, 0.4, 5).unwrap() - 2.5).abs() < 1e-6);

        let mu = pv(&[0.5, 0.5]);
        let sum = LossMatrix::from_fn(2, 2, |i, j| (i + j) as f64).unwrap();
        assert!((brute_force_mes(&mu, &mu, &sum, 0.5, 9).unwrap() - 2.0).abs() < 1e-5);

        let flat = LossMatrix::new(2, 2, vec![1.7; 4]).unwrap();
        assert!((brute_force_mes(&mu, &mu, &flat, 0.8, 3).unwrap() - 1.7).abs() < 1e-6);
    }

    #[test]
    fn oracle_matches_solver_on_rectangular_instance() {
        let mu = pv(&[0.15, 0.35, 0.5]);
        let nu = pv(&[0.3, 0.3, 0.25, 0.15]);
        let loss =
            LossMatrix::from_fn(3, 4, |i, j| ((3 * i + 5 * j) % 7) as f64 - 2.0 + 0.1 * i as f64)
                .unwrap();
        for alpha in [0.2, 0.75] {
            let a = brute_force_mes(&mu, &nu, &loss, alpha, 21).unwrap();
            let b = solve_mes(&mu, &nu, &loss, alpha).unwrap().value;
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn oracle_limits() {
        let mu = ProbabilityVector::uniform(11).unwrap();
        let loss = LossMatrix::new(11, 11, vec![0.0; 121]).unwrap();
        assert!(matches!(
            brute_force_mes(&mu, &mu, &loss, 0.5, 5),
            Err(Error::ProblemTooLarge(_))
        ));
        let d = pv(&[1.0]);
        let one = LossMatrix::new(1, 1, vec![0.0]).unwrap();
        assert!(brute_force_mes(&d, &d, &one, 0.5, 2).is_err());
    }
}

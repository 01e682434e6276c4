//! A self-contained sparse linear programming solver.
//!
//! [`solve_lp`] runs a two-phase bounded revised simplex and then checks the
//! returned point against the original problem: primal and dual feasibility,
//! complementary slackness and the duality gap are recomputed from scratch
//! and reported in [`Residuals`]. An optimum that fails these checks is
//! reported as [`Error::NumericalFailure`].

mod lu;
mod simplex;
mod transport;

pub use transport::{solve_transport, TransportSolution, MAX_TRANSPORT_CELLS};
pub(crate) use transport::complete_potentials;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Certification thresholds for an optimal solve.
pub const PRIMAL_RESIDUAL_TOL: f64 = 1e-8;
pub const DUAL_RESIDUAL_TOL: f64 = 1e-8;
pub const COMPLEMENTARITY_TOL: f64 = 1e-8;
pub const GAP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `optimize c^T x` subject to row constraints and variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    sense: Sense,
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<Option<f64>>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Adds a variable with `lower <= x <= upper`; `lower` may be `-inf`.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: Option<f64>) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_nonneg_var(&mut self, cost: f64) -> usize {
        self.add_var(cost, 0.0, None)
    }

    pub fn add_free_var(&mut self, cost: f64) -> usize {
        self.add_var(cost, f64::NEG_INFINITY, None)
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] = cost;
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[Option<f64>] {
        &self.upper
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn upper_bound(&self, j: usize) -> f64 {
        self.upper[j].unwrap_or(f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(Error::MalformedLp(format!("cost of variable {j} is not finite")));
            }
            let l = self.lower[j];
            if l.is_nan() || l == f64::INFINITY {
                return Err(Error::MalformedLp(format!("bad lower bound on variable {j}")));
            }
            if let Some(u) = self.upper[j] {
                if !u.is_finite() || u < l {
                    return Err(Error::MalformedLp(format!("bad upper bound on variable {j}")));
                }
            }
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(Error::MalformedLp(format!("rhs of row {r} is not finite")));
            }
            for &(j, a) in &c.coeffs {
                if j >= n {
                    return Err(Error::MalformedLp(format!(
                        "row {r} references variable {j} of {n}"
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::MalformedLp(format!("row {r} has a non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    /// `a_r^T x` for every row.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| c.coeffs.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        crate::math::dot(&self.objective, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Post-solve certification of an optimal point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    /// Largest row or bound violation.
    pub primal: f64,
    /// Largest sign violation of row duals or reduced costs.
    pub dual: f64,
    /// Largest product of a multiplier and its constraint slack.
    pub complementarity: f64,
    /// `|primal objective - dual objective|`.
    pub gap: f64,
    pub dual_objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// One multiplier per row: the sensitivity of the optimum to its rhs.
    pub duals: Vec<f64>,
    /// `c_j - a_j^T y` per variable.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves `lp`; infeasible and unbounded problems come back as a status.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.num_constraints();
    let sign = match lp.sense {
        Sense::Maximize => -1.0,
        Sense::Minimize => 1.0,
    };

    // Column-major copy of the rows, merging repeated entries.
    let mut counts = vec![0usize; n + 1];
    for c in &lp.constraints {
        for &(j, _) in &c.coeffs {
            counts[j + 1] += 1;
        }
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let mut entries = vec![(0usize, 0.0f64); counts[n]];
    let mut fill = counts.clone();
    for (i, c) in lp.constraints.iter().enumerate() {
        for &(j, a) in &c.coeffs {
            entries[fill[j]] = (i, a);
            fill[j] += 1;
        }
    }
    let mut col_start = vec![0usize];
    let mut packed: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for j in 0..n {
        let mut col: Vec<(usize, f64)> = entries[counts[j]..counts[j + 1]].to_vec();
        col.sort_by_key(|e| e.0);
        let begin = packed.len();
        for (i, a) in col {
            if packed.len() > begin && packed[packed.len() - 1].0 == i {
                let last = packed.len() - 1;
                packed[last].1 += a;
            } else {
                packed.push((i, a));
            }
        }
        let mut keep = begin;
        for k in begin..packed.len() {
            if packed[k].1 != 0.0 {
                packed[keep] = packed[k];
                keep += 1;
            }
        }
        packed.truncate(keep);
        col_start.push(packed.len());
    }

    let mut sf = simplex::StandardForm {
        m,
        col_start,
        entries: packed,
        cost: lp.objective.iter().map(|c| sign * c).collect(),
        lower: lp.lower.clone(),
        upper: (0..n).map(|j| lp.upper_bound(j)).collect(),
        rhs: lp.constraints.iter().map(|c| c.rhs).collect(),
    };
    for (i, c) in lp.constraints.iter().enumerate() {
        let coeff = match c.relation {
            Relation::Le => 1.0,
            Relation::Ge => -1.0,
            Relation::Eq => continue,
        };
        sf.entries.push((i, coeff));
        sf.col_start.push(sf.entries.len());
        sf.cost.push(0.0);
        sf.lower.push(0.0);
        sf.upper.push(f64::INFINITY);
    }

    let result = simplex::solve(&mut sf).map_err(|f| Error::NumericalFailure {
        reason: f.reason,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
    })?;

    let x: Vec<f64> = result.x[..n].to_vec();
    let objective = lp.objective_value(&x);
    let status = match result.outcome {
        simplex::Outcome::Optimal => LpStatus::Optimal,
        simplex::Outcome::Infeasible => LpStatus::Infeasible,
        simplex::Outcome::Unbounded => LpStatus::Unbounded,
    };
    let duals: Vec<f64> = result.y.iter().map(|y| sign * y).collect();
    let mut reduced_costs = lp.objective.clone();
    for (i, c) in lp.constraints.iter().enumerate() {
        for &(j, a) in &c.coeffs {
            reduced_costs[j] -= a * duals[i];
        }
    }
    let mut solution = LpSolution {
        status,
        x,
        duals,
        reduced_costs,
        objective,
        residuals: Residuals::default(),
        iterations: result.iterations,
    };
    if status == LpStatus::Optimal {
        solution.residuals = certify(lp, &solution);
        let r = solution.residuals;
        let scale = 1.0f64.max(objective.abs());
        if r.primal > PRIMAL_RESIDUAL_TOL
            || r.dual > DUAL_RESIDUAL_TOL
            || r.complementarity > COMPLEMENTARITY_TOL * scale
            || r.gap > GAP_TOL * scale
        {
            return Err(Error::NumericalFailure {
                reason: format!(
                    "optimal basis failed certification (complementarity {:e}, gap {:e})",
                    r.complementarity, r.gap
                ),
                primal_residual: r.primal,
                dual_residual: r.dual,
            });
        }
    }
    Ok(solution)
}

/// Recomputes feasibility, dual sign conditions and the duality gap.
pub fn certify(lp: &LinearProgram, sol: &LpSolution) -> Residuals {
    let maximize = lp.sense == Sense::Maximize;
    let activity = lp.row_activity(&sol.x);
    let mut primal = 0.0f64;
    let mut dual = 0.0f64;
    let mut comp = 0.0f64;
    let mut dual_obj = 0.0;

    for (i, c) in lp.constraints.iter().enumerate() {
        let slack = c.rhs - activity[i];
        let y = sol.duals[i];
        let (violation, sign_violation) = match c.relation {
            Relation::Eq => (slack.abs(), 0.0),
            // For a max problem a <= row carries a nonnegative multiplier.
            Relation::Le => (
                (-slack).max(0.0),
                if maximize { (-y).max(0.0) } else { y.max(0.0) },
            ),
            Relation::Ge => (
                slack.max(0.0),
                if maximize { y.max(0.0) } else { (-y).max(0.0) },
            ),
        };
        primal = primal.max(violation);
        dual = dual.max(sign_violation);
        if c.relation != Relation::Eq {
            comp = comp.max((y * slack).abs());
        }
        dual_obj += c.rhs * y;
    }

    for j in 0..lp.num_vars() {
        let l = lp.lower[j];
        let u = lp.upper_bound(j);
        let xj = sol.x[j];
        primal = primal.max((l - xj).max(0.0)).max((xj - u).max(0.0));
        let d = sol.reduced_costs[j];
        // Bound whose multiplier absorbs d: for maximization a positive
        // reduced cost must be priced against the upper bound.
        let use_upper = (d > 0.0) == maximize;
        let bound = if use_upper { u } else { l };
        if bound.is_finite() {
            dual_obj += d * bound;
            comp = comp.max((d * (xj - bound)).abs());
        } else {
            dual = dual.max(d.abs());
        }
    }
    Residuals {
        primal,
        dual,
        complementarity: comp,
        gap: (sol.objective - dual_obj).abs(),
        dual_objective: dual_obj,
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn textbook_corner() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_nonneg_var(1.0);
        let y = lp.add_nonneg_var(1.0);
        lp.add_constraint(vec![(x, 1.0)], Relation::Le, 1.0);
        lp.add_constraint(vec![(y, 1.0)], Relation::Le, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_close(s.objective, 2.0, 1e-12);
        assert_close(s.x[0], 1.0, 1e-12);
        assert_close(s.x[1], 1.0, 1e-12);
        assert_close(s.duals[0], 1.0, 1e-12);
    }

    #[test]
    fn empty_polytope_is_infeasible() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_nonneg_var(1.0);
        lp.add_constraint(vec![(x, 1.0)], Relation::Ge, 1.0);
        lp.add_constraint(vec![(x, 1.0)], Relation::Le, 0.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn free_ray_is_unbounded() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_nonneg_var(1.0);
        lp.add_constraint(vec![(x, 1.0)], Relation::Ge, 0.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_bounded_variables() {
        // min x + 2y  s.t.  x - y = 1, x free, 0 <= y <= 3, x >= -5 via row
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_free_var(1.0);
        let y = lp.add_var(2.0, 0.0, Some(3.0));
        lp.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(x, 1.0)], Relation::Ge, -5.0);
        let s = solve_lp(&lp).unwrap();
        // x = 1 + y, objective 1 + 3y, minimized at y = 0.
        assert_close(s.objective, 1.0, 1e-12);
        assert_close(s.x[0], 1.0, 1e-12);

        // max x + y with y capped: y goes to its upper bound.
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var(1.0, 0.0, Some(2.0));
        let y = lp.add_var(1.0, -1.0, Some(0.5));
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Le, 10.0);
        let s = solve_lp(&lp).unwrap();
        assert_close(s.objective, 2.5, 1e-12);
        assert!(s.residuals.gap < 1e-12);
    }

    #[test]
    fn repeated_coefficients_merge() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_nonneg_var(1.0);
        lp.add_constraint(vec![(x, 1.0), (x, 1.0)], Relation::Le, 4.0);
        let s = solve_lp(&lp).unwrap();
        assert_close(s.x[0], 2.0, 1e-12);
    }

    #[test]
    fn malformed_programs_rejected() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        lp.add_var(1.0, 2.0, Some(1.0));
        assert!(matches!(solve_lp(&lp), Err(Error::MalformedLp(_))));
        let mut lp = LinearProgram::new(Sense::Maximize);
        lp.add_nonneg_var(1.0);
        lp.add_constraint(vec![(3, 1.0)], Relation::Le, 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::MalformedLp(_))));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling instance.
        let mut lp = LinearProgram::new(Sense::Minimize);
        let v: Vec<usize> = [-0.75, 150.0, -0.02, 6.0]
            .iter()
            .map(|&c| lp.add_nonneg_var(c))
            .collect();
        lp.add_constraint(
            vec![(v[0], 0.25), (v[1], -60.0), (v[2], -0.04), (v[3], 9.0)],
            Relation::Le,
            0.0,
        );
        lp.add_constraint(
            vec![(v[0], 0.5), (v[1], -90.0), (v[2], -0.02), (v[3], 3.0)],
            Relation::Le,
            0.0,
        );
        lp.add_constraint(vec![(v[2], 1.0)], Relation::Le, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_close(s.objective, -0.05, 1e-10);
    }
}

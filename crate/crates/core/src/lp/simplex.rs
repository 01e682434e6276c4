//! Bounded-variable revised primal simplex with a two-phase start.
//!
//! Works on `min c^T x  s.t.  A x = b,  l <= x <= u` where the caller has
//! already appended slack columns. Phase one adds one artificial column per
//! row that the slacks cannot cover and minimizes their sum; afterwards the
//! artificials are fixed at zero and phase two runs on the real costs.
//!
//! Entering columns are priced by largest reduced cost over a rotating
//! window of columns (partial pricing), ties going to the first column seen. After a run of degenerate pivots the solver falls back
//! to Bland's rule until the objective moves again.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::lu::BasisFactor;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_RUN: usize = 50;
/// Minimum number of columns priced per iteration before settling on a
/// candidate.
const PRICE_SEGMENT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug)]
pub(crate) struct Failure {
    pub reason: String,
}

/// Column-compressed constraint matrix with bounds and costs.
#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    pub m: usize,
    pub col_start: Vec<usize>,
    pub entries: Vec<(usize, f64)>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl StandardForm {
    pub fn ncols(&self) -> usize {
        self.cost.len()
    }

    #[inline]
    fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.entries[self.col_start[j]..self.col_start[j + 1]]
    }

    fn push_column(&mut self, entries: &[(usize, f64)], cost: f64, lower: f64, upper: f64) {
        self.entries.extend_from_slice(entries);
        self.col_start.push(self.entries.len());
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
    }
}

pub(crate) struct SimplexResult {
    pub outcome: Outcome,
    /// Values of the original (non-artificial) columns.
    pub x: Vec<f64>,
    /// Row multipliers `y` with `c_B = B^T y`.
    pub y: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Basic(usize),
    Nonbasic,
}

struct Solver<'a> {
    sf: &'a mut StandardForm,
    n_orig: usize,
    basis: Vec<usize>,
    state: Vec<State>,
    x: Vec<f64>,
    factor: BasisFactor,
    work_m: Vec<f64>,
    scratch: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    price_cursor: usize,
}

fn initial_value(l: f64, u: f64) -> f64 {
    if l.is_finite() {
        l
    } else if u.is_finite() {
        u
    } else {
        0.0
    }
}

pub(crate) fn solve(sf: &mut StandardForm) -> Result<SimplexResult, Failure> {
    let m = sf.m;
    let n_orig = sf.ncols();
    let mut x: Vec<f64> = (0..n_orig)
        .map(|j| initial_value(sf.lower[j], sf.upper[j]))
        .collect();

    let mut residual = sf.rhs.clone();
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            for &(i, a) in sf.column(j) {
                residual[i] -= a * xj;
            }
        }
    }

    // A slack can start basic on its row when it is a unit column whose
    // implied value respects its bounds.
    let mut basis = vec![usize::MAX; m];
    for j in 0..n_orig {
        let col = sf.column(j);
        if col.len() != 1 || sf.cost[j] != 0.0 {
            continue;
        }
        let (i, a) = col[0];
        if basis[i] != usize::MAX || a == 0.0 {
            continue;
        }
        let v = x[j] + residual[i] / a;
        if v >= sf.lower[j] - PRIMAL_TOL && v <= sf.upper[j] + PRIMAL_TOL {
            basis[i] = j;
            x[j] = v;
            residual[i] = 0.0;
        }
    }

    let original_cost = core::mem::take(&mut sf.cost);
    sf.cost = vec![0.0; n_orig];
    let mut has_artificial = false;
    for i in 0..m {
        if basis[i] != usize::MAX {
            continue;
        }
        let sign = if residual[i] < 0.0 { -1.0 } else { 1.0 };
        sf.push_column(&[(i, sign)], 1.0, 0.0, f64::INFINITY);
        basis[i] = sf.ncols() - 1;
        x.push(residual[i].abs());
        has_artificial = true;
    }

    let ncols = sf.ncols();
    let mut state = vec![State::Nonbasic; ncols];
    for (p, &j) in basis.iter().enumerate() {
        state[j] = State::Basic(p);
    }
    let factor = {
        let cols: Vec<&[(usize, f64)]> = basis.iter().map(|&j| sf.column(j)).collect();
        BasisFactor::new(m, &cols).map_err(|_| Failure {
            reason: String::from("initial basis is singular"),
        })?
    };

    let mut solver = Solver {
        n_orig,
        basis,
        state,
        x,
        factor,
        work_m: vec![0.0; m],
        scratch: vec![0.0; m],
        iterations: 0,
        max_iterations: 50 * (m + ncols) + 10_000,
        price_cursor: 0,
        sf,
    };

    if has_artificial {
        match solver.run()? {
            Outcome::Optimal => {}
            Outcome::Unbounded => {
                return Err(Failure {
                    reason: String::from("phase one reported an unbounded ray"),
                })
            }
            Outcome::Infeasible => unreachable!(),
        }
        let infeasibility: f64 = (n_orig..ncols).map(|j| solver.x[j]).sum();
        let scale = 1.0 + solver.sf.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeasibility > 1e-9 * scale {
            return Ok(SimplexResult {
                outcome: Outcome::Infeasible,
                x: solver.x[..n_orig].to_vec(),
                y: vec![0.0; m],
                iterations: solver.iterations,
            });
        }
        for j in n_orig..ncols {
            solver.sf.upper[j] = 0.0;
            if solver.state[j] == State::Nonbasic {
                solver.x[j] = 0.0;
            }
        }
    }

    solver.sf.cost = original_cost;
    solver.sf.cost.resize(ncols, 0.0);
    solver.refactor()?;
    let outcome = solver.run()?;
    let y = solver.duals();
    Ok(SimplexResult {
        outcome,
        x: solver.x[..solver.n_orig].to_vec(),
        y,
        iterations: solver.iterations,
    })
}

impl Solver<'_> {
    fn refactor(&mut self) -> Result<(), Failure> {
        let cols: Vec<&[(usize, f64)]> = self.basis.iter().map(|&j| self.sf.column(j)).collect();
        self.factor = BasisFactor::new(self.sf.m, &cols).map_err(|s| Failure {
            reason: alloc::format!("basis became singular at position {}", s.position),
        })?;
        self.recompute_basic_values();
        Ok(())
    }

    fn recompute_basic_values(&mut self) {
        let m = self.sf.m;
        let mut v = self.sf.rhs.clone();
        for j in 0..self.sf.ncols() {
            if self.state[j] == State::Nonbasic && self.x[j] != 0.0 {
                for &(i, a) in self.sf.column(j) {
                    v[i] -= a * self.x[j];
                }
            }
        }
        self.factor.ftran(&mut v, &mut self.scratch);
        for p in 0..m {
            self.x[self.basis[p]] = v[p];
        }
    }

    fn duals(&mut self) -> Vec<f64> {
        let mut c: Vec<f64> = self.basis.iter().map(|&j| self.sf.cost[j]).collect();
        self.factor.btran(&mut c, &mut self.scratch);
        c
    }

    fn run(&mut self) -> Result<Outcome, Failure> {
        let mut degenerate_run = 0usize;
        let mut d = vec![0.0; self.sf.ncols()];
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Failure {
                    reason: String::from("iteration limit reached"),
                });
            }
            let bland = degenerate_run >= DEGENERATE_RUN;
            let y = self.duals();

            let ncols = self.sf.ncols();
            let segment = if bland { ncols } else { PRICE_SEGMENT.max(ncols / 16) };
            let origin = if bland { 0 } else { self.price_cursor };
            let mut entering = usize::MAX;
            let mut best = 0.0;
            let mut scanned = 0;
            while scanned < ncols {
                let end = (scanned + segment).min(ncols);
                for k in scanned..end {
                    let j = if origin + k >= ncols { origin + k - ncols } else { origin + k };
                    if self.state[j] != State::Nonbasic {
                        continue;
                    }
                    let (l, u) = (self.sf.lower[j], self.sf.upper[j]);
                    if l == u {
                        continue;
                    }
                    let mut dj = self.sf.cost[j];
                    for &(i, a) in self.sf.column(j) {
                        dj -= y[i] * a;
                    }
                    d[j] = dj;
                    let xj = self.x[j];
                    let score = if dj < -DUAL_TOL && xj < u {
                        -dj
                    } else if dj > DUAL_TOL && xj > l {
                        dj
                    } else {
                        continue;
                    };
                    if bland {
                        entering = j;
                        break;
                    }
                    if score > best {
                        best = score;
                        entering = j;
                    }
                }
                scanned = end;
                if entering != usize::MAX {
                    break;
                }
            }
            if !bland {
                self.price_cursor = (origin + scanned) % ncols.max(1);
            }
            if entering == usize::MAX {
                return Ok(Outcome::Optimal);
            }
            let q = entering;
            let dir = if d[q] < 0.0 { 1.0 } else { -1.0 };

            let mut w = core::mem::take(&mut self.work_m);
            w.iter_mut().for_each(|v| *v = 0.0);
            for &(i, a) in self.sf.column(q) {
                w[i] = a;
            }
            self.factor.ftran(&mut w, &mut self.scratch);

            // Ratio test.
            let mut theta = self.sf.upper[q] - self.sf.lower[q];
            let mut leave: Option<(usize, f64)> = None;
            for p in 0..self.sf.m {
                let wp = w[p];
                if wp.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.basis[p];
                let rate = -dir * wp;
                let (limit, bound) = if rate < 0.0 {
                    let l = self.sf.lower[j];
                    if !l.is_finite() {
                        continue;
                    }
                    (((self.x[j] - l) / -rate).max(0.0), l)
                } else {
                    let u = self.sf.upper[j];
                    if !u.is_finite() {
                        continue;
                    }
                    (((u - self.x[j]) / rate).max(0.0), u)
                };
                let better = match leave {
                    None => limit < theta,
                    Some((lp, _)) => {
                        if limit < theta - 1e-12 {
                            true
                        } else if limit <= theta + 1e-12 {
                            if bland {
                                j < self.basis[lp]
                            } else {
                                wp.abs() > w[lp].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    theta = limit.min(theta);
                    leave = Some((p, bound));
                }
            }

            if !theta.is_finite() {
                self.work_m = w;
                return Ok(Outcome::Unbounded);
            }
            self.iterations += 1;
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            let step = dir * theta;
            for p in 0..self.sf.m {
                if w[p] != 0.0 {
                    let j = self.basis[p];
                    self.x[j] -= step * w[p];
                }
            }
            self.x[q] += step;

            match leave {
                None => {
                    // Bound flip.
                    self.x[q] = if dir > 0.0 {
                        self.sf.upper[q]
                    } else {
                        self.sf.lower[q]
                    };
                }
                Some((p, bound)) => {
                    let out = self.basis[p];
                    self.x[out] = bound;
                    self.state[out] = State::Nonbasic;
                    self.state[q] = State::Basic(p);
                    self.basis[p] = q;
                    self.factor.push_eta(p, &w);
                    if self.factor.eta_count() >= REFACTOR_EVERY {
                        self.work_m = w;
                        self.refactor()?;
                        continue;
                    }
                }
            }
            self.work_m = w;
        }
    }
}

//! Sparse LU factors of a simplex basis plus a product-form eta file.
//!
//! Columns are eliminated left to right (sparsest first). Each column is
//! reduced by the earlier elementary transforms, visiting only the pivot
//! rows it actually touches, in elimination order, through a min-heap.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

/// Below this magnitude a candidate pivot is treated as zero.
const SINGULAR_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Singular {
    /// Basis position whose column could not be pivoted.
    pub position: usize,
}

#[derive(Debug, Clone)]
struct Eta {
    row: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub(crate) struct BasisFactor {
    m: usize,
    /// Elimination step -> basis position.
    col_order: Vec<usize>,
    /// Elimination step -> pivot row.
    pivot_row: Vec<usize>,
    l_start: Vec<usize>,
    l_entries: Vec<(usize, f64)>,
    u_start: Vec<usize>,
    /// Off-diagonal entries of U keyed by elimination step.
    u_entries: Vec<(usize, f64)>,
    u_diag: Vec<f64>,
    etas: Vec<Eta>,
}

impl BasisFactor {
    /// Factors the `m x m` basis whose column at position `p` is `columns[p]`.
    pub(crate) fn new(m: usize, columns: &[&[(usize, f64)]]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| columns[p].len());

        let mut step_of_row = vec![usize::MAX; m];
        let mut work = vec![0.0; m];
        let mut touched = vec![false; m];
        let mut touched_rows: Vec<usize> = Vec::new();
        let mut heap: BinaryHeap<Reverse<usize>> = BinaryHeap::new();

        let mut f = Self {
            m,
            col_order: Vec::with_capacity(m),
            pivot_row: Vec::with_capacity(m),
            l_start: vec![0],
            l_entries: Vec::new(),
            u_start: vec![0],
            u_entries: Vec::new(),
            u_diag: Vec::with_capacity(m),
            etas: Vec::new(),
        };

        for (k, &pos) in order.iter().enumerate() {
            for &(i, v) in columns[pos] {
                if !touched[i] {
                    touched[i] = true;
                    touched_rows.push(i);
                    if step_of_row[i] != usize::MAX {
                        heap.push(Reverse(step_of_row[i]));
                    }
                }
                work[i] += v;
            }
            while let Some(Reverse(p)) = heap.pop() {
                let t = work[f.pivot_row[p]];
                if t == 0.0 {
                    continue;
                }
                for &(i, l) in &f.l_entries[f.l_start[p]..f.l_start[p + 1]] {
                    if !touched[i] {
                        touched[i] = true;
                        touched_rows.push(i);
                        if step_of_row[i] != usize::MAX {
                            heap.push(Reverse(step_of_row[i]));
                        }
                    }
                    work[i] -= l * t;
                }
            }

            let mut best = usize::MAX;
            let mut best_abs = 0.0;
            for &i in &touched_rows {
                if step_of_row[i] == usize::MAX {
                    let a = work[i].abs();
                    if a > best_abs {
                        best_abs = a;
                        best = i;
                    }
                }
            }
            if best == usize::MAX || best_abs < SINGULAR_TOL {
                return Err(Singular { position: pos });
            }
            let diag = work[best];
            for &i in &touched_rows {
                let v = work[i];
                if v != 0.0 && i != best {
                    let s = step_of_row[i];
                    if s == usize::MAX {
                        f.l_entries.push((i, v / diag));
                    } else {
                        f.u_entries.push((s, v));
                    }
                }
                work[i] = 0.0;
                touched[i] = false;
            }
            touched_rows.clear();
            step_of_row[best] = k;
            f.col_order.push(pos);
            f.pivot_row.push(best);
            f.u_diag.push(diag);
            f.l_start.push(f.l_entries.len());
            f.u_start.push(f.u_entries.len());
        }
        Ok(f)
    }

    pub(crate) fn eta_count(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B x = v` in place; `v` comes in by row, leaves by basis position.
    pub(crate) fn ftran(&self, v: &mut [f64], scratch: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            let t = v[self.pivot_row[k]];
            if t != 0.0 {
                for &(i, l) in &self.l_entries[self.l_start[k]..self.l_start[k + 1]] {
                    v[i] -= l * t;
                }
            }
        }
        for k in 0..m {
            scratch[k] = v[self.pivot_row[k]];
        }
        for k in (0..m).rev() {
            let u = scratch[k] / self.u_diag[k];
            scratch[k] = u;
            if u != 0.0 {
                for &(p, val) in &self.u_entries[self.u_start[k]..self.u_start[k + 1]] {
                    scratch[p] -= val * u;
                }
            }
        }
        for k in 0..m {
            v[self.col_order[k]] = scratch[k];
        }
        for eta in &self.etas {
            let t = v[eta.row] / eta.pivot;
            if t != 0.0 {
                for &(i, w) in &eta.entries {
                    v[i] -= w * t;
                }
            }
            v[eta.row] = t;
        }
    }

    /// Solves `y^T B = c^T` in place; `c` comes in by basis position, leaves by row.
    pub(crate) fn btran(&self, c: &mut [f64], scratch: &mut [f64]) {
        let m = self.m;
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.row];
            for &(i, w) in &eta.entries {
                s -= c[i] * w;
            }
            c[eta.row] = s / eta.pivot;
        }
        for k in 0..m {
            let mut s = c[self.col_order[k]];
            for &(p, val) in &self.u_entries[self.u_start[k]..self.u_start[k + 1]] {
                s -= scratch[p] * val;
            }
            scratch[k] = s / self.u_diag[k];
        }
        for k in 0..m {
            c[self.pivot_row[k]] = scratch[k];
        }
        for k in (0..m).rev() {
            let entries = &self.l_entries[self.l_start[k]..self.l_start[k + 1]];
            if entries.is_empty() {
                continue;
            }
            let mut s = 0.0;
            for &(i, l) in entries {
                s += l * c[i];
            }
            c[self.pivot_row[k]] -= s;
        }
    }

    /// Records the replacement of basis position `row` by a column whose
    /// FTRAN image is `w`.
    pub(crate) fn push_eta(&mut self, row: usize, w: &[f64]) {
        let entries = w
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != row && v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta {
            row,
            pivot: w[row],
            entries,
        });
    }
}

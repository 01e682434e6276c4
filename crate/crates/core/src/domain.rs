//! Marginal laws, loss matrices and couplings on finite supports.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Tolerance on the total mass of an input probability vector.
pub const MASS_TOL: f64 = 1e-12;
/// Tolerance on the marginals of a coupling.
pub const COUPLING_TOL: f64 = 1e-9;

/// A probability law on a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    weights: Vec<f64>,
    labels: Option<Vec<String>>,
}

/// Checks nonnegativity and unit mass; rescales away sub-tolerance drift.
pub fn validate_marginal(weights: &[f64]) -> Result<ProbabilityVector> {
    ProbabilityVector::new(weights.to_vec())
}

impl ProbabilityVector {
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::NegativeWeight { index, value });
        }
        let sum = math::sum(weights.iter().copied());
        if (sum - 1.0).abs() >= MASS_TOL {
            return Err(Error::SumNotOne { sum });
        }
        if sum != 1.0 {
            weights.iter_mut().for_each(|w| *w /= sum);
        }
        Ok(Self {
            weights,
            labels: None,
        })
    }

    /// Law from computed masses: entries above `-COUPLING_TOL` are clipped at
    /// zero and the total is scaled to one. For solver output, not user input.
    pub fn from_masses(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        for (index, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() || *w < -COUPLING_TOL {
                return Err(Error::NegativeWeight { index, value: *w });
            }
            *w = w.max(0.0);
        }
        let sum = math::sum(weights.iter().copied());
        if !(sum > 0.0) {
            return Err(Error::SumNotOne { sum });
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Ok(Self {
            weights,
            labels: None,
        })
    }

    /// Uniform law on `n` atoms.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        Self::new(alloc::vec![1.0 / n as f64; n])
    }

    /// Point mass on atom `index` of an `n`-point support.
    pub fn dirac(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::DimensionMismatch(format!(
                "dirac index {index} outside support of size {n}"
            )));
        }
        let mut w = alloc::vec![0.0; n];
        w[index] = 1.0;
        Self::new(w)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} weights",
                labels.len(),
                self.weights.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Indices of atoms with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    pub fn expectation(&self, values: &[f64]) -> f64 {
        math::dot(&self.weights, values)
    }

    /// Convex combination `(1 - eps) * self + eps * other`.
    pub fn mix(&self, other: &ProbabilityVector, eps: f64) -> Result<Self> {
        if other.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "mixing laws of sizes {} and {}",
                self.len(),
                other.len()
            )));
        }
        let w = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (1.0 - eps) * a + eps * b)
            .collect();
        Self::new(w)
    }
}

/// Loss values `L(x_i, y_j)` stored row-major over the product of supports.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl LossMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(String::from(
                "loss matrix must have at least one row and one column",
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} loss matrix",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss {
                row: k / cols,
                col: k % cols,
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} entries, expected {m}",
                rows[bad].len()
            )));
        }
        Self::new(n, m, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self::new(rows, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.rows, self.cols, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_marginals(&self, mu: &ProbabilityVector, nu: &ProbabilityVector) -> Result<()> {
        if mu.len() != self.rows || nu.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "loss is {}x{} but marginals have sizes {} and {}",
                self.rows,
                self.cols,
                mu.len(),
                nu.len()
            )));
        }
        Ok(())
    }
}

/// A joint law on the product of two finite supports.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    rows: usize,
    cols: usize,
    matrix: Vec<f64>,
}

impl Coupling {
    /// Wraps a row-major matrix after checking it couples `mu` and `nu`.
    pub fn new(
        mu: &ProbabilityVector,
        nu: &ProbabilityVector,
        matrix: Vec<f64>,
    ) -> Result<Self> {
        let c = Self::unchecked(mu.len(), nu.len(), matrix)?;
        let residual = c.marginal_residual(mu, nu);
        if residual > COUPLING_TOL || c.matrix.iter().any(|&p| p < -COUPLING_TOL) {
            return Err(Error::InvalidCoupling { residual });
        }
        Ok(c)
    }

    pub(crate) fn unchecked(rows: usize, cols: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} coupling",
                matrix.len()
            )));
        }
        Ok(Self { rows, cols, matrix })
    }

    /// The independent coupling `mu ⊗ nu`.
    pub fn product(mu: &ProbabilityVector, nu: &ProbabilityVector) -> Self {
        let mut matrix = Vec::with_capacity(mu.len() * nu.len());
        for &p in mu.weights() {
            for &q in nu.weights() {
                matrix.push(p * q);
            }
        }
        Self {
            rows: mu.len(),
            cols: nu.len(),
            matrix,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.cols + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.matrix
            .chunks(self.cols)
            .map(|r| math::sum(r.iter().copied()))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| math::sum((0..self.rows).map(|i| self.get(i, j))))
            .collect()
    }

    /// Largest absolute deviation of the row and column sums from `mu`, `nu`.
    pub fn marginal_residual(&self, mu: &ProbabilityVector, nu: &ProbabilityVector) -> f64 {
        if mu.len() != self.rows || nu.len() != self.cols {
            return f64::INFINITY;
        }
        let rows = self
            .row_sums()
            .iter()
            .zip(mu.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let cols = self
            .col_sums()
            .iter()
            .zip(nu.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rows.max(cols)
    }

    /// Number of cells carrying mass above `tol`.
    pub fn nonzeros(&self, tol: f64) -> usize {
        self.matrix.iter().filter(|&&p| p > tol).count()
    }

    pub fn expectation(&self, loss: &LossMatrix) -> f64 {
        math::dot(&self.matrix, loss.values())
    }
}

/// Marginals plus a loss: one worst-case problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub mu: ProbabilityVector,
    pub nu: ProbabilityVector,
    pub loss: LossMatrix,
}

impl Instance {
    pub fn new(mu: ProbabilityVector, nu: ProbabilityVector, loss: LossMatrix) -> Result<Self> {
        loss.check_marginals(&mu, &nu)?;
        Ok(Self { mu, nu, loss })
    }
}

//! Quantiles, expected shortfall and spectral risk of finite laws.
//!
//! Expected shortfall is available by three independent routes: the tail
//! integral of the quantile function, the Rockafellar–Uryasev minimization
//! over a threshold, and the expectation under the extremal density
//! `(1 - alpha)^{-1} (1_{L > q} + kappa 1_{L = q})`.

use alloc::format;
use alloc::vec::Vec;

use crate::domain::{Coupling, LossMatrix, ProbabilityVector};
use crate::math;
use crate::spectrum::SpectralGrid;
use crate::{Error, Result};

/// Slack on cumulative probabilities when locating quantiles.
pub const QUANTILE_TOL: f64 = 1e-12;

/// A loss variable with finitely many values.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    losses: Vec<f64>,
    probs: ProbabilityVector,
}

impl DiscreteLaw {
    pub fn new(losses: Vec<f64>, probs: ProbabilityVector) -> Result<Self> {
        if losses.len() != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} losses for {} probabilities",
                losses.len(),
                probs.len()
            )));
        }
        if let Some(k) = losses.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { row: k, col: 0 });
        }
        Ok(Self { losses, probs })
    }

    /// Equally likely outcomes.
    pub fn uniform(losses: Vec<f64>) -> Result<Self> {
        let p = ProbabilityVector::uniform(losses.len())?;
        Self::new(losses, p)
    }

    pub fn dirac(value: f64) -> Self {
        Self {
            losses: alloc::vec![value],
            probs: ProbabilityVector::dirac(1, 0).expect("one atom"),
        }
    }

    /// Law of `L` under a joint law `pi` on the product of supports.
    pub fn from_coupling(loss: &LossMatrix, pi: &Coupling) -> Result<Self> {
        if loss.rows() != pi.rows() || loss.cols() != pi.cols() {
            return Err(Error::DimensionMismatch(format!(
                "loss is {}x{} but coupling is {}x{}",
                loss.rows(),
                loss.cols(),
                pi.rows(),
                pi.cols()
            )));
        }
        Self::from_masses(loss.values().to_vec(), pi.matrix().to_vec())
    }

    /// Law from solver masses (tiny negatives clipped, renormalized).
    pub fn from_masses(losses: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        Self::new(losses, ProbabilityVector::from_masses(masses)?)
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn probs(&self) -> &ProbabilityVector {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.probs.expectation(&self.losses)
    }

    /// Distinct values in increasing order with their total mass.
    fn sorted_atoms(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self
            .losses
            .iter()
            .copied()
            .zip(self.probs.weights().iter().copied())
            .filter(|&(_, p)| p > 0.0)
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (l, p) in pairs {
            match atoms.last_mut() {
                Some(last) if last.0 == l => last.1 += p,
                _ => atoms.push((l, p)),
            }
        }
        atoms
    }
}

fn check_open(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// `inf { x : P(L <= x) >= alpha }`.
pub fn var(law: &DiscreteLaw, alpha: f64) -> Result<f64> {
    check_open(alpha)?;
    Ok(quantile_sorted(&law.sorted_atoms(), alpha))
}

fn quantile_sorted(atoms: &[(f64, f64)], alpha: f64) -> f64 {
    let mut cum = 0.0;
    for &(l, p) in atoms {
        cum += p;
        if cum >= alpha - QUANTILE_TOL {
            return l;
        }
    }
    atoms[atoms.len() - 1].0
}

/// `(1 - alpha)^{-1} int_alpha^1 VaR_u du`; `alpha = 0` gives the mean.
pub fn es_tail_average(law: &DiscreteLaw, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if alpha == 0.0 {
        return Ok(law.mean());
    }
    let mut lo = 0.0;
    let mut acc = 0.0;
    for (l, p) in law.sorted_atoms() {
        let hi = lo + p;
        let overlap = (hi.min(1.0) - lo.max(alpha)).max(0.0);
        acc += l * overlap;
        lo = hi;
    }
    Ok(acc / (1.0 - alpha))
}

/// Result of minimizing `g(b) = b + (1 - alpha)^{-1} E[(L - b)_+]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuMinimum {
    pub value: f64,
    /// The minimizers form the interval `[argmin_lo, argmin_hi]`.
    pub argmin_lo: f64,
    pub argmin_hi: f64,
}

/// `g(b)` for the law.
pub fn ru_objective(law: &DiscreteLaw, alpha: f64, b: f64) -> f64 {
    let tail = math::sum(
        law.losses
            .iter()
            .zip(law.probs.weights())
            .map(|(&l, &p)| p * (l - b).max(0.0)),
    );
    b + tail / (1.0 - alpha)
}

/// Minimizes `g` by evaluating it at every support point (its kinks).
pub fn es_rockafellar_uryasev(law: &DiscreteLaw, alpha: f64) -> Result<RuMinimum> {
    check_open(alpha)?;
    let atoms = law.sorted_atoms();
    let value = atoms
        .iter()
        .map(|&(b, _)| ru_objective(law, alpha, b))
        .fold(f64::INFINITY, f64::min);
    // Minimizers: P(L > b) <= 1 - alpha <= P(L >= b).
    let argmin_lo = quantile_sorted(&atoms, alpha);
    let mut below = 0.0;
    let mut argmin_hi = argmin_lo;
    for &(l, p) in &atoms {
        if below <= alpha + QUANTILE_TOL {
            argmin_hi = l;
        } else {
            break;
        }
        below += p;
    }
    Ok(RuMinimum {
        value,
        argmin_lo,
        argmin_hi: argmin_hi.max(argmin_lo),
    })
}

/// Weights of the extremal density at every atom of the law (same order).
pub fn es_dual_density(law: &DiscreteLaw, alpha: f64) -> Result<ProbabilityVector> {
    check_open(alpha)?;
    let q = quantile_sorted(&law.sorted_atoms(), alpha);
    let w = law.probs.weights();
    let above = math::sum(
        law.losses
            .iter()
            .zip(w)
            .filter(|(&l, _)| l > q)
            .map(|(_, &p)| p),
    );
    let at = math::sum(
        law.losses
            .iter()
            .zip(w)
            .filter(|(&l, _)| l == q)
            .map(|(_, &p)| p),
    );
    let kappa = if at > 0.0 {
        (((1.0 - alpha) - above) / at).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c = 1.0 / (1.0 - alpha);
    let theta: Vec<f64> = law
        .losses
        .iter()
        .zip(w)
        .map(|(&l, &p)| {
            if l > q {
                c * p
            } else if l == q {
                c * kappa * p
            } else {
                0.0
            }
        })
        .collect();
    ProbabilityVector::from_masses(theta)
}

/// `z0 * E[L] + sum_k w_k ES_{u_k}(L)`.
pub fn spectral_risk(law: &DiscreteLaw, grid: &SpectralGrid) -> Result<f64> {
    let mut total = grid.z0() * law.mean();
    for (&u, &w) in grid.levels().iter().zip(grid.weights()) {
        total += w * es_tail_average(law, u)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn four() -> DiscreteLaw {
        DiscreteLaw::uniform(vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn value_at_risk_examples() {
        assert_eq!(var(&four(), 0.5).unwrap(), 2.0);
        assert_eq!(var(&four(), 0.9).unwrap(), 4.0);
        assert_eq!(var(&DiscreteLaw::dirac(7.0), 0.3).unwrap(), 7.0);
        assert_eq!(var(&four(), 1.0), Err(Error::AlphaOutOfRange(1.0)));
    }

    #[test]
    fn tail_average_examples() {
        assert!((es_tail_average(&four(), 0.5).unwrap() - 3.5).abs() < 1e-15);
        assert!((es_tail_average(&four(), 0.0).unwrap() - 2.5).abs() < 1e-15);
        for a in [0.0, 0.3, 0.99] {
            assert_eq!(es_tail_average(&DiscreteLaw::dirac(-2.0), a).unwrap(), -2.0);
        }
    }

    #[test]
    fn rockafellar_uryasev_examples() {
        let r = es_rockafellar_uryasev(&four(), 0.5).unwrap();
        assert!((r.value - 3.5).abs() < 1e-15);
        assert!(r.argmin_lo <= 2.0 && 2.0 <= r.argmin_hi);
        assert!((ru_objective(&four(), 0.5, 2.0) - 3.5).abs() < 1e-15);

        let r = es_rockafellar_uryasev(&DiscreteLaw::dirac(5.0), 0.4).unwrap();
        assert_eq!((r.value, r.argmin_lo, r.argmin_hi), (5.0, 5.0, 5.0));

        let law =
            DiscreteLaw::new(vec![0.0, 10.0], ProbabilityVector::new(vec![0.9, 0.1]).unwrap())
                .unwrap();
        let r = es_rockafellar_uryasev(&law, 0.9).unwrap();
        assert!((r.value - 10.0).abs() < 1e-12);
        // g(0) = 0 + 10 * 0.1 * 10 = 10 as well: both ends minimize.
        assert!((ru_objective(&law, 0.9, 10.0) - 10.0).abs() < 1e-12);
        assert!(r.argmin_lo <= 10.0 && 10.0 <= r.argmin_hi);
    }

    #[test]
    fn dual_density_examples() {
        let t = es_dual_density(&four(), 0.5).unwrap();
        assert_eq!(t.weights(), &[0.0, 0.0, 0.5, 0.5]);
        assert!((t.expectation(&[1.0, 2.0, 3.0, 4.0]) - 3.5).abs() < 1e-15);

        let t = es_dual_density(&DiscreteLaw::dirac(3.0), 0.2).unwrap();
        assert_eq!(t.weights(), &[1.0]);

        let law = DiscreteLaw::uniform(vec![0.0, 1.0]).unwrap();
        let t = es_dual_density(&law, 0.75).unwrap();
        assert_eq!(t.weights(), &[0.0, 1.0]);
    }

    #[test]
    fn spectral_examples() {
        let g = SpectralGrid::expected_shortfall(0.9).unwrap();
        let law = four();
        assert!(
            (spectral_risk(&law, &g).unwrap() - es_tail_average(&law, 0.9).unwrap()).abs() < 1e-15
        );
        assert!((spectral_risk(&law, &SpectralGrid::flat()).unwrap() - 2.5).abs() < 1e-15);
        let g = SpectralGrid::new(0.5, vec![0.5], vec![0.5]).unwrap();
        assert!((spectral_risk(&law, &g).unwrap() - 3.0).abs() < 1e-15);
    }
}

#![allow(dead_code)]

use proptest::prelude::*;
use riskbound_core::{LossMatrix, ProbabilityVector};

pub fn normalized(raw: Vec<f64>) -> ProbabilityVector {
    let total: f64 = raw.iter().sum();
    ProbabilityVector::from_masses(raw.iter().map(|w| w / total).collect()).unwrap()
}

/// Strictly positive weights on `n` atoms.
pub fn positive_law(n: usize) -> impl Strategy<Value = ProbabilityVector> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(normalized)
}

/// Weights on `n` atoms where some atoms may carry no mass.
pub fn sparse_law(n: usize) -> impl Strategy<Value = ProbabilityVector> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.05f64..1.0], n)
        .prop_filter("some mass", |w| w.iter().any(|&v| v > 0.0))
        .prop_map(normalized)
}

pub fn loss(n: usize, m: usize) -> impl Strategy<Value = LossMatrix> {
    prop::collection::vec(-5.0f64..5.0, n * m)
        .prop_map(move |v| LossMatrix::new(n, m, v).unwrap())
}

#[derive(Debug, Clone)]
pub struct Case {
    pub mu: ProbabilityVector,
    pub nu: ProbabilityVector,
    pub loss: LossMatrix,
}

pub fn case(max_n: usize, max_m: usize) -> impl Strategy<Value = Case> {
    (1..=max_n, 1..=max_m).prop_flat_map(|(n, m)| {
        (positive_law(n), positive_law(m), loss(n, m))
            .prop_map(|(mu, nu, loss)| Case { mu, nu, loss })
    })
}

pub fn sparse_case(max_n: usize, max_m: usize) -> impl Strategy<Value = Case> {
    (1..=max_n, 1..=max_m).prop_flat_map(|(n, m)| {
        (sparse_law(n), sparse_law(m), loss(n, m))
            .prop_map(|(mu, nu, loss)| Case { mu, nu, loss })
    })
}

/// Zero-sum vector of length `n`.
pub fn tangent(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n).prop_map(|v| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| x - mean).collect()
    })
}

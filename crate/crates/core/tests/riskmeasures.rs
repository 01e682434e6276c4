mod common;

use proptest::prelude::*;
use riskbound_core::riskmeasures::*;
use riskbound_core::spectrum::{discretize_spectrum, SpectralFunction};
use riskbound_core::DiscreteLaw;

fn law(max: usize) -> impl Strategy<Value = DiscreteLaw> {
    (1..=max).prop_flat_map(|n| {
        (prop::collection::vec(-10.0f64..10.0, n), common::sparse_law(n))
            .prop_map(|(l, p)| DiscreteLaw::new(l, p).unwrap())
    })
}

/// Losses on a coarse lattice so that ties are common.
fn tied_law(max: usize) -> impl Strategy<Value = DiscreteLaw> {
    (1..=max).prop_flat_map(|n| {
        (prop::collection::vec(-3i32..3, n), common::positive_law(n))
            .prop_map(|(l, p)| DiscreteLaw::new(l.iter().map(|&v| v as f64).collect(), p).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn expected_shortfall_routes_agree(law in prop_oneof![law(20), tied_law(20)], alpha in 0.01f64..0.99) {
        let tail = es_tail_average(&law, alpha).unwrap();
        let ru = es_rockafellar_uryasev(&law, alpha).unwrap();
        let density = es_dual_density(&law, alpha).unwrap();
        prop_assert!((tail - ru.value).abs() <= 1e-9);
        prop_assert!((density.expectation(law.losses()) - tail).abs() <= 1e-9);
    }

    #[test]
    fn value_at_risk_minimizes_the_threshold_objective(law in tied_law(12), alpha in 0.01f64..0.99) {
        let ru = es_rockafellar_uryasev(&law, alpha).unwrap();
        let q = var(&law, alpha).unwrap();
        prop_assert!(ru.argmin_lo <= q && q <= ru.argmin_hi);
        prop_assert!((ru_objective(&law, alpha, q) - ru.value).abs() <= 1e-9);
        prop_assert!((ru_objective(&law, alpha, ru.argmin_hi) - ru.value).abs() <= 1e-9);
    }

    #[test]
    fn tail_average_is_nondecreasing_in_alpha(law in law(15), a in 0.0f64..0.98, b in 0.0f64..0.98) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(es_tail_average(&law, lo).unwrap() <= es_tail_average(&law, hi).unwrap() + 1e-12);
    }

    #[test]
    fn expected_shortfall_is_subadditive_on_a_joint_table(
        rows in (1usize..15).prop_flat_map(|n| (
            prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), n),
            common::positive_law(n),
        )),
        alpha in 0.01f64..0.99,
    ) {
        let (pairs, p) = rows;
        let es = |f: &dyn Fn(&(f64, f64)) -> f64| {
            let law = DiscreteLaw::new(pairs.iter().map(f).collect(), p.clone()).unwrap();
            es_tail_average(&law, alpha).unwrap()
        };
        let joint = es(&|&(a, b)| a + b);
        prop_assert!(joint <= es(&|&(a, _)| a) + es(&|&(_, b)| b) + 1e-9);
    }

    #[test]
    fn spectral_risk_is_sandwiched_by_the_mean(
        law in (1usize..12).prop_flat_map(|n| (
            prop::collection::vec(0.0f64..10.0, n),
            common::positive_law(n),
        ).prop_map(|(l, p)| DiscreteLaw::new(l, p).unwrap())),
        which in 0usize..3,
        alpha in 0.05f64..0.95,
    ) {
        let sigma = match which {
            0 => SpectralFunction::expected_shortfall(alpha).unwrap(),
            1 => SpectralFunction::power_sqrt(),
            _ => SpectralFunction::piecewise_constant(vec![alpha], vec![0.5, 0.5 + 0.5 / (1.0 - alpha)]).unwrap(),
        };
        let grid = discretize_spectrum(&sigma, 64).unwrap();
        let r = spectral_risk(&law, &grid).unwrap();
        let mean = law.mean();
        prop_assert!(mean <= r + 1e-9);
        prop_assert!(r <= grid.sigma_norm(f64::INFINITY) * mean + 1e-9);
    }
}

use proptest::prelude::*;
use riskbound_core::spectrum::*;

fn spectrum() -> impl Strategy<Value = SpectralFunction> {
    prop_oneof![
        (0.01f64..0.99).prop_map(|a| SpectralFunction::expected_shortfall(a).unwrap()),
        Just(SpectralFunction::power_sqrt()),
        Just(SpectralFunction::flat()),
        (0.05f64..0.95, 0.0f64..1.0).prop_map(|(b, low)| {
            let high = (1.0 - low * b) / (1.0 - b);
            SpectralFunction::piecewise_constant(vec![b], vec![low, high]).unwrap()
        }),
        // sigma(u) = 2u sampled on a table.
        Just(SpectralFunction::table(
            (0..=20).map(|k| k as f64 / 20.0).collect(),
            (0..=20).map(|k| k as f64 / 10.0).collect(),
        ).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn grid_mass_is_one(sigma in spectrum(), k in 1usize..200) {
        let grid = discretize_spectrum(&sigma, k).unwrap();
        let mass = grid.z0() + grid.weights().iter().sum::<f64>();
        prop_assert!((mass - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn expected_shortfall_grid_ignores_resolution(alpha in 0.01f64..0.99, k in 1usize..500) {
        let sigma = SpectralFunction::expected_shortfall(alpha).unwrap();
        prop_assert_eq!(
            discretize_spectrum(&sigma, k).unwrap(),
            SpectralGrid::expected_shortfall(alpha).unwrap()
        );
    }
}

#[test]
fn refinement_differences_shrink_on_power_sqrt() {
    let sigma = SpectralFunction::power_sqrt();
    let values: Vec<f64> = (3..12)
        .map(|e| discretize_spectrum(&sigma, 1 << e).unwrap().integrate(|u| u))
        .collect();
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
}

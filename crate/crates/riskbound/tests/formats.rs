use proptest::prelude::*;

use riskbound::formats::{read_json, write_json, InstanceJson, SolutionJson};
use riskbound_core::{discretize_spectrum, solve_mes, solve_msp, SpectralFunction};

fn instance() -> impl Strategy<Value = InstanceJson> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(0.05f64..1.0, n),
            prop::collection::vec(0.05f64..1.0, m),
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, m), n),
        )
            .prop_map(|(a, b, loss)| {
                let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
                InstanceJson {
                    mu: a.iter().map(|v| v / sa).collect(),
                    nu: b.iter().map(|v| v / sb).collect(),
                    loss,
                    sigma: None,
                }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn written_solutions_revalidate(json in instance(), alpha in 0.0f64..0.99, spectral in any::<bool>()) {
        let inst = json.to_instance().unwrap();
        let sol = if spectral {
            let grid = discretize_spectrum(&SpectralFunction::power_sqrt(), 8).unwrap();
            SolutionJson::from_msp(&solve_msp(&inst.mu, &inst.nu, &inst.loss, &grid).unwrap())
        } else {
            SolutionJson::from_mes(&solve_mes(&inst.mu, &inst.nu, &inst.loss, alpha).unwrap())
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sol.json");
        write_json(&path, &sol).unwrap();
        let back: SolutionJson = read_json(&path).unwrap();
        prop_assert_eq!(back.value(), sol.value());
        let report = back.verify(&inst).unwrap();
        prop_assert!(report.gap.abs() <= 1e-7);
    }

    #[test]
    fn tampered_values_are_rejected(json in instance(), alpha in 0.0f64..0.99) {
        let inst = json.to_instance().unwrap();
        let mut sol = SolutionJson::from_mes(&solve_mes(&inst.mu, &inst.nu, &inst.loss, alpha).unwrap());
        if let SolutionJson::Mes { value, .. } = &mut sol {
            *value += 1e-3;
        }
        prop_assert!(sol.verify(&inst).is_err());
    }
}

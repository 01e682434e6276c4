mod common;

use proptest::prelude::*;
use riskbound_core::lp::{solve_transport, Sense};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn plans_are_feasible_basic_and_certified(
        c in common::sparse_case(30, 30),
        maximize in any::<bool>(),
    ) {
        let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
        let (n, m) = (c.mu.len(), c.nu.len());
        let ot = solve_transport(&c.mu, &c.nu, &c.loss, sense).unwrap();
        for i in 0..n {
            let row: f64 = ot.plan[i * m..(i + 1) * m].iter().sum();
            prop_assert!((row - c.mu.weights()[i]).abs() <= 1e-9);
        }
        for j in 0..m {
            let col: f64 = (0..n).map(|i| ot.plan[i * m + j]).sum();
            prop_assert!((col - c.nu.weights()[j]).abs() <= 1e-9);
        }
        prop_assert!(ot.plan.iter().all(|&p| p >= -1e-12));
        let support = ot.plan.iter().filter(|&&p| p > 1e-10).count();
        prop_assert!(support < n + m);

        // Potentials are dual feasible and close the gap.
        let sign = if maximize { 1.0 } else { -1.0 };
        for i in 0..n {
            for j in 0..m {
                prop_assert!(sign * (ot.phi[i] + ot.psi[j] - c.loss.get(i, j)) >= -1e-8);
            }
        }
        let dual = c.mu.expectation(&ot.phi) + c.nu.expectation(&ot.psi);
        prop_assert!((dual - ot.value).abs() <= 1e-7 * ot.value.abs().max(1.0));
        prop_assert_eq!(ot.phi[0], 0.0);
    }
}

mod common;

use proptest::prelude::*;
use riskbound_core::bounds::*;
use riskbound_core::lp::{solve_transport, Sense};
use riskbound_core::riskmeasures::{es_tail_average, spectral_risk};
use riskbound_core::{Coupling, DiscreteLaw, SpectralGrid};

fn alpha() -> impl Strategy<Value = f64> {
    (1u32..10).prop_map(|k| k as f64 / 10.0)
}

fn grid() -> impl Strategy<Value = SpectralGrid> {
    (0.0f64..0.5, prop::collection::vec((0.01f64..0.99, 0.1f64..1.0), 1..4)).prop_map(|(z0, mut lw)| {
        lw.sort_by(|a, b| a.0.total_cmp(&b.0));
        lw.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-3);
        let total: f64 = lw.iter().map(|p| p.1).sum();
        let levels = lw.iter().map(|p| p.0).collect();
        let weights = lw.iter().map(|p| p.1 * (1.0 - z0) / total).collect();
        SpectralGrid::new(z0, levels, weights).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn worst_case_expected_shortfall_is_certified_and_attained(c in common::sparse_case(8, 8), alpha in alpha()) {
        let sol = solve_mes(&c.mu, &c.nu, &c.loss, alpha).unwrap();
        let report = verify_duality(&sol, &c.mu, &c.nu, &c.loss).unwrap();
        prop_assert!(report.gap.abs() <= GAP_TOL * sol.value.abs().max(1.0));
        prop_assert!(report.primal - report.dual <= WEAK_DUALITY_TOL);

        // The returned coupling attains the value; no coupling beats it.
        let law = DiscreteLaw::from_coupling(&c.loss, &sol.coupling).unwrap();
        prop_assert!((es_tail_average(&law, alpha).unwrap() - sol.value).abs() <= 1e-8);
        let product = Coupling::product(&c.mu, &c.nu);
        let law = DiscreteLaw::from_coupling(&c.loss, &product).unwrap();
        prop_assert!(es_tail_average(&law, alpha).unwrap() <= sol.value + 1e-9);
        prop_assert!(sol.value <= c.loss.max() + 1e-9);

        // phi_0 = 0 normalization and the dual objective.
        let cert = &sol.certificate;
        prop_assert_eq!(cert.phi[0], 0.0);
        let dual = c.mu.expectation(&cert.phi) + c.nu.expectation(&cert.psi) + cert.beta[0];
        prop_assert!((dual - sol.value).abs() <= 1e-7 * sol.value.abs().max(1.0));
    }

    #[test]
    fn oracle_agrees(c in common::case(6, 6), alpha in alpha()) {
        let lp = solve_mes(&c.mu, &c.nu, &c.loss, alpha).unwrap().value;
        let oracle = brute_force_mes(&c.mu, &c.nu, &c.loss, alpha, 64).unwrap();
        prop_assert!((lp - oracle).abs() <= 1e-5, "lp {} oracle {}", lp, oracle);
    }

    #[test]
    fn value_is_nondecreasing_in_alpha(c in common::case(6, 6), a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let v_lo = solve_mes(&c.mu, &c.nu, &c.loss, lo).unwrap().value;
        let v_hi = solve_mes(&c.mu, &c.nu, &c.loss, hi).unwrap().value;
        prop_assert!(v_lo <= v_hi + 1e-8);
    }

    #[test]
    fn value_map_is_coherent(c in common::case(6, 6), alpha in alpha(), shift in -3.0f64..3.0, scale in 0.1f64..5.0) {
        let v = solve_mes(&c.mu, &c.nu, &c.loss, alpha).unwrap().value;
        let shifted = c.loss.map(|l| l + shift).unwrap();
        let scaled = c.loss.map(|l| l * scale).unwrap();
        prop_assert!((solve_mes(&c.mu, &c.nu, &shifted, alpha).unwrap().value - v - shift).abs() <= 1e-8);
        prop_assert!((solve_mes(&c.mu, &c.nu, &scaled, alpha).unwrap().value - scale * v).abs() <= 1e-8 * scale.max(1.0));
    }

    #[test]
    fn spectral_problem_collapses_to_its_special_cases(c in common::sparse_case(6, 6), alpha in alpha()) {
        let es = SpectralGrid::expected_shortfall(alpha).unwrap();
        let msp = solve_msp(&c.mu, &c.nu, &c.loss, &es).unwrap().value;
        let mes = solve_mes(&c.mu, &c.nu, &c.loss, alpha).unwrap().value;
        prop_assert!((msp - mes).abs() <= 1e-8);
        let flat = solve_msp(&c.mu, &c.nu, &c.loss, &SpectralGrid::flat()).unwrap().value;
        let ot = solve_transport(&c.mu, &c.nu, &c.loss, Sense::Maximize).unwrap().value;
        prop_assert!((flat - ot).abs() <= 1e-8);
    }

    #[test]
    fn worst_case_spectral_risk_is_certified_and_attained(c in common::sparse_case(5, 5), g in grid()) {
        let sol = solve_msp(&c.mu, &c.nu, &c.loss, &g).unwrap();
        let report = verify_duality(&sol, &c.mu, &c.nu, &c.loss).unwrap();
        prop_assert!(report.gap.abs() <= GAP_TOL * sol.value.abs().max(1.0));
        let law = DiscreteLaw::from_coupling(&c.loss, &sol.coupling).unwrap();
        prop_assert!((spectral_risk(&law, &g).unwrap() - sol.value).abs() <= 1e-8);
        let law = DiscreteLaw::from_coupling(&c.loss, &Coupling::product(&c.mu, &c.nu)).unwrap();
        prop_assert!(spectral_risk(&law, &g).unwrap() <= sol.value + 1e-9);
    }
}

#[test]
fn tampered_certificates_are_rejected() {
    let mu = riskbound_core::ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
    let loss = riskbound_core::LossMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 2.0]]).unwrap();
    let mut sol = solve_mes(&mu, &mu, &loss, 0.5).unwrap();
    sol.certificate.psi[1] -= 0.5;
    assert!(matches!(
        verify_duality(&sol, &mu, &mu, &loss),
        Err(riskbound_core::Error::CertificateInvalid(_))
    ));
}

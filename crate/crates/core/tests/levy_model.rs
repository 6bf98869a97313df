mod common;

use common::{bm, cl};
use parisian_core::{Error, JumpSpec, LevyModel, Model};
use proptest::prelude::*;

#[test]
fn psi_of_brownian_motion_at_one() {
    assert_eq!(bm().psi(1.0), 1.5);
}

#[test]
fn psi_of_compound_poisson_at_one() {
    assert!((cl().psi(1.0) - 1.0).abs() < 1e-15);
}

#[test]
fn psi_vanishes_at_origin() {
    let models = [
        bm(),
        cl(),
        Model::new(0.3, 0.7, JumpSpec::Erlang { rate: 2.0, shape: 3, alpha: 4.0 }).unwrap(),
        Model::new(2.0, 0.0, JumpSpec::Deterministic { rate: 1.0, size: 0.5 }).unwrap(),
    ];
    for m in models {
        assert_eq!(m.psi(0.0), 0.0);
    }
}

#[test]
fn phi_examples() {
    let tol = 1e-12;
    assert_eq!(bm().phi(0.0, tol).unwrap(), 0.0);
    assert!((bm().phi(1.5, tol).unwrap() - 1.0).abs() < 1e-12);
    let down = Model::brownian(-1.0, 1.0).unwrap();
    assert!((down.phi(0.0, tol).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn phi_for_compound_poisson_solves_quadratic() {
    // 1.5 l - l / (1 + l) = q  <=>  1.5 l^2 + (0.5 - q) l - q = 0
    let q: f64 = 0.1;
    let root = (-(0.5 - q) + ((0.5 - q) * (0.5 - q) + 6.0 * q).sqrt()) / 3.0;
    assert!((cl().phi(q, 1e-12).unwrap() - root).abs() < 1e-12);
}

#[test]
fn degenerate_models_are_rejected() {
    let bad = [
        LevyModel::new(1.0, 0.0, JumpSpec::None),
        LevyModel::new(-1.0, 0.0, JumpSpec::Exponential { rate: 1.0, alpha: 1.0 }),
        LevyModel::new(0.0, 0.0, JumpSpec::Exponential { rate: 1.0, alpha: 1.0 }),
        LevyModel::new(1.0, -1.0, JumpSpec::None),
        LevyModel::new(1.0, 1.0, JumpSpec::Exponential { rate: -1.0, alpha: 1.0 }),
        LevyModel::new(1.0, 1.0, JumpSpec::Erlang { rate: 1.0, shape: 0, alpha: 1.0 }),
        LevyModel::new(1.0, 0.0, JumpSpec::Deterministic { rate: 1.0, size: 0.0 }),
        LevyModel::new(f64::NAN, 1.0, JumpSpec::None),
    ];
    for m in bad {
        assert!(matches!(m, Err(Error::InvalidModel(_))), "{m:?}");
    }
}

#[test]
fn adjustment_coefficients() {
    assert!((cl().lundberg_exponent().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!((bm().lundberg_exponent().unwrap() - 2.0).abs() < 1e-12);
    assert!(Model::brownian(-1.0, 1.0).unwrap().lundberg_exponent().is_none());
}

#[test]
fn derivatives_match_finite_differences() {
    let m = Model::new(0.4, 0.8, JumpSpec::Erlang { rate: 1.5, shape: 2, alpha: 3.0 }).unwrap();
    for lam in [0.0, 0.3, 1.7] {
        let h = 1e-5;
        let d1 = (m.psi(lam + h) - m.psi(lam - h)) / (2.0 * h);
        let d2 = (m.psi(lam + h) - 2.0 * m.psi(lam) + m.psi(lam - h)) / (h * h);
        assert!((m.psi_prime(lam) - d1).abs() < 1e-8);
        assert!((m.psi_second(lam) - d2).abs() < 1e-4);
    }
}

fn arb_model() -> impl Strategy<Value = Model> {
    let jumps = prop_oneof![
        Just(JumpSpec::None),
        (0.1f64..3.0, 0.2f64..5.0).prop_map(|(rate, alpha)| JumpSpec::Exponential { rate, alpha }),
        (0.1f64..3.0, 1u32..5, 0.2f64..5.0)
            .prop_map(|(rate, shape, alpha)| JumpSpec::Erlang { rate, shape, alpha }),
        (0.1f64..3.0, 0.05f64..2.0).prop_map(|(rate, size)| JumpSpec::Deterministic { rate, size }),
    ];
    (-2.0f64..3.0, 0.0f64..2.0, jumps).prop_filter_map("degenerate", |(mu, sigma, j)| {
        let sigma = if sigma < 0.1 { 0.0 } else { sigma };
        let mu = if sigma == 0.0 { mu.abs() + 0.1 } else { mu };
        LevyModel::new(mu, sigma, j).ok()
    })
}

proptest! {
    #[test]
    fn psi_is_convex(m in arb_model(), a in 0.0f64..3.0, gap1 in 0.01f64..2.0, gap2 in 0.01f64..2.0) {
        let (l1, l3) = (a, a + gap1 + gap2);
        let l2 = a + gap1;
        let w = gap1 / (gap1 + gap2);
        let chord = (1.0 - w) * m.psi(l1) + w * m.psi(l3);
        prop_assert!(m.psi(l2) <= chord + 1e-12 * (1.0 + chord.abs()));
    }

    #[test]
    fn phi_inverts_psi(m in arb_model(), q in 0.0f64..5.0) {
        let tol = 1e-12;
        let p = m.phi(q, tol).unwrap();
        prop_assert!(p >= 0.0);
        prop_assert!((m.psi(p) - q).abs() <= 10.0 * tol * q.max(1.0), "psi(phi) - q = {}", m.psi(p) - q);
    }

    #[test]
    fn phi_is_nondecreasing(m in arb_model(), q in 0.0f64..5.0, dq in 0.0f64..1.0) {
        let tol = 1e-12;
        prop_assert!(m.phi(q + dq, tol).unwrap() >= m.phi(q, tol).unwrap() - 1e-12);
    }
}

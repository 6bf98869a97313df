mod common;

use common::{bm, cl, gauss, kernel, models, rel_err};
use parisian_core::parisian::{exit_laplace, joint_laplace, potential_density_full};
use parisian_core::valuation::value;
use parisian_core::{Error, Mixture, Query, Valuation};
use proptest::prelude::*;

const INF: f64 = f64::INFINITY;

fn spec(g: Mixture, f_below: Mixture, f_at_b: f64, query: Query) -> Valuation {
    Valuation { g, f_below, f_at_b, query }
}

fn zero() -> Mixture {
    Mixture::zero()
}

#[test]
fn barrier_payoff_alone_is_exit_transform() {
    for (name, m) in models() {
        let k = kernel(&m, 0.1);
        let query = Query::new(1.0, 3.0, 0.1, 0.0, 1.0);
        let v = value(&k, &spec(zero(), zero(), 1.0, query)).unwrap().value;
        assert_eq!(v, exit_laplace(&k, &query).unwrap().value, "{name}");
    }
}

#[test]
fn penalty_alone_is_discounted_joint_transform() {
    for (name, m) in models() {
        let k = kernel(&m, 0.1);
        for lam in [0.0, 0.4] {
            let query = Query::new(1.0, 3.0, 0.1, lam, 1.0);
            let f = Mixture::new(vec![(2.0, lam)]).unwrap();
            let v = value(&k, &spec(zero(), f, 0.0, query)).unwrap().value;
            let j = joint_laplace(&k, &query).unwrap().value;
            let want = 2.0 * j * ((m.psi(lam) - 0.1) * 1.0).exp();
            assert!(rel_err(v, want) < 1e-12, "{name} lam={lam}");
        }
    }
}

#[test]
fn unit_running_payoff_matches_discounting_identity() {
    // q int_0^T e^{-qt} dt + e^{-qT} = 1
    for (name, m) in models() {
        let q = 0.1;
        let k = kernel(&m, q);
        for b in [3.0, INF] {
            let query = Query::new(1.0, b, q, 0.0, 1.0);
            let running = value(&k, &spec(Mixture::constant(q), zero(), 0.0, query)).unwrap().value;
            let stopped = value(&k, &spec(zero(), Mixture::constant(1.0), 1.0, query)).unwrap().value;
            assert!((running + stopped - 1.0).abs() < 1e-6, "{name} b={b}: {}", running + stopped);
        }
    }
}

#[test]
fn running_payoff_against_integrated_density() {
    let m = bm();
    let (q, r, x, b) = (0.1, 1.0, 1.0, 3.0);
    let k = kernel(&m, q);
    let query = Query::new(x, b, q, 0.0, r);
    let g = Mixture::new(vec![(1.0, 0.0), (0.5, 0.7)]).unwrap();
    let v = value(&k, &spec(g.clone(), zero(), 0.0, query)).unwrap().value;
    let f = |y: f64| g.eval(y) * potential_density_full(&k, &query, y).unwrap().value;
    let total = (-q * r).exp() * (gauss(f, -12.0, 0.0, 12) + gauss(f, 0.0, x, 4) + gauss(f, x, b, 6));
    assert!(rel_err(v, total) < 1e-5, "{v} vs {total}");
}

#[test]
fn linear_in_the_payoff() {
    for (name, m) in models() {
        let k = kernel(&m, 0.1);
        let query = Query::new(0.5, 2.5, 0.1, 0.0, 1.0);
        let g1 = Mixture::new(vec![(1.0, 0.0), (0.3, 0.5)]).unwrap();
        let f1 = Mixture::new(vec![(-1.0, 0.2)]).unwrap();
        let g2 = Mixture::new(vec![(2.0, 0.1)]).unwrap();
        let f2 = Mixture::new(vec![(0.5, 0.0)]).unwrap();
        let v1 = value(&k, &spec(g1, f1, 1.0, query)).unwrap().value;
        let v2 = value(&k, &spec(g2, f2, -2.0, query)).unwrap().value;
        let sum = spec(
            Mixture::new(vec![(3.0, 0.0), (0.9, 0.5), (2.0, 0.1)]).unwrap(),
            Mixture::new(vec![(-3.0, 0.2), (0.5, 0.0)]).unwrap(),
            1.0,
            query,
        );
        let v = value(&k, &sum).unwrap().value;
        assert!((v - (3.0 * v1 + v2)).abs() < 1e-10 * v.abs().max(1.0), "{name}");
    }
}

#[test]
fn rejects_divergent_running_payoff_without_barrier() {
    let k = kernel(&cl(), 0.1);
    let query = Query::new(1.0, INF, 0.1, 0.0, 1.0);
    let g = Mixture::new(vec![(1.0, 0.0), (1.0, k.phi() + 0.1)]).unwrap();
    assert!(matches!(value(&k, &spec(g, zero(), 0.0, query)), Err(Error::MixtureDomainError(_))));
    let g = Mixture::new(vec![(0.0, k.phi() + 0.1)]).unwrap();
    assert!(value(&k, &spec(g, zero(), 0.0, query)).is_ok());
}

#[test]
fn rejects_malformed_mixtures() {
    assert!(Mixture::new(vec![]).is_err());
    assert!(Mixture::new(vec![(f64::NAN, 0.0)]).is_err());
    assert!(Mixture::new(vec![(1.0, -0.5)]).is_err());
    assert!(Mixture::new(vec![(1.0, INF)]).is_err());
    assert!(Mixture::new(vec![(1.0, 0.5), (2.0, 0.5)]).is_err());
    let m = Mixture::new(vec![(1.0, 0.0), (2.0, 1.0)]).unwrap();
    assert_eq!(m.eval(0.0), 3.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn nonnegative_payoffs_give_nonnegative_values(
        x in -1.0f64..2.0, gap in 0.0f64..3.0,
        w in prop::collection::vec(0.0f64..2.0, 3), fb in 0.0f64..2.0, use_bm in any::<bool>(),
    ) {
        let m = if use_bm { bm() } else { cl() };
        let k = kernel(&m, 0.1);
        let query = Query::new(x, x + gap, 0.1, 0.0, 1.0);
        let g = Mixture::new(vec![(w[0], 0.0), (w[1], 0.6)]).unwrap();
        let f = Mixture::new(vec![(w[2], 0.3)]).unwrap();
        prop_assert!(value(&k, &spec(g, f, fb, query)).unwrap().value >= -1e-10);
    }
}

mod common;

use common::{bm, cl, gauss, kernel, models, rel_err};
use parisian_core::parisian::{
    exit_laplace, joint_laplace, joint_laplace_inf_b, potential_density_full, potential_density_pos,
    potential_laplace, potential_laplace_inf_b, ruin_probability, strong_markov_residual,
};
use parisian_core::{Error, Flag, Kernel, Model, Query};
use proptest::prelude::*;

const INF: f64 = f64::INFINITY;

fn exit(k: &Kernel, x: f64, b: f64, r: f64) -> f64 {
    exit_laplace(k, &Query::new(x, b, k.q(), 0.0, r)).unwrap().value
}

#[test]
fn exit_at_barrier_is_one() {
    for (_, m) in models() {
        let k = kernel(&m, 0.1);
        for b in [0.0, 1.0, 5.0] {
            assert_eq!(exit(&k, b, b, 1.0), 1.0);
        }
    }
}

#[test]
fn exit_is_monotone_in_start_and_barrier_and_rate() {
    for (name, m) in models() {
        let k0 = kernel(&m, 0.05);
        let k1 = kernel(&m, 0.2);
        let mut prev = 0.0;
        for x in [-1.0, 0.0, 0.5, 1.0, 2.0, 3.0] {
            let e = exit(&k0, x, 3.0, 1.0);
            assert!((0.0..=1.0).contains(&e), "{name}: {e}");
            assert!(e >= prev, "{name} x={x}");
            assert!(exit(&k1, x, 3.0, 1.0) <= e, "{name} x={x}");
            assert!(exit(&k0, x, 4.0, 1.0) <= e, "{name} x={x}");
            prev = e;
        }
    }
}

#[test]
fn joint_transform_collapses_at_phi() {
    for (name, m) in models() {
        let k = kernel(&m, 0.1);
        let phi = k.phi();
        for (x, b, r) in [(1.0, 3.0, 1.0), (0.0, 2.0, 0.5), (-0.5, 4.0, 2.0)] {
            let got = joint_laplace(&k, &Query::new(x, b, 0.1, phi, r)).unwrap().value;
            let rho = k.lambda_q(x, r).unwrap() / k.lambda_q(b, r).unwrap();
            let want = (phi * x).exp() - rho * (phi * b).exp();
            assert!((got - want).abs() < 1e-8 * want.abs().max(1.0), "{name}: {got} vs {want}");
        }
    }
}

#[test]
fn positive_density_is_scale_function_combination() {
    for (name, m) in models() {
        let k = kernel(&m, 0.1);
        let sf = k.scale();
        let query = Query::new(1.0, 3.0, 0.1, 0.0, 1.0);
        let rho = exit(&k, 1.0, 3.0, 1.0);
        assert_eq!(potential_density_pos(&k, &query, 3.5).unwrap().value, 0.0);
        for y in [1.2, 1.5, 2.5] {
            let v = potential_density_pos(&k, &query, y).unwrap().value;
            assert!(rel_err(v, rho * sf.w_q(3.0 - y).unwrap()) < 1e-12, "{name} y={y}");
        }
        let at_b = Query::new(3.0, 3.0, 0.1, 0.0, 1.0);
        assert_eq!(potential_density_pos(&k, &at_b, 1.0).unwrap().value, 0.0);
        assert_eq!(potential_density_full(&k, &at_b, -1.0).unwrap().value, 0.0);
    }
}

#[test]
fn full_density_extends_positive_density() {
    for (name, m) in models() {
        let (q, r) = (0.1, 1.0);
        let k = kernel(&m, q);
        let query = Query::new(1.0, 3.0, q, 0.0, r);
        for y in [0.2, 0.7, 1.3, 2.0, 2.8] {
            let pos = potential_density_pos(&k, &query, y).unwrap().value;
            let full = potential_density_full(&k, &query, y).unwrap().value;
            assert!(rel_err(full, (q * r).exp() * pos) < 1e-4, "{name} y={y}: {full} vs {pos}");
        }
    }
}

#[test]
fn full_density_integrates_to_potential() {
    let m = bm();
    let (q, r, x, b) = (0.1, 1.0, 1.0, 3.0);
    let k = kernel(&m, q);
    for lam in [0.0, 0.4] {
        let query = Query::new(x, b, q, lam, r);
        let f = |y: f64| (lam * y).exp() * potential_density_full(&k, &query, y).unwrap().value;
        let total = gauss(f, -12.0, 0.0, 12) + gauss(f, 0.0, x, 4) + gauss(f, x, b, 6);
        let psi = m.psi(lam);
        let want = potential_laplace(&k, &query).unwrap().value;
        assert!(rel_err((-psi * r).exp() * total, want) < 1e-5, "lam={lam}");
    }
}

#[test]
fn strong_markov_identity_holds() {
    for (name, m) in models() {
        let k = kernel(&m, 0.1);
        for lam in [0.0, 0.3] {
            for (x, b, r) in [(1.0, 3.0, 1.0), (0.0, 2.0, 0.5)] {
                let res = strong_markov_residual(&k, &Query::new(x, b, 0.1, lam, r)).unwrap();
                assert!(res.abs() < 1e-6, "{name} lam={lam} x={x} b={b}: {res}");
            }
        }
        let lam = 0.5 * k.phi();
        let res = strong_markov_residual(&k, &Query::new(2.0, INF, 0.1, lam, 1.0)).unwrap();
        assert!(res.abs() < 1e-6, "{name} b=inf: {res}");
    }
}

#[test]
fn infinite_barrier_decomposes_at_finite_barrier() {
    for (name, m) in models() {
        let k = kernel(&m, 0.1);
        for lam in [0.0, 0.5 * k.phi()] {
            let (x, b, r) = (1.0, 3.0, 1.0);
            let e = exit(&k, x, b, r);
            let j = |x: f64, b: f64| joint_laplace(&k, &Query::new(x, b, 0.1, lam, r)).unwrap().value;
            let p = |x: f64, b: f64| potential_laplace(&k, &Query::new(x, b, 0.1, lam, r)).unwrap().value;
            let jr = j(x, b) + e * j(b, INF);
            assert!(rel_err(j(x, INF), jr) < 1e-7, "{name} lam={lam}");
            let pr = p(x, b) + e * p(b, INF);
            assert!(rel_err(p(x, INF), pr) < 1e-7, "{name} lam={lam}");
        }
    }
}

#[test]
fn finite_barrier_approaches_infinite_barrier() {
    for (name, m) in models() {
        let k = kernel(&m, 0.1);
        let lam = 0.5 * k.phi();
        let q = |b: f64| Query::new(1.0, b, 0.1, lam, 1.0);
        let inf = joint_laplace_inf_b(&k, &q(INF)).unwrap().value;
        let mut prev = 0.0;
        for b in [10.0, 20.0, 40.0] {
            let v = joint_laplace(&k, &q(b)).unwrap().value;
            assert!(v >= prev, "{name} b={b}");
            prev = v;
        }
        assert!(rel_err(prev, inf) < 1e-4, "{name}: {prev} vs {inf}");
    }
}

#[test]
fn finite_barrier_potential_approaches_infinite_barrier() {
    // the gap is exit_b(x) P_inf(b), of order exp(-(Phi - lam) b)
    for (name, m) in models() {
        let k = kernel(&m, 0.5);
        for lam in [0.0, 0.25 * k.phi()] {
            let q = |b: f64| Query::new(1.0, b, 0.5, lam, 1.0);
            let pinf = potential_laplace_inf_b(&k, &q(INF)).unwrap().value;
            let mut prev = 0.0;
            for b in [10.0, 20.0, 40.0] {
                let v = potential_laplace(&k, &q(b)).unwrap().value;
                assert!(v >= prev && v <= pinf, "{name} b={b}");
                prev = v;
            }
            assert!(rel_err(prev, pinf) < 1e-4, "{name} lam={lam}: {prev} vs {pinf}");
        }
    }
}

#[test]
fn infinite_potential_diverges_beyond_phi() {
    for (_, m) in models() {
        let k = kernel(&m, 0.1);
        for lam in [k.phi(), k.phi() + 0.5] {
            let v = potential_laplace_inf_b(&k, &Query::new(1.0, INF, 0.1, lam, 1.0)).unwrap();
            assert_eq!(v.value, INF);
        }
    }
}

#[test]
fn ruin_probability_is_joint_transform_without_discount() {
    for (name, m) in models() {
        let k0 = kernel(&m, 0.0);
        let k1 = kernel(&m, 0.1);
        let mut prev = 1.0;
        for x in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let p = ruin_probability(&k1, x, 1.0).unwrap();
            assert!(p.flags.is_empty());
            let j = joint_laplace_inf_b(&k0, &Query::new(x, INF, 0.0, 0.0, 1.0)).unwrap().value;
            assert!((p.value - j).abs() < 1e-8, "{name} x={x}: {} vs {j}", p.value);
            assert!(p.value < prev && p.value > 0.0, "{name} x={x}");
            prev = p.value;
        }
        assert!(ruin_probability(&k0, 60.0, 1.0).unwrap().value < 1e-3, "{name}");
    }
}

#[test]
fn ruin_is_certain_without_net_profit() {
    let m = Model::brownian(-0.5, 1.0).unwrap();
    let k = kernel(&m, 0.1);
    let p = ruin_probability(&k, 2.0, 1.0).unwrap();
    assert_eq!(p.value, 1.0);
    assert!(p.has(Flag::NetProfitViolation));
}

#[test]
fn rejects_bad_queries() {
    let k = kernel(&cl(), 0.1);
    let bad = [
        Query::new(1.0, 3.0, 0.1, 0.0, 0.0),
        Query::new(1.0, 3.0, 0.1, -0.1, 1.0),
        Query::new(4.0, 3.0, 0.1, 0.0, 1.0),
        Query::new(f64::NAN, 3.0, 0.1, 0.0, 1.0),
    ];
    for query in bad {
        assert!(matches!(joint_laplace(&k, &query), Err(Error::DomainError(_))), "{query:?}");
    }
    let wrong_q = Query::new(1.0, 3.0, 0.2, 0.0, 1.0);
    assert!(matches!(joint_laplace(&k, &wrong_q), Err(Error::PreconditionViolation(_))));
    let inf = Query::new(1.0, INF, 0.1, 0.0, 1.0);
    assert!(matches!(exit_laplace(&k, &inf), Err(Error::DomainError(_))));
    assert!(matches!(potential_density_pos(&k, &inf, 1.0), Err(Error::DomainError(_))));
    let ok = Query::new(1.0, 3.0, 0.1, 0.0, 1.0);
    assert!(matches!(potential_density_pos(&k, &ok, -1.0), Err(Error::DomainError(_))));
    assert!(matches!(ruin_probability(&k, 1.0, -1.0), Err(Error::DomainError(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transforms_stay_in_range(x in -1.0f64..3.0, gap in 0.0f64..3.0, lam in 0.0f64..1.0, r in 0.2f64..2.0, use_bm in any::<bool>()) {
        let m = if use_bm { bm() } else { cl() };
        let k = kernel(&m, 0.1);
        let query = Query::new(x, x + gap, 0.1, lam, r);
        let j = joint_laplace(&k, &query).unwrap();
        let e = exit_laplace(&k, &query).unwrap();
        let p = potential_laplace(&k, &query).unwrap();
        prop_assert!(!j.has(Flag::OutOfRange) && !e.has(Flag::OutOfRange) && !p.has(Flag::OutOfRange));
        prop_assert!(j.value >= -1e-10 && p.value >= -1e-10);
    }
}

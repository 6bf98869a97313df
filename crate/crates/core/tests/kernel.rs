mod common;

use common::{bm, brownian_w, cl, cl_w0, gauss, kernel, models, normal_pdf, rel_err};
use parisian_core::{Error, JumpSpec, Model};
use proptest::prelude::*;

const GRID_Q: [f64; 3] = [0.0, 0.05, 0.1];
const GRID_R: [f64; 3] = [0.5, 1.0, 2.0];

#[test]
fn kernel_at_origin_is_exponential() {
    for (name, m) in models() {
        for q in GRID_Q {
            let k = kernel(&m, q);
            for r in GRID_R {
                let v = k.lambda_q(0.0, r).unwrap();
                assert!(rel_err(v, (q * r).exp()) < 1e-6, "{name} q={q} r={r}: {v}");
            }
        }
    }
}

#[test]
fn kernel_at_origin_for_other_claim_laws() {
    let ms = [
        Model::new(2.0, 0.0, JumpSpec::Deterministic { rate: 1.0, size: 0.5 }).unwrap(),
        Model::new(0.8, 0.6, JumpSpec::Erlang { rate: 1.2, shape: 2, alpha: 2.0 }).unwrap(),
        Model::new(2.0, 0.0, JumpSpec::Erlang { rate: 1.0, shape: 3, alpha: 2.0 }).unwrap(),
    ];
    for m in ms {
        let k = kernel(&m, 0.1);
        for r in [0.5, 1.5] {
            let v = k.lambda_q(0.0, r).unwrap();
            assert!(rel_err(v, (0.1 * r).exp()) < 1e-6, "{m:?} r={r}: {v}");
        }
    }
}

#[test]
fn rejects_nonpositive_delay() {
    let k = kernel(&cl(), 0.1);
    assert!(matches!(k.lambda_q(1.0, 0.0), Err(Error::DomainError(_))));
    assert!(matches!(k.lambda_q(1.0, -1.0), Err(Error::DomainError(_))));
}

#[test]
fn exponential_moment_of_brownian_motion() {
    let m = bm();
    for q in [0.0, 0.1, 0.5] {
        let k = kernel(&m, q);
        let phi = k.phi();
        for r in [0.5, 1.0, 2.0] {
            let top = r + phi * r + 14.0 * r.sqrt();
            let want = gauss(|z| (phi * z).exp() * z / r * normal_pdf(z, r, r), 0.0, top, 200);
            let got = k.lambda_exp_moment(r).unwrap();
            assert!(rel_err(got, want) < 1e-9, "q={q} r={r}: {got} vs {want}");
        }
    }
}

/// `int_0^r exp(-psi(lam) s) Lambda(x, s) ds` by a tensor Gauss rule with
/// `s = u^2` outside and the Gaussian kernel inside.
fn brownian_time_integral(q: f64, x: f64, r: f64, lam: f64) -> f64 {
    let psi = lam + 0.5 * lam * lam;
    gauss(
        |u| {
            let s = u * u;
            let top = s + 14.0 * s.sqrt();
            let inner = gauss(|z| brownian_w(1.0, 1.0, q, x + z) * z / s * normal_pdf(z, s, s), 0.0, top, 30);
            2.0 * u * (-psi * s).exp() * inner
        },
        0.0,
        r.sqrt(),
        40,
    )
}

#[test]
fn time_integral_against_tensor_quadrature() {
    let m = bm();
    for (q, x, r, lam) in [(0.1, 1.0, 1.0, 0.0), (0.05, 0.5, 2.0, 0.3), (0.0, 2.0, 0.5, 0.5), (0.1, -0.5, 1.0, 0.2)] {
        let k = kernel(&m, q);
        let got = k.lambda_time_integral(x, r, lam).unwrap();
        let want = brownian_time_integral(q, x, r, lam);
        assert!(rel_err(got, want) < 1e-5, "q={q} x={x} r={r} lam={lam}: {got} vs {want}");
    }
}

#[test]
fn long_delay_limit_without_discounting() {
    // W^(0)(y) -> 1/psi'(0) and E[X_r; X_r > 0] / r -> psi'(0)
    for (name, m) in models() {
        let k = kernel(&m, 0.0);
        for x in [0.0, 1.0, 3.0] {
            let v = k.lambda_q(x, 200.0).unwrap();
            assert!((v - 1.0).abs() < 1e-3, "{name} x={x}: {v}");
        }
    }
}

#[test]
fn short_delay_limit_without_gaussian_part() {
    // only the no-claim atom survives: Lambda(x, r) -> c W(x)
    let k = kernel(&cl(), 0.0);
    for x in [0.0, 0.5, 2.0] {
        let v = k.lambda_q(x, 1e-5).unwrap();
        assert!(rel_err(v, 1.5 * cl_w0(x)) < 1e-4, "x={x}: {v}");
    }
}

#[test]
fn kendall_transform_identity() {
    let points = [(0.0, 0.5, 0.0), (0.5, 1.0, 0.1), (1.0, 0.3, 0.05), (2.0, 2.0, 0.1), (3.0, 0.7, 0.0), (0.25, 4.0, 0.05)];
    for (name, m) in models() {
        for (x, theta, q) in points {
            let res = kernel(&m, q).kendall_transform_check(x, theta).unwrap();
            assert!(res.abs() < 1e-5, "{name} x={x} theta={theta} q={q}: {res}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nondecreasing_in_x(x in -2.0f64..4.0, dx in 0.01f64..1.0, r in 0.2f64..2.0, use_bm in any::<bool>()) {
        let m = if use_bm { bm() } else { cl() };
        let k = kernel(&m, 0.1);
        prop_assert!(k.lambda_q(x + dx, r).unwrap() >= k.lambda_q(x, r).unwrap() * (1.0 - 1e-9));
    }
}

//! Invariant residuals that need no simulation.

use parisian_core::parisian::{exit_laplace, joint_laplace, potential_density_pos, strong_markov_residual};
use parisian_core::Query;

use crate::commands::setup;
use crate::config::RunConfig;
use crate::output::{Cell, Table};
use crate::{CliResult, Report};

pub const KENDALL_POINTS: [(f64, f64, f64); 6] = [
    (0.0, 0.5, 0.0),
    (0.5, 1.0, 0.1),
    (1.0, 0.3, 0.05),
    (2.0, 2.0, 0.1),
    (3.0, 0.7, 0.0),
    (0.25, 4.0, 0.05),
];

struct Check {
    name: &'static str,
    q: f64,
    x: Option<f64>,
    r: Option<f64>,
    param: Option<f64>,
    residual: f64,
    tol: f64,
}

fn opt(v: Option<f64>) -> Cell {
    v.map_or(Cell::from(""), Cell::from)
}

pub fn selftest(cfg: &RunConfig) -> CliResult<Report> {
    let s = setup(cfg)?;
    let mut checks = Vec::new();
    let mut push = |name, q, x, r, param, residual: f64, tol| {
        checks.push(Check {
            name,
            q,
            x,
            r,
            param,
            residual,
            tol,
        })
    };
    let ks = s.kernels(&[0.0, 0.05, 0.1])?;
    for k in &ks {
        let q = k.q();
        for r in [0.5, 1.0, 2.0] {
            let want = (q * r).exp();
            let rel = (k.lambda_q(0.0, r)? - want).abs() / want;
            push("lambda-at-zero", q, Some(0.0), Some(r), None, rel, 1e-6);
        }
    }
    for k in [&ks[0], &ks[2]] {
        for shift in [0.5, 2.0] {
            let lam = k.phi() + shift;
            let res = k.scale().laplace_identity_residual(lam)?;
            push("scale-laplace", k.q(), None, None, Some(lam), res.abs(), 1e-6);
        }
    }
    for (x, theta, q) in KENDALL_POINTS {
        let k = ks.iter().find(|k| k.q() == q).unwrap();
        let res = k.kendall_transform_check(x, theta)?;
        push("kendall", q, Some(x), None, Some(theta), res.abs(), 1e-5);
    }
    let k = &ks[2];
    let (q, phi) = (k.q(), k.phi());
    let e = exit_laplace(k, &Query::new(2.0, 2.0, q, 0.0, 1.0))?.value;
    push("exit-at-barrier", q, Some(2.0), Some(1.0), None, (e - 1.0).abs(), 0.0);
    let (x, b, r) = (1.0, 3.0, 1.0);
    let j = joint_laplace(k, &Query::new(x, b, q, phi, r))?.value;
    let rho = k.lambda_q(x, r)? / k.lambda_q(b, r)?;
    let want = (phi * x).exp() - rho * (phi * b).exp();
    push("joint-at-phi", q, Some(x), Some(r), Some(phi), (j - want).abs() / want.abs().max(1.0), 1e-8);
    let d = potential_density_pos(k, &Query::new(b, b, q, 0.0, r), 1.0)?.value;
    push("density-at-barrier", q, Some(b), Some(r), None, d.abs(), 0.0);
    for lam in [0.0, 0.3] {
        let res = strong_markov_residual(k, &Query::new(x, b, q, lam, r))?;
        push("strong-markov", q, Some(x), Some(r), Some(lam), res.abs(), 1e-6);
    }

    let meta = s.metadata("selftest", cfg);
    let cols = vec!["check", "q", "x", "r", "param", "residual", "tolerance", "pass"];
    let mut table = Table::new(meta, cols);
    let mut ok = true;
    for c in checks {
        let pass = c.residual <= c.tol;
        ok &= pass;
        table.push(vec![
            c.name.into(),
            c.q.into(),
            opt(c.x),
            opt(c.r),
            opt(c.param),
            c.residual.into(),
            c.tol.into(),
            pass.into(),
        ]);
    }
    Ok(Report { table, ok })
}

mod common;

use common::{bm, cl, kernel};
use parisian_core::mc::{simulate_cl_exact, simulate_diffusive, Estimand, SimConfig};
use parisian_core::parisian::{exit_laplace, ruin_probability};
use parisian_core::{Error, Model, Query};

const INF: f64 = f64::INFINITY;

fn cl_config(n: u64) -> SimConfig {
    let mut cfg = SimConfig::new(cl(), 1.0, INF, 1.0);
    cfg.n_paths = n;
    cfg
}

#[test]
fn exact_simulation_is_reproducible_across_thread_counts() {
    let cfg = cl_config(5_000);
    let est = [Estimand::Ruin, Estimand::ParisianJoint { q: 0.1, lam: 0.5 }];
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| simulate_cl_exact(&cfg, &est).unwrap())
    };
    let a = run(1);
    let b = run(3);
    for (u, v) in a.iter().zip(&b) {
        assert_eq!(u.mean.to_bits(), v.mean.to_bits());
        assert_eq!(u.std_error.to_bits(), v.std_error.to_bits());
    }
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(simulate_cl_exact(&other, &est).unwrap()[0].mean, a[0].mean);
}

#[test]
fn diffusive_simulation_is_reproducible_across_thread_counts() {
    let mut cfg = SimConfig::new(bm(), 1.0, 3.0, 0.5);
    cfg.n_paths = 1_500;
    let est = [Estimand::ExitBeforeRuin { q: 0.1 }];
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| simulate_diffusive(&cfg, &est).unwrap())
    };
    let (a, b) = (run(1), run(2));
    assert_eq!(a.fine[0].mean.to_bits(), b.fine[0].mean.to_bits());
    assert_eq!(a.coarse[0].mean.to_bits(), b.coarse[0].mean.to_bits());
}

#[test]
fn start_at_barrier_exits_immediately() {
    let mut cfg = SimConfig::new(cl(), 2.0, 2.0, 1.0);
    cfg.n_paths = 100;
    let e = simulate_cl_exact(&cfg, &[Estimand::ExitBeforeRuin { q: 0.1 }]).unwrap();
    assert_eq!(e[0].mean, 1.0);
    assert_eq!(e[0].std_error, 0.0);
    cfg.model = bm();
    let e = simulate_diffusive(&cfg, &[Estimand::ExitBeforeRuin { q: 0.1 }]).unwrap();
    assert_eq!(e.fine[0].mean, 1.0);
}

#[test]
fn delay_beyond_horizon_never_ruins() {
    let mut cfg = cl_config(500);
    cfg.x = 0.0;
    cfg.r = 500.0;
    let e = simulate_cl_exact(&cfg, &[Estimand::Ruin]).unwrap();
    assert_eq!(e[0].mean, 0.0);
}

#[test]
fn exact_ruin_frequency_matches_formula() {
    let cfg = cl_config(100_000);
    let e = simulate_cl_exact(&cfg, &[Estimand::Ruin]).unwrap();
    let want = ruin_probability(&kernel(&cl(), 0.0), 1.0, 1.0).unwrap().value;
    let z = e[0].z_score(want);
    assert!(z.abs() < 3.0, "{} vs {want}: z = {z}", e[0].mean);
    assert_eq!(e[0].n_censored, 0);
}

#[test]
fn short_delay_exit_approaches_classical_two_sided_exit() {
    let (x, b, r) = (0.5, 1.0, 1e-3);
    let mut cfg = SimConfig::new(bm(), x, b, r);
    cfg.n_paths = 1_000;
    let e = simulate_diffusive(&cfg, &[Estimand::ExitBeforeRuin { q: 0.0 }]).unwrap();
    let k = kernel(&bm(), 0.0);
    let want = exit_laplace(&k, &Query::new(x, b, 0.0, 0.0, r)).unwrap().value;
    let sf = k.scale();
    let classical = sf.w_q(x).unwrap() / sf.w_q(b).unwrap();
    assert!((want - classical).abs() < 2.0 * r.sqrt(), "{want} vs {classical}");
    let z = e.fine[0].z_score(want);
    assert!(z.abs() < 3.0, "{} vs {want}: z = {z}", e.fine[0].mean);
}

#[test]
fn strong_negative_drift_ruins_almost_surely() {
    let m = Model::brownian(-3.0, 1.0).unwrap();
    let mut cfg = SimConfig::new(m, 0.1, INF, 0.5);
    cfg.horizon = 50.0;
    cfg.n_paths = 2_000;
    let e = simulate_diffusive(&cfg, &[Estimand::Ruin]).unwrap();
    assert!(e.fine[0].mean > 0.95, "{}", e.fine[0].mean);
}

#[test]
fn grid_levels_agree_within_noise() {
    let mut cfg = SimConfig::new(bm(), 1.0, 3.0, 0.5);
    cfg.n_paths = 5_000;
    let est = [Estimand::ExitBeforeRuin { q: 0.1 }, Estimand::PotentialLaplace { q: 0.1, lam: 0.3 }];
    let e = simulate_diffusive(&cfg, &est).unwrap();
    for (c, f) in e.coarse.iter().zip(&e.fine) {
        let se = c.std_error.hypot(f.std_error);
        assert!((c.mean - f.mean).abs() < 2.0 * se, "{} vs {} (se {se})", c.mean, f.mean);
    }
}

#[test]
fn rejects_unsupported_configurations() {
    let mut cfg = SimConfig::new(bm(), 1.0, 3.0, 1.0);
    cfg.n_paths = 10;
    assert!(matches!(simulate_cl_exact(&cfg, &[Estimand::Ruin]), Err(Error::PreconditionViolation(_))));
    cfg.dt = 0.05;
    assert!(matches!(simulate_diffusive(&cfg, &[Estimand::Ruin]), Err(Error::GridTooCoarse { .. })));
    let mut c = cl_config(10);
    assert!(matches!(simulate_diffusive(&c, &[Estimand::Ruin]), Err(Error::PreconditionViolation(_))));
    let phi = kernel(&cl(), 0.1).phi();
    let est = [Estimand::PotentialLaplace { q: 0.1, lam: phi + 0.1 }];
    assert!(matches!(simulate_cl_exact(&c, &est), Err(Error::DomainError(_))));
    c.r = -1.0;
    assert!(matches!(simulate_cl_exact(&c, &[Estimand::Ruin]), Err(Error::DomainError(_))));
}

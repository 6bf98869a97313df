use parisian_core::mc::{simulate_cl_exact, simulate_diffusive, Estimand, SimConfig, SimEstimate};
use parisian_core::parisian::{
    exit_laplace, joint_laplace, potential_density_full, potential_density_pos, potential_laplace, ruin_probability,
};
use parisian_core::valuation::{value as valuation_value, ValuationSpec};
use parisian_core::{Flag, Kernel, Model, Query, Tolerances};
use rayon::prelude::*;

use crate::config::{mixture, Param, RunConfig};
use crate::output::{Cell, Metadata, Table};
use crate::{CliError, CliResult};

pub(crate) struct Setup {
    pub model: Model,
    pub tol: Tolerances,
    pub label: String,
}

pub(crate) fn setup(cfg: &RunConfig) -> CliResult<Setup> {
    Ok(Setup {
        model: cfg.model.build()?,
        tol: cfg.numeric.tolerances(),
        label: cfg.model.to_string(),
    })
}

impl Setup {
    pub fn metadata(&self, command: &str, cfg: &RunConfig) -> Metadata {
        Metadata::new(command, self.label.clone(), cfg.numeric)
    }

    pub fn kernel(&self, q: f64) -> CliResult<Kernel> {
        Ok(Kernel::new(&self.model, q, &self.tol)?)
    }

    pub fn kernels(&self, qs: &[f64]) -> CliResult<Vec<Kernel>> {
        qs.par_iter().map(|&q| self.kernel(q)).collect()
    }
}

pub(crate) fn flags_text(flags: &[Flag]) -> String {
    flags.iter().map(|f| format!("{f:?}")).collect::<Vec<_>>().join("|")
}

pub(crate) fn barrier(p: Param) -> CliResult<f64> {
    match p {
        Param::Value(v) => Ok(v),
        Param::Infinity => Ok(f64::INFINITY),
        Param::Phi => Err(CliError::Usage("`phi` is not a barrier level".into())),
    }
}

pub(crate) fn exponent(p: Param, phi: f64) -> CliResult<f64> {
    match p {
        Param::Value(v) => Ok(v),
        Param::Phi => Ok(phi),
        Param::Infinity => Err(CliError::Usage("`inf` is not an exponent".into())),
    }
}

fn plain_values(ps: &[Param], what: &str) -> CliResult<Vec<f64>> {
    ps.iter()
        .map(|&p| match p {
            Param::Value(v) => Ok(v),
            _ => Err(CliError::Usage(format!("{what} needs numeric values"))),
        })
        .collect()
}

fn rows<P: Sync, F>(points: &[P], f: F) -> CliResult<Vec<Vec<Cell>>>
where
    F: Fn(&P) -> CliResult<Vec<Cell>> + Sync + Send,
{
    points.par_iter().map(f).collect()
}

fn fill(mut table: Table, rows: Vec<Vec<Cell>>) -> Table {
    for r in rows {
        table.push(r);
    }
    table
}

pub fn psi(cfg: &RunConfig) -> CliResult<Table> {
    let s = setup(cfg)?;
    let lams = plain_values(&cfg.query.lam, "psi")?;
    let table = Table::new(s.metadata("psi", cfg), vec!["lam", "psi", "psi_prime"]);
    let rows = lams
        .iter()
        .map(|&l| vec![l.into(), s.model.psi(l).into(), s.model.psi_prime(l).into()])
        .collect();
    Ok(fill(table, rows))
}

pub fn phi(cfg: &RunConfig) -> CliResult<Table> {
    let s = setup(cfg)?;
    let table = Table::new(s.metadata("phi", cfg), vec!["q", "phi"]);
    let rows = rows(&cfg.query.q, |&q| Ok(vec![q.into(), s.model.phi(q, s.tol.root)?.into()]))?;
    Ok(fill(table, rows))
}

pub fn scale(cfg: &RunConfig, tilted: bool) -> CliResult<Table> {
    let s = setup(cfg)?;
    let ks = s.kernels(&cfg.query.q)?;
    let mut cols = vec!["q", "x", "w"];
    if tilted {
        cols.push("w_tilted");
    }
    cols.push("method");
    let table = Table::new(s.metadata("scale", cfg), cols);
    let points: Vec<(usize, f64)> = (0..ks.len()).flat_map(|i| cfg.query.x.iter().map(move |&x| (i, x))).collect();
    let rows = rows(&points, |&(i, x)| {
        let sf = ks[i].scale();
        let mut row = vec![ks[i].q().into(), x.into(), sf.w_q(x)?.into()];
        if tilted {
            row.push(sf.w_tilted(x)?.into());
        }
        row.push(format!("{:?}", sf.method()).into());
        Ok(row)
    })?;
    Ok(fill(table, rows))
}

pub fn lambda_kernel(cfg: &RunConfig) -> CliResult<Table> {
    let s = setup(cfg)?;
    let ks = s.kernels(&cfg.query.q)?;
    let table = Table::new(s.metadata("lambda-kernel", cfg), vec!["q", "x", "r", "lambda"]);
    let mut points = Vec::new();
    for i in 0..ks.len() {
        for &r in &cfg.query.r {
            for &x in &cfg.query.x {
                points.push((i, r, x));
            }
        }
    }
    let rows = rows(&points, |&(i, r, x)| {
        Ok(vec![ks[i].q().into(), x.into(), r.into(), ks[i].lambda_q(x, r)?.into()])
    })?;
    Ok(fill(table, rows))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Identity {
    Joint,
    Exit,
    Potential,
    Density { full: bool },
    RuinProb,
}

/// Every `(kernel index, query)` of the grid with `x <= b`, in the order
/// q, r, x, b, lam.
pub(crate) fn grid_queries(cfg: &RunConfig, ks: &[Kernel], with_lam: bool) -> CliResult<Vec<(usize, Query)>> {
    let g = &cfg.query;
    let lams = if with_lam { g.lam.clone() } else { vec![Param::Value(0.0)] };
    let mut out = Vec::new();
    for (i, k) in ks.iter().enumerate() {
        for &r in &g.r {
            for &x in &g.x {
                for &b in &g.b {
                    let b = barrier(b)?;
                    if x > b {
                        continue;
                    }
                    for &lam in &lams {
                        let lam = exponent(lam, k.phi())?;
                        out.push((i, Query::new(x, b, k.q(), lam, r)));
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn parisian(cfg: &RunConfig, which: Identity) -> CliResult<Table> {
    let s = setup(cfg)?;
    if which == Identity::RuinProb {
        let k = s.kernel(0.0)?;
        let table = Table::new(s.metadata("parisian ruin-prob", cfg), vec!["x", "r", "ruin_probability", "flags"]);
        let mut points = Vec::new();
        for &r in &cfg.query.r {
            for &x in &cfg.query.x {
                points.push((x, r));
            }
        }
        let rows = rows(&points, |&(x, r)| {
            let e = ruin_probability(&k, x, r)?;
            Ok(vec![x.into(), r.into(), e.value.into(), flags_text(&e.flags).into()])
        })?;
        return Ok(fill(table, rows));
    }
    let ks = s.kernels(&cfg.query.q)?;
    let with_lam = matches!(which, Identity::Joint | Identity::Potential);
    let queries = grid_queries(cfg, &ks, with_lam)?;
    match which {
        Identity::Density { full } => {
            let name = if full { "parisian density --full" } else { "parisian density" };
            let table = Table::new(s.metadata(name, cfg), vec!["x", "b", "q", "r", "y", "density", "flags"]);
            let points: Vec<(usize, Query, f64)> =
                queries.iter().flat_map(|&(i, qy)| cfg.query.y.iter().map(move |&y| (i, qy, y))).collect();
            let rows = rows(&points, |&(i, qy, y)| {
                let e = if full {
                    potential_density_full(&ks[i], &qy, y)?
                } else {
                    potential_density_pos(&ks[i], &qy, y)?
                };
                Ok(vec![
                    qy.x.into(),
                    qy.b.into(),
                    qy.q.into(),
                    qy.r.into(),
                    y.into(),
                    e.value.into(),
                    flags_text(&e.flags).into(),
                ])
            })?;
            Ok(fill(table, rows))
        }
        Identity::Exit => {
            let table = Table::new(s.metadata("parisian exit", cfg), vec!["x", "b", "q", "r", "value", "flags"]);
            let rows = rows(&queries, |&(i, qy)| {
                let e = exit_laplace(&ks[i], &qy)?;
                Ok(vec![
                    qy.x.into(),
                    qy.b.into(),
                    qy.q.into(),
                    qy.r.into(),
                    e.value.into(),
                    flags_text(&e.flags).into(),
                ])
            })?;
            Ok(fill(table, rows))
        }
        _ => {
            let joint = which == Identity::Joint;
            let name = if joint { "parisian joint" } else { "parisian potential" };
            let table = Table::new(s.metadata(name, cfg), vec!["x", "b", "q", "lam", "r", "value", "flags"]);
            let rows = rows(&queries, |&(i, qy)| {
                let e = if joint {
                    joint_laplace(&ks[i], &qy)?
                } else {
                    potential_laplace(&ks[i], &qy)?
                };
                Ok(vec![
                    qy.x.into(),
                    qy.b.into(),
                    qy.q.into(),
                    qy.lam.into(),
                    qy.r.into(),
                    e.value.into(),
                    flags_text(&e.flags).into(),
                ])
            })?;
            Ok(fill(table, rows))
        }
    }
}

pub fn value(cfg: &RunConfig) -> CliResult<Table> {
    let s = setup(cfg)?;
    let v = cfg.valuation.clone().unwrap_or_default();
    let g = mixture(&v.g)?;
    let f_below = mixture(&v.f_below)?;
    let ks = s.kernels(&cfg.query.q)?;
    let queries = grid_queries(cfg, &ks, false)?;
    let table = Table::new(s.metadata("value", cfg), vec!["x", "b", "q", "r", "value", "flags"]);
    let rows = rows(&queries, |&(i, query)| {
        let spec = ValuationSpec {
            g: g.clone(),
            f_below: f_below.clone(),
            f_at_b: v.f_at_b,
            query,
        };
        let e = valuation_value(&ks[i], &spec)?;
        Ok(vec![
            query.x.into(),
            query.b.into(),
            query.q.into(),
            query.r.into(),
            e.value.into(),
            flags_text(&e.flags).into(),
        ])
    })?;
    Ok(fill(table, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EstimandKind {
    Joint,
    Exit,
    Potential,
    Occupation,
    Ruin,
}

/// Estimates from one simulation: exact, or the `dt` and `dt/2` levels of
/// the diffusive scheme with their extrapolation.
pub(crate) struct SimRun {
    pub dt: Option<f64>,
    pub main: Vec<SimEstimate>,
    pub coarse: Option<Vec<SimEstimate>>,
    pub extrapolated: Option<Vec<SimEstimate>>,
}

pub(crate) fn sim_config(s: &Setup, cfg: &RunConfig, x: f64, b: f64, r: f64) -> SimConfig {
    let mut c = SimConfig::new(s.model, x, b, r);
    c.n_paths = cfg.sim.n_paths;
    c.seed = cfg.sim.seed;
    c.horizon = cfg.sim.horizon;
    if let Some(dt) = cfg.numeric.dt {
        c.dt = dt;
    }
    if c.horizon < 10.0 * r {
        eprintln!("warning: horizon {} is shorter than 10 r = {}", c.horizon, 10.0 * r);
    }
    c
}

pub(crate) fn run_sim(c: &SimConfig, est: &[Estimand]) -> CliResult<SimRun> {
    if c.model.has_gaussian() {
        let d = simulate_diffusive(c, est)?;
        Ok(SimRun {
            dt: Some(d.dt),
            main: d.fine,
            coarse: Some(d.coarse),
            extrapolated: Some(d.extrapolated),
        })
    } else {
        Ok(SimRun {
            dt: None,
            main: simulate_cl_exact(c, est)?,
            coarse: None,
            extrapolated: None,
        })
    }
}

pub fn simulate(cfg: &RunConfig, kinds: &[EstimandKind], bin_width: f64) -> CliResult<Table> {
    let s = setup(cfg)?;
    let g = &cfg.query;
    let mut qs_phi = Vec::new();
    for &q in &g.q {
        qs_phi.push((q, s.model.phi(q, s.tol.root)?));
    }
    let meta = s.metadata("simulate", cfg).with_sim(cfg.sim.seed, cfg.sim.n_paths);
    let cols = vec![
        "x", "b", "r", "estimand", "scheme", "dt", "mean", "std_error", "n_paths", "n_censored", "seed",
    ];
    let mut table = Table::new(meta, cols);
    for &r in &g.r {
        for &x in &g.x {
            for &b in &g.b {
                let b = barrier(b)?;
                if x > b {
                    continue;
                }
                let mut est = Vec::new();
                for &kind in kinds {
                    match kind {
                        EstimandKind::Ruin => est.push(Estimand::Ruin),
                        EstimandKind::Exit => {
                            for &(q, _) in &qs_phi {
                                est.push(Estimand::ExitBeforeRuin { q });
                            }
                        }
                        EstimandKind::Occupation => {
                            for &(q, _) in &qs_phi {
                                for &y in &g.y {
                                    let (lo, hi) = (y - 0.5 * bin_width, y + 0.5 * bin_width);
                                    est.push(Estimand::Occupation { q, lo, hi });
                                }
                            }
                        }
                        EstimandKind::Joint | EstimandKind::Potential => {
                            for &(q, phi) in &qs_phi {
                                for &lam in &g.lam {
                                    let lam = exponent(lam, phi)?;
                                    est.push(if kind == EstimandKind::Joint {
                                        Estimand::ParisianJoint { q, lam }
                                    } else {
                                        Estimand::PotentialLaplace { q, lam }
                                    });
                                }
                            }
                        }
                    }
                }
                let c = sim_config(&s, cfg, x, b, r);
                let run = run_sim(&c, &est)?;
                let dt = run.dt.map_or(Cell::from(""), Cell::from);
                let mut push = |scheme: &str, dt: Cell, list: &[SimEstimate]| {
                    for (e, v) in est.iter().zip(list) {
                        table.push(vec![
                            x.into(),
                            b.into(),
                            r.into(),
                            e.label().into(),
                            scheme.into(),
                            dt.clone(),
                            v.mean.into(),
                            v.std_error.into(),
                            v.n_paths.into(),
                            v.n_censored.into(),
                            v.seed.into(),
                        ]);
                    }
                };
                match (&run.coarse, &run.extrapolated, run.dt) {
                    (Some(coarse), Some(ex), Some(h)) => {
                        push("dt", Cell::from(h), coarse);
                        push("dt/2", Cell::from(0.5 * h), &run.main);
                        push("richardson", dt, ex);
                    }
                    _ => push("exact", dt, &run.main),
                }
            }
        }
    }
    Ok(table)
}

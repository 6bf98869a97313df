//! Formula against Monte Carlo on a query grid.
//!
//! Monte Carlo estimands are raw path functionals, so formula values are
//! mapped onto the same scale before comparison: the joint and potential
//! transforms carry `exp((psi(lam) - q) r)`, the whole-line density carries
//! `exp(-q r)`, densities are averaged over the simulated bin.

use parisian_core::mc::{Estimand, SimEstimate};
use parisian_core::parisian::{
    exit_laplace, joint_laplace, potential_density_full, potential_density_pos_average, potential_laplace, ruin_probability,
};
use parisian_core::quadrature::{breakpoints, integrate_with_breaks, QuadConfig};
use parisian_core::valuation::{value, ValuationSpec};
use parisian_core::{Kernel, Mixture, Query};
use rayon::prelude::*;

use crate::commands::{barrier, exponent, run_sim, setup, sim_config, Setup};
use crate::config::RunConfig;
use crate::output::{Cell, Table};
use crate::{CliResult, Report};

pub const Z_LIMIT: f64 = 3.0;
pub const HALVING_LIMIT: f64 = 2.0;
pub const BIN_WIDTH: f64 = 0.1;
/// Bin centres for the whole-line density, below the ruin level.
pub const NEGATIVE_BINS: [f64; 2] = [-0.5, -1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Target {
    ParisianJoint,
    ParisianExit,
    ParisianPotential,
    RuinProb,
    DensityPos,
    DensityFull,
    ValuePenalty,
    All,
}

impl Target {
    pub const EACH: [Target; 7] = [
        Target::ParisianJoint,
        Target::ParisianExit,
        Target::ParisianPotential,
        Target::RuinProb,
        Target::DensityPos,
        Target::DensityFull,
        Target::ValuePenalty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::ParisianJoint => "parisian-joint",
            Target::ParisianExit => "parisian-exit",
            Target::ParisianPotential => "parisian-potential",
            Target::RuinProb => "ruin-prob",
            Target::DensityPos => "density-pos",
            Target::DensityFull => "density-full",
            Target::ValuePenalty => "value-penalty",
            Target::All => "all",
        }
    }

    fn wants(self, t: Target) -> bool {
        self == Target::All || self == t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GridChoice {
    /// Built-in acceptance grid.
    Standard,
    /// The config's query block.
    Config,
}

pub const COLUMNS: [&str; 18] = [
    "model",
    "target",
    "x",
    "b",
    "q",
    "lam",
    "r",
    "y_lo",
    "y_hi",
    "formula",
    "mc_mean",
    "mc_se",
    "z_score",
    "mc_coarse",
    "coarse_se",
    "halving_z",
    "n_censored",
    "status",
];

#[derive(Debug, Clone, Copy)]
struct Row {
    target: Target,
    q: f64,
    lam: Option<f64>,
    bin: Option<(f64, f64)>,
    /// Kernel index and the unscaled query.
    kernel: usize,
    query: Query,
}

fn estimand(row: &Row) -> Estimand {
    let q = row.q;
    match row.target {
        Target::ParisianJoint => Estimand::ParisianJoint { q, lam: row.lam.unwrap() },
        Target::ValuePenalty => Estimand::ParisianJoint { q, lam: 0.0 },
        Target::ParisianPotential => Estimand::PotentialLaplace { q, lam: row.lam.unwrap() },
        Target::ParisianExit => Estimand::ExitBeforeRuin { q },
        Target::RuinProb => Estimand::Ruin,
        Target::DensityPos | Target::DensityFull => {
            let (lo, hi) = row.bin.unwrap();
            Estimand::Occupation { q, lo, hi }
        }
        Target::All => unreachable!(),
    }
}

fn bin_average(f: impl Fn(f64) -> f64, lo: f64, hi: f64, kinks: &[f64]) -> f64 {
    let cfg = QuadConfig::new(1e-13, 1e-10);
    integrate_with_breaks(f, &breakpoints(lo, hi, kinks), &cfg).value / (hi - lo)
}

fn density_bin(f: impl Fn(f64) -> parisian_core::Result<f64>, lo: f64, hi: f64, kinks: &[f64]) -> CliResult<f64> {
    let v = bin_average(|y| f(y).unwrap_or(f64::NAN), lo, hi, kinks);
    if v.is_nan() {
        for y in [lo, 0.5 * (lo + hi), hi] {
            f(y)?;
        }
    }
    Ok(v)
}

/// Formula value on the Monte Carlo scale; `+inf` marks a divergent transform.
fn formula(s: &Setup, ks: &[Kernel], k0: &Kernel, row: &Row) -> CliResult<f64> {
    let k = &ks[row.kernel];
    let qy = row.query;
    let reweight = |lam: f64| ((s.model.psi(lam) - row.q) * qy.r).exp();
    Ok(match row.target {
        Target::ParisianJoint => joint_laplace(k, &qy)?.value * reweight(qy.lam),
        Target::ParisianPotential => {
            let v = potential_laplace(k, &qy)?.value;
            if v.is_finite() {
                v * reweight(qy.lam)
            } else {
                v
            }
        }
        Target::ParisianExit => exit_laplace(k, &qy)?.value,
        Target::RuinProb => ruin_probability(k0, qy.x, qy.r)?.value,
        Target::ValuePenalty => {
            let spec = ValuationSpec {
                g: Mixture::zero(),
                f_below: Mixture::constant(1.0),
                f_at_b: 0.0,
                query: qy,
            };
            value(k, &spec)?.value
        }
        Target::DensityPos => {
            let (lo, hi) = row.bin.unwrap();
            potential_density_pos_average(k, &qy, lo, hi)?.value
        }
        Target::DensityFull => {
            let (lo, hi) = row.bin.unwrap();
            let v = density_bin(|y| potential_density_full(k, &qy, y).map(|e| e.value), lo, hi, &[qy.x, 0.0])?;
            v * (-row.q * qy.r).exp()
        }
        Target::All => unreachable!(),
    })
}

fn rows_for(cfg: &RunConfig, ks: &[Kernel], target: Target, x: f64, b: f64, r: f64) -> CliResult<Vec<Row>> {
    let g = &cfg.query;
    let mut out = Vec::new();
    let finite = b.is_finite();
    for (i, k) in ks.iter().enumerate() {
        let q = k.q();
        let base = Row {
            target,
            q,
            lam: None,
            bin: None,
            kernel: i,
            query: Query::new(x, b, q, 0.0, r),
        };
        let bins = |centres: &[f64]| -> Vec<Row> {
            centres
                .iter()
                .map(|&y| Row {
                    bin: Some((y - 0.5 * BIN_WIDTH, y + 0.5 * BIN_WIDTH)),
                    ..base
                })
                .collect()
        };
        match target {
            Target::ParisianJoint | Target::ParisianPotential => {
                for &lam in &g.lam {
                    let lam = exponent(lam, k.phi())?;
                    out.push(Row {
                        lam: Some(lam),
                        query: Query::new(x, b, q, lam, r),
                        ..base
                    });
                }
            }
            Target::ParisianExit if finite => out.push(base),
            Target::DensityPos if finite => out.extend(bins(&g.y)),
            Target::DensityFull if finite => out.extend(bins(&NEGATIVE_BINS)),
            Target::ValuePenalty => out.push(base),
            Target::RuinProb if !finite && i == 0 => out.push(base),
            _ => {}
        }
    }
    Ok(out)
}

fn text_or(v: Option<f64>) -> Cell {
    v.map_or(Cell::from(""), Cell::from)
}

/// Runs the comparison; the report fails if any finite row has `|z| > 3`
/// or, for diffusive models, `dt`-halving drift of 2 combined standard errors.
pub fn compare(cfg: &RunConfig, target: Target) -> CliResult<Report> {
    let s = setup(cfg)?;
    let ks = s.kernels(&cfg.query.q)?;
    let k0 = s.kernel(0.0)?;
    let meta = s.metadata(&format!("compare {}", target.name()), cfg).with_sim(cfg.sim.seed, cfg.sim.n_paths);
    let mut table = Table::new(meta, COLUMNS.to_vec());
    let mut ok = true;
    for &r in &cfg.query.r {
        for &x in &cfg.query.x {
            for &b in &cfg.query.b {
                let b = barrier(b)?;
                if x > b {
                    continue;
                }
                let mut rows = Vec::new();
                for t in Target::EACH {
                    if target.wants(t) {
                        rows.extend(rows_for(cfg, &ks, t, x, b, r)?);
                    }
                }
                if rows.is_empty() {
                    continue;
                }
                let formulas: Vec<f64> = rows.par_iter().map(|row| formula(&s, &ks, &k0, row)).collect::<CliResult<_>>()?;
                let mut est: Vec<Estimand> = Vec::new();
                let slots: Vec<Option<usize>> = rows
                    .iter()
                    .zip(&formulas)
                    .map(|(row, f)| {
                        if !f.is_finite() {
                            return None;
                        }
                        let e = estimand(row);
                        Some(est.iter().position(|o| *o == e).unwrap_or_else(|| {
                            est.push(e);
                            est.len() - 1
                        }))
                    })
                    .collect();
                let run = run_sim(&sim_config(&s, cfg, x, b, r), &est)?;
                for ((row, &f), slot) in rows.iter().zip(&formulas).zip(slots) {
                    let mut cells: Vec<Cell> = vec![
                        s.label.clone().into(),
                        row.target.name().into(),
                        x.into(),
                        b.into(),
                        row.q.into(),
                        text_or(row.lam),
                        r.into(),
                        text_or(row.bin.map(|b| b.0)),
                        text_or(row.bin.map(|b| b.1)),
                        f.into(),
                    ];
                    let Some(i) = slot else {
                        cells.extend(std::iter::repeat_n(Cell::from(""), 7));
                        cells.push("sentinel".into());
                        table.push(cells);
                        continue;
                    };
                    let m: SimEstimate = run.main[i];
                    let z = m.z_score(f);
                    let mut pass = z.abs() <= Z_LIMIT;
                    cells.extend([m.mean.into(), m.std_error.into(), z.into()]);
                    match &run.coarse {
                        Some(coarse) => {
                            let c = coarse[i];
                            let se = c.std_error.hypot(m.std_error);
                            let h = if se > 0.0 { (c.mean - m.mean) / se } else { 0.0 };
                            pass &= h.abs() < HALVING_LIMIT;
                            cells.extend([c.mean.into(), c.std_error.into(), h.into()]);
                        }
                        None => cells.extend(std::iter::repeat_n(Cell::from(""), 3)),
                    }
                    cells.push(m.n_censored.into());
                    cells.push(if pass { "pass" } else { "fail" }.into());
                    ok &= pass;
                    table.push(cells);
                }
            }
        }
    }
    Ok(Report { table, ok })
}

//! Monte Carlo path simulation of Parisian ruin, used as an independent check
//! on the analytic layer. Double precision only.

mod diffusive;
mod exact;
mod marginal;
pub mod rng;

pub use diffusive::{simulate_diffusive, DiffusiveEstimates};
pub use exact::simulate_cl_exact;
pub use marginal::{estimate_marginal, EmpiricalLaw};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::levy::LevyModel;

/// Probability that a path started at the safe level is ever ruined.
pub const SAFE_LEVEL_EPS: f64 = 1e-9;

const CHUNK: u64 = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: LevyModel<f64>,
    pub x: f64,
    /// Upper barrier, may be `f64::INFINITY`.
    pub b: f64,
    pub r: f64,
    pub horizon: f64,
    pub n_paths: u64,
    pub seed: u64,
    /// Base grid step, diffusive models only.
    pub dt: f64,
}

impl SimConfig {
    pub fn new(model: LevyModel<f64>, x: f64, b: f64, r: f64) -> Self {
        SimConfig {
            model,
            x,
            b,
            r,
            horizon: 400.0,
            n_paths: 100_000,
            seed: 42,
            dt: r / 100.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::DomainError(format!("delay r must be positive, got {}", self.r)));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::DomainError(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.n_paths == 0 {
            return Err(Error::DomainError("n_paths must be positive".into()));
        }
        if !self.x.is_finite() || self.b.is_nan() || self.x > self.b {
            return Err(Error::DomainError(format!("need finite x <= b, got x={} b={}", self.x, self.b)));
        }
        Ok(())
    }

    /// Level above which Parisian ruin has probability below [`SAFE_LEVEL_EPS`]
    /// (Lundberg bound). `None` when the process does not drift upwards.
    pub fn safe_level(&self) -> Option<f64> {
        if self.b.is_finite() {
            return None;
        }
        let gamma = self.model.lundberg_exponent()?;
        Some((1.0 / SAFE_LEVEL_EPS).ln() / gamma)
    }
}

/// Functionals of the path killed at `T = tau_r ^ tau_b^+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimand {
    /// `E[exp(-q tau_r + lam X(tau_r)); tau_r < tau_b^+]`
    ParisianJoint { q: f64, lam: f64 },
    /// `E[exp(-q tau_b^+); tau_b^+ < tau_r]`
    ExitBeforeRuin { q: f64 },
    /// `E[int_0^T exp(-q t + lam X_t) dt]`
    PotentialLaplace { q: f64, lam: f64 },
    /// `E[int_0^T exp(-q t) 1{lo <= X_t < hi} dt] / (hi - lo)`
    Occupation { q: f64, lo: f64, hi: f64 },
    /// `P(tau_r < tau_b^+)`
    Ruin,
}

impl Estimand {
    pub fn label(&self) -> String {
        match *self {
            Estimand::ParisianJoint { q, lam } => format!("joint(q={q},lam={lam})"),
            Estimand::ExitBeforeRuin { q } => format!("exit(q={q})"),
            Estimand::PotentialLaplace { q, lam } => format!("potential(q={q},lam={lam})"),
            Estimand::Occupation { q, lo, hi } => format!("occupation(q={q},[{lo},{hi}))"),
            Estimand::Ruin => "ruin".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
    /// Paths that reached the horizon undecided.
    pub n_censored: u64,
    pub seed: u64,
}

impl SimEstimate {
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = reference - self.mean;
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(d)
        }
    }

    pub fn censored_fraction(&self) -> f64 {
        self.n_censored as f64 / self.n_paths as f64
    }
}

/// Estimand with the constants the simulators need precomputed.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Prepared {
    Joint { q: f64, lam: f64 },
    Exit { q: f64 },
    Potential { q: f64, lam: f64, tail: f64 },
    Occupation { q: f64, lo: f64, hi: f64 },
    Ruin,
}

pub(crate) fn prepare(cfg: &SimConfig, estimands: &[Estimand]) -> Result<Vec<Prepared>> {
    estimands
        .iter()
        .map(|e| {
            Ok(match *e {
                Estimand::ParisianJoint { q, lam } => {
                    check_q(q)?;
                    check_lam(lam)?;
                    Prepared::Joint { q, lam }
                }
                Estimand::ExitBeforeRuin { q } => {
                    check_q(q)?;
                    Prepared::Exit { q }
                }
                Estimand::PotentialLaplace { q, lam } => {
                    check_q(q)?;
                    check_lam(lam)?;
                    let gap = q - cfg.model.psi(lam);
                    if !cfg.b.is_finite() && !(gap > 0.0) {
                        return Err(Error::DomainError(format!(
                            "potential with lam={lam}, q={q} is infinite without a barrier"
                        )));
                    }
                    // Value of the unkilled potential per unit exp(lam x).
                    let tail = if gap > 0.0 { 1.0 / gap } else { 0.0 };
                    Prepared::Potential { q, lam, tail }
                }
                Estimand::Occupation { q, lo, hi } => {
                    check_q(q)?;
                    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                        return Err(Error::DomainError(format!("bad occupation bin [{lo}, {hi})")));
                    }
                    Prepared::Occupation { q, lo, hi }
                }
                Estimand::Ruin => Prepared::Ruin,
            })
        })
        .collect()
}

fn check_q(q: f64) -> Result<()> {
    if q >= 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("discount rate must be nonnegative, got {q}")))
    }
}

fn check_lam(lam: f64) -> Result<()> {
    if lam >= 0.0 && lam.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("exponent must be nonnegative, got {lam}")))
    }
}

/// How a path ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Outcome {
    Ruined { t: f64, level: f64 },
    Exited { t: f64 },
    /// Reached the safe level at time `t`, position `level`.
    Safe { t: f64, level: f64 },
    Censored,
}

/// Adds the terminal contributions of `outcome` to `out`.
pub(crate) fn settle(prep: &[Prepared], outcome: Outcome, out: &mut [f64]) {
    for (p, o) in prep.iter().zip(out.iter_mut()) {
        match (*p, outcome) {
            (Prepared::Joint { q, lam }, Outcome::Ruined { t, level }) => *o += (lam * level - q * t).exp(),
            (Prepared::Ruin, Outcome::Ruined { .. }) => *o += 1.0,
            (Prepared::Exit { q }, Outcome::Exited { t }) => *o += (-q * t).exp(),
            (Prepared::Potential { q, lam, tail }, Outcome::Safe { t, level }) => {
                *o += tail * (lam * level - q * t).exp()
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64 / n as f64);
        self.n = n;
    }

    fn estimate(&self, n_censored: u64, seed: u64) -> SimEstimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        SimEstimate {
            mean: self.mean,
            std_error: (var / self.n as f64).sqrt(),
            n_paths: self.n,
            n_censored,
            seed,
        }
    }
}

/// Runs `path(index, out)` for every path and reduces the per-path values
/// chunk by chunk in index order, so the result does not depend on the
/// number of threads. `path` returns `true` for censored paths.
pub(crate) fn run_paths<F>(cfg: &SimConfig, width: usize, path: F) -> Vec<SimEstimate>
where
    F: Fn(u64, &mut [f64]) -> bool + Sync,
{
    let n_chunks = cfg.n_paths.div_ceil(CHUNK);
    let partial: Vec<(Vec<Moments>, u64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Moments::default(); width];
            let mut buf = vec![0.0; width];
            let mut censored = 0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(cfg.n_paths) {
                buf.iter_mut().for_each(|v| *v = 0.0);
                if path(i, &mut buf) {
                    censored += 1;
                }
                for (a, &v) in acc.iter_mut().zip(&buf) {
                    a.push(v);
                }
            }
            (acc, censored)
        })
        .collect();
    let mut total = vec![Moments::default(); width];
    let mut censored = 0;
    for (acc, c) in &partial {
        for (t, a) in total.iter_mut().zip(acc) {
            t.merge(a);
        }
        censored += c;
    }
    total.iter().map(|m| m.estimate(censored, cfg.seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chan_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert_eq!(a.n, whole.n);
        assert!((a.mean - whole.mean).abs() < 1e-12);
        assert!((a.m2 - whole.m2).abs() < 1e-9 * whole.m2);
    }
}

use rand::Rng;
use rand_distr::{Exp1, Poisson, StandardNormal};
use rayon::prelude::*;

use super::rng::PathRng;
use crate::error::{Error, Result};
use crate::levy::{JumpSpec, LevyModel};

/// Exact draws of `X_t` started from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    /// Draws off the no-jump atom, sorted.
    pub samples: Vec<f64>,
    /// Location of the no-jump atom when `sigma = 0`.
    pub atom: Option<f64>,
    pub atom_count: u64,
    pub n: u64,
}

impl EmpiricalLaw {
    pub fn atom_frequency(&self) -> f64 {
        self.atom_count as f64 / self.n as f64
    }

    /// Counts per bin `[edges[i], edges[i+1])` of the continuous draws.
    pub fn histogram(&self, edges: &[f64]) -> Vec<u64> {
        edges
            .windows(2)
            .map(|w| {
                let a = self.samples.partition_point(|&x| x < w[0]);
                let b = self.samples.partition_point(|&x| x < w[1]);
                (b - a) as u64
            })
            .collect()
    }

    /// Kolmogorov-Smirnov distance of all draws (atom included) from `cdf`.
    pub fn ks_statistic(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let mut xs = self.samples.clone();
        if let Some(a) = self.atom {
            xs.extend(std::iter::repeat_n(a, self.atom_count as usize));
            xs.sort_by(f64::total_cmp);
        }
        let n = xs.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = cdf(x);
            d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
        }
        d
    }
}

pub fn estimate_marginal(model: &LevyModel<f64>, t: f64, n: u64, seed: u64) -> Result<EmpiricalLaw> {
    if !(t > 0.0 && t.is_finite()) || n == 0 {
        return Err(Error::DomainError(format!("need t > 0 and n > 0, got t={t}, n={n}")));
    }
    let jumps = model.jumps();
    let rate = jumps.rate();
    let count = if rate > 0.0 {
        Some(Poisson::new(rate * t).map_err(|e| Error::DomainError(e.to_string()))?)
    } else {
        None
    };
    let (mu, sigma) = (model.mu(), model.sigma());
    let draws: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = PathRng::new(seed, i);
            let mut x = mu * t;
            if sigma > 0.0 {
                x += sigma * t.sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
            let k = count.map_or(0, |p| rng.sample(p) as u64);
            for _ in 0..k {
                x -= match jumps {
                    JumpSpec::Exponential { alpha, .. } => rng.sample::<f64, _>(Exp1) / alpha,
                    JumpSpec::Erlang { shape, alpha, .. } => {
                        (0..shape).map(|_| rng.sample::<f64, _>(Exp1)).sum::<f64>() / alpha
                    }
                    JumpSpec::Deterministic { size, .. } => size,
                    JumpSpec::None => 0.0,
                };
            }
            (x, sigma == 0.0 && k == 0)
        })
        .collect();
    let atom_count = draws.iter().filter(|d| d.1).count() as u64;
    let mut samples: Vec<f64> = draws.into_iter().filter(|d| !d.1).map(|d| d.0).collect();
    samples.sort_by(f64::total_cmp);
    Ok(EmpiricalLaw {
        samples,
        atom: (sigma == 0.0 && rate > 0.0).then_some(mu * t),
        atom_count,
        n,
    })
}

//! Event-driven simulation for models without a Gaussian part. Between claims
//! the path is `X + c t`, so every crossing and integral is exact.

use rand::Rng;
use rand_distr::Exp1;

use super::rng::PathRng;
use super::{prepare, Estimand, run_paths, settle, Outcome, Prepared, SimConfig, SimEstimate};
use crate::error::{Error, Result};
use crate::levy::JumpSpec;
use crate::scalar::growth_ratio;

pub fn simulate_cl_exact(cfg: &SimConfig, estimands: &[Estimand]) -> Result<Vec<SimEstimate>> {
    cfg.validate()?;
    let m = &cfg.model;
    if m.sigma() != 0.0 || matches!(m.jumps(), JumpSpec::None) || !(m.mu() > 0.0) {
        return Err(Error::PreconditionViolation(
            "exact simulation needs sigma = 0, compound Poisson claims and premium rate c > 0".into(),
        ));
    }
    let prep = prepare(cfg, estimands)?;
    let sim = Cl {
        c: m.mu(),
        rate: m.jumps().rate(),
        claim: m.jumps(),
        x: cfg.x,
        top: if cfg.b.is_finite() { Some(cfg.b) } else { cfg.safe_level() },
        barrier: cfg.b.is_finite(),
        r: cfg.r,
        horizon: cfg.horizon,
        seed: cfg.seed,
        prep,
    };
    Ok(run_paths(cfg, sim.prep.len(), |i, out| sim.path(i, out)))
}

struct Cl {
    c: f64,
    rate: f64,
    claim: JumpSpec<f64>,
    x: f64,
    top: Option<f64>,
    barrier: bool,
    r: f64,
    horizon: f64,
    seed: u64,
    prep: Vec<Prepared>,
}

impl Cl {
    fn claim_size(&self, rng: &mut PathRng) -> f64 {
        match self.claim {
            JumpSpec::Exponential { alpha, .. } => rng.sample::<f64, _>(Exp1) / alpha,
            JumpSpec::Erlang { shape, alpha, .. } => {
                (0..shape).map(|_| rng.sample::<f64, _>(Exp1)).sum::<f64>() / alpha
            }
            JumpSpec::Deterministic { size, .. } => size,
            JumpSpec::None => 0.0,
        }
    }

    /// Integrals over `[t0, t0 + h]` of the segment starting at level `x0`.
    fn integrate(&self, t0: f64, x0: f64, h: f64, out: &mut [f64]) {
        if h <= 0.0 {
            return;
        }
        let c = self.c;
        for (p, o) in self.prep.iter().zip(out.iter_mut()) {
            match *p {
                Prepared::Potential { q, lam, .. } => {
                    *o += (lam * x0 - q * t0).exp() * growth_ratio(lam * c - q, h);
                }
                Prepared::Occupation { q, lo, hi } => {
                    let a = ((lo - x0) / c).max(0.0);
                    let b = ((hi - x0) / c).min(h);
                    if b > a {
                        let time = if q == 0.0 {
                            b - a
                        } else {
                            (-q * (t0 + a)).exp() * -(-q * (b - a)).exp_m1() / q
                        };
                        *o += time / (hi - lo);
                    }
                }
                _ => {}
            }
        }
    }

    fn path(&self, index: u64, out: &mut [f64]) -> bool {
        let mut rng = PathRng::new(self.seed, index);
        let c = self.c;
        let mut t = 0.0;
        let mut x = self.x;
        let mut below = x < 0.0;
        let mut start = 0.0;
        let outcome = 'path: loop {
            let next = t + rng.sample::<f64, _>(Exp1) / self.rate;
            loop {
                if !below {
                    if let Some(top) = self.top {
                        let hit = t + (top - x).max(0.0) / c;
                        if hit <= next && hit <= self.horizon {
                            self.integrate(t, x, hit - t, out);
                            break 'path if self.barrier {
                                Outcome::Exited { t: hit }
                            } else {
                                Outcome::Safe { t: hit, level: top }
                            };
                        }
                    }
                    if next > self.horizon {
                        self.integrate(t, x, self.horizon - t, out);
                        break 'path Outcome::Censored;
                    }
                    self.integrate(t, x, next - t, out);
                    x += c * (next - t) - self.claim_size(&mut rng);
                    t = next;
                    if x < 0.0 {
                        below = true;
                        start = t;
                    }
                    break;
                }
                let recover = t + (-x) / c;
                let deadline = start + self.r;
                if deadline <= next && deadline <= recover && deadline <= self.horizon {
                    self.integrate(t, x, deadline - t, out);
                    break 'path Outcome::Ruined {
                        t: deadline,
                        level: x + c * (deadline - t),
                    };
                }
                if self.horizon < next.min(recover) {
                    self.integrate(t, x, self.horizon - t, out);
                    break 'path Outcome::Censored;
                }
                if recover < next {
                    self.integrate(t, x, recover - t, out);
                    t = recover;
                    x = 0.0;
                    below = false;
                    continue;
                }
                self.integrate(t, x, next - t, out);
                x += c * (next - t) - self.claim_size(&mut rng);
                t = next;
                break;
            }
        };
        settle(&self.prep, outcome, out);
        outcome == Outcome::Censored
    }
}

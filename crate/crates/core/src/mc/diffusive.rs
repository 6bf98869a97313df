//! Simulation for models with a Gaussian part. The Brownian component lives
//! on a dyadic tree of bridge samples keyed by node, refined wherever a level
//! crossing or the Parisian deadline may fall inside an interval. The base grid
//! `dt` and its half share the tree, so the two estimates are coupled.

use rand::Rng;
use rand_distr::Exp1;

use super::rng::{keyed_normal, keyed_normal_pair, keyed_uniform, Ns, PathRng};
use super::{prepare, run_paths, settle, Estimand, Outcome, Prepared, SimConfig, SimEstimate};
use crate::error::{Error, Result};
use crate::levy::JumpSpec;

/// Refinement stops at `dt / 2^FINE_LEVELS`.
const FINE_LEVELS: u32 = 6;
/// Crossing probability below which an interval is treated as crossing-free.
const QUIET: f64 = 1e-6;
const JUMP_ROOT: u64 = 1 << 39;

/// Gauss-Legendre rule on `[0, pi]` after `s = len (1 - cos th) / 2`, as
/// (fraction of the interval, weight including the Jacobian).
fn occupation_rule() -> [(f64, f64); 8] {
    const GL8: [(f64, f64); 8] = [
        (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
        (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
        (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
        (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
        (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
        (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
        (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
        (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    ];
    GL8.map(|(node, wt)| {
        let th = 0.5 * std::f64::consts::PI * (node + 1.0);
        (0.5 * (1.0 - th.cos()), wt * th.sin() * 0.25 * std::f64::consts::PI)
    })
}

/// Occupation estimands sharing one bin, as `(index, q)`.
struct Bin {
    lo: f64,
    hi: f64,
    members: Vec<(usize, f64)>,
}

fn occupation_bins(prep: &[Prepared]) -> Vec<Bin> {
    let mut bins: Vec<Bin> = Vec::new();
    for (k, p) in prep.iter().enumerate() {
        if let Prepared::Occupation { q, lo, hi } = *p {
            match bins.iter_mut().find(|b| b.lo == lo && b.hi == hi) {
                Some(b) => b.members.push((k, q)),
                None => bins.push(Bin {
                    lo,
                    hi,
                    members: vec![(k, q)],
                }),
            }
        }
    }
    bins
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusiveEstimates {
    pub dt: f64,
    /// Grid step `dt`.
    pub coarse: Vec<SimEstimate>,
    /// Grid step `dt / 2`.
    pub fine: Vec<SimEstimate>,
    /// `2 fine - coarse`, path by path.
    pub extrapolated: Vec<SimEstimate>,
}

pub fn simulate_diffusive(cfg: &SimConfig, estimands: &[Estimand]) -> Result<DiffusiveEstimates> {
    cfg.validate()?;
    let m = &cfg.model;
    if !(m.sigma() > 0.0) {
        return Err(Error::PreconditionViolation("diffusive simulation needs sigma > 0".into()));
    }
    let limit = cfg.r / 100.0;
    if !(cfg.dt > 0.0) || cfg.dt > limit * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse { dt: cfg.dt, limit });
    }
    let prep = prepare(cfg, estimands)?;
    let n = prep.len();
    let sim = Diffusive {
        n,
        mu: m.mu(),
        sigma: m.sigma(),
        s2: m.sigma() * m.sigma(),
        jumps: m.jumps(),
        x: cfg.x,
        b: cfg.b.is_finite().then_some(cfg.b),
        safe: cfg.safe_level(),
        r: cfg.r,
        dt: cfg.dt,
        min_len: cfg.dt / (1u64 << FINE_LEVELS) as f64 * (1.0 + 1e-9),
        horizon: cfg.horizon,
        seed: cfg.seed,
        cut: -QUIET.ln() * m.sigma() * m.sigma() / 2.0,
        mid_factor: prep
            .iter()
            .map(|p| match *p {
                Prepared::Potential { lam, .. } => {
                    let e = lam * lam * m.sigma() * m.sigma() * cfg.dt / 8.0;
                    (e.exp(), (e / 2.0).exp())
                }
                _ => (1.0, 1.0),
            })
            .collect(),
        rule: occupation_rule(),
        bins: occupation_bins(&prep),
        prep,
    };
    let all = run_paths(cfg, 3 * n, |i, out| {
        let censored = sim.path(i, out);
        let (cf, rich) = out.split_at_mut(2 * n);
        for k in 0..n {
            rich[k] = 2.0 * cf[n + k] - cf[k];
        }
        censored
    });
    Ok(DiffusiveEstimates {
        dt: cfg.dt,
        coarse: all[..n].to_vec(),
        fine: all[n..2 * n].to_vec(),
        extrapolated: all[2 * n..].to_vec(),
    })
}

#[derive(Debug, Clone, Copy)]
struct Seg {
    t0: f64,
    t1: f64,
    /// Continuous part `x + mu t + sigma B_t` at both ends.
    w0: f64,
    w1: f64,
    root: u64,
    heap: u64,
}

impl Seg {
    fn len(&self) -> f64 {
        self.t1 - self.t0
    }

    fn key(&self) -> u64 {
        (self.root << 16) | self.heap
    }

    fn split(&self, wm: f64) -> (Seg, Seg) {
        let tm = 0.5 * (self.t0 + self.t1);
        (
            Seg {
                t1: tm,
                w1: wm,
                heap: 2 * self.heap,
                ..*self
            },
            Seg {
                t0: tm,
                w0: wm,
                heap: 2 * self.heap + 1,
                ..*self
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Target {
    Coarse,
    Fine,
    Both,
}

struct Walk {
    path: u64,
    jump_level: f64,
    below: bool,
    start: f64,
    jumps_seen: u64,
    outcome: Option<Outcome>,
    /// `exp(lam X_t - q t)` per estimand at time `cached_at`.
    cached: Vec<f64>,
    cached_at: f64,
}

struct Diffusive {
    n: usize,
    mu: f64,
    sigma: f64,
    s2: f64,
    jumps: JumpSpec<f64>,
    x: f64,
    b: Option<f64>,
    safe: Option<f64>,
    r: f64,
    dt: f64,
    min_len: f64,
    horizon: f64,
    seed: u64,
    prep: Vec<Prepared>,
    /// `-ln(QUIET) sigma^2 / 2`.
    cut: f64,
    /// Conditional midpoint factors `exp(lam^2 sigma^2 len / 8)` for `len = dt, dt/2`.
    mid_factor: Vec<(f64, f64)>,
    rule: [(f64, f64); 8],
    bins: Vec<Bin>,
}

fn touch_prob(u: f64, v: f64, s2: f64, len: f64) -> f64 {
    if u <= 0.0 || v <= 0.0 {
        1.0
    } else {
        (-2.0 * u * v / (s2 * len)).exp()
    }
}

fn bin_prob(m: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    if sd <= 0.0 {
        return if m >= lo && m < hi { 1.0 } else { 0.0 };
    }
    let k = std::f64::consts::FRAC_1_SQRT_2 / sd;
    0.5 * (libm::erfc((lo - m) * k) - libm::erfc((hi - m) * k))
}

impl Diffusive {
    fn claim_size(&self, rng: &mut PathRng) -> f64 {
        match self.jumps {
            JumpSpec::Exponential { alpha, .. } => rng.sample::<f64, _>(Exp1) / alpha,
            JumpSpec::Erlang { shape, alpha, .. } => {
                (0..shape).map(|_| rng.sample::<f64, _>(Exp1)).sum::<f64>() / alpha
            }
            JumpSpec::Deterministic { size, .. } => size,
            JumpSpec::None => 0.0,
        }
    }

    fn midpoint(&self, w: &Walk, s: &Seg) -> f64 {
        let z = keyed_normal(self.seed, w.path, Ns::Midpoint, s.key());
        0.5 * (s.w0 + s.w1) + 0.5 * self.sigma * s.len().sqrt() * z
    }

    /// No crossing of 0 or `b` is likely and the deadline is not inside.
    fn quiet(&self, w: &Walk, s: &Seg) -> bool {
        let u = s.w0 + w.jump_level;
        let v = s.w1 + w.jump_level;
        let len = s.len();
        if w.below {
            let deadline = w.start + self.r;
            if deadline <= s.t1 {
                return false;
            }
            return self.apart(-u, -v, len);
        }
        self.apart(u, v, len) && self.b.is_none_or(|b| self.apart(b - u, b - v, len))
    }

    /// Bridge between distances `u`, `v` from a level crosses it with probability below `QUIET`.
    #[inline]
    fn apart(&self, u: f64, v: f64, len: f64) -> bool {
        u > 0.0 && v > 0.0 && u * v > self.cut * len
    }

    fn add(&self, out: &mut [f64], target: Target, k: usize, v: f64) {
        match target {
            Target::Coarse => out[k] += v,
            Target::Fine => out[self.n + k] += v,
            Target::Both => {
                out[k] += v;
                out[self.n + k] += v;
            }
        }
    }

    /// Conditional expectation of the running integrals given the end points.
    fn smooth(&self, w: &Walk, s: &Seg, out: &mut [f64], target: Target) {
        let u = s.w0 + w.jump_level;
        let v = s.w1 + w.jump_level;
        let len = s.len();
        for k in 0..self.n {
            if let Prepared::Potential { q, lam, .. } = self.prep[k] {
                let f0 = (lam * u - q * s.t0).exp();
                let f1 = (lam * v - q * s.t1).exp();
                let fm = (f0 * f1).sqrt() * (lam * lam * self.s2 * len / 8.0).exp();
                self.add(out, target, k, len / 6.0 * (f0 + 4.0 * fm + f1));
            }
        }
        self.occupation(w, s, out, target);
    }

    /// Discounted time spent in each bin, integrated against the bridge law.
    fn occupation(&self, w: &Walk, s: &Seg, out: &mut [f64], target: Target) {
        if self.bins.is_empty() {
            return;
        }
        let u = s.w0 + w.jump_level;
        let v = s.w1 + w.jump_level;
        let len = s.len();
        let reach = 4.0 * self.sigma * len.sqrt();
        let (lo_end, hi_end) = (u.min(v) - reach, u.max(v) + reach);
        let mut probs = [0.0; 8];
        for bin in &self.bins {
            if hi_end < bin.lo || lo_end >= bin.hi {
                continue;
            }
            for (p, &(frac, _)) in probs.iter_mut().zip(&self.rule) {
                let m = u + (v - u) * frac;
                let sd = self.sigma * (len * frac * (1.0 - frac)).sqrt();
                *p = if m + 6.0 * sd < bin.lo || m - 6.0 * sd >= bin.hi {
                    0.0
                } else {
                    bin_prob(m, sd, bin.lo, bin.hi)
                };
            }
            for &(k, q) in &bin.members {
                let acc: f64 = if q == 0.0 {
                    self.rule.iter().zip(&probs).map(|(&(_, wt), p)| wt * p).sum()
                } else {
                    self.rule.iter().zip(&probs).map(|(&(frac, wt), p)| wt * (-q * len * frac).exp() * p).sum()
                };
                let integral = acc * len * (-q * s.t0).exp();
                self.add(out, target, k, integral / (bin.hi - bin.lo));
            }
        }
    }

    /// Trapezoid rule over a piece of a finest-level interval.
    fn trapezoid(&self, out: &mut [f64], t0: f64, x0: f64, t1: f64, x1: f64) {
        let h = t1 - t0;
        if h <= 0.0 {
            return;
        }
        for (k, p) in self.prep.iter().enumerate() {
            let v = match *p {
                Prepared::Potential { q, lam, .. } => {
                    0.5 * h * ((lam * x0 - q * t0).exp() + (lam * x1 - q * t1).exp())
                }
                Prepared::Occupation { q, lo, hi } => {
                    let ind = |x: f64, t: f64| if x >= lo && x < hi { (-q * t).exp() } else { 0.0 };
                    0.5 * h * (ind(x0, t0) + ind(x1, t1)) / (hi - lo)
                }
                _ => continue,
            };
            self.add(out, Target::Both, k, v);
        }
    }

    fn check_safe(&self, w: &mut Walk, t: f64, wc: f64) {
        if let Some(level) = self.safe {
            let x = wc + w.jump_level;
            if !w.below && x >= level {
                w.outcome = Some(Outcome::Safe { t, level: x });
            }
        }
    }

    /// A base interval: coarse integrals over the whole, fine ones over the halves.
    fn root(&self, w: &mut Walk, s: Seg, mid_z: Option<f64>, out: &mut [f64]) {
        let wm = match mid_z {
            Some(z) => 0.5 * (s.w0 + s.w1) + 0.5 * self.sigma * s.len().sqrt() * z,
            None => self.midpoint(w, &s),
        };
        let (l, r) = s.split(wm);
        if !(self.quiet(w, &s) && self.quiet(w, &l) && self.quiet(w, &r)) {
            w.cached_at = f64::NAN;
            self.refine(w, l, out);
            if w.outcome.is_none() {
                self.refine(w, r, out);
            }
            return;
        }
        let len = s.len();
        let tm = l.t1;
        let (u, xm, v) = (s.w0 + w.jump_level, wm + w.jump_level, s.w1 + w.jump_level);
        let fresh = w.cached_at != s.t0;
        for k in 0..self.n {
            match self.prep[k] {
                Prepared::Potential { q, lam, .. } => {
                    let f0 = if fresh { (lam * u - q * s.t0).exp() } else { w.cached[k] };
                    let fm = (lam * xm - q * tm).exp();
                    let f1 = (lam * v - q * s.t1).exp();
                    let (ef, eh) = if len == self.dt {
                        self.mid_factor[k]
                    } else {
                        let e = lam * lam * self.s2 * len / 8.0;
                        (e.exp(), (e / 2.0).exp())
                    };
                    let coarse = len / 6.0 * (f0 + 4.0 * (f0 * f1).sqrt() * ef + f1);
                    let fine = len / 12.0
                        * (f0 + 4.0 * (f0 * fm).sqrt() * eh + 2.0 * fm + 4.0 * (fm * f1).sqrt() * eh + f1);
                    out[k] += coarse;
                    out[self.n + k] += fine;
                    w.cached[k] = f1;
                }
                _ => {}
            }
        }
        self.occupation(w, &s, out, Target::Coarse);
        self.occupation(w, &l, out, Target::Fine);
        self.occupation(w, &r, out, Target::Fine);
        w.cached_at = s.t1;
        self.check_safe(w, s.t1, s.w1);
    }

    fn refine(&self, w: &mut Walk, s: Seg, out: &mut [f64]) {
        if self.quiet(w, &s) {
            self.smooth(w, &s, out, Target::Both);
            self.check_safe(w, s.t1, s.w1);
            return;
        }
        if s.len() > self.min_len {
            let wm = self.midpoint(w, &s);
            let (l, r) = s.split(wm);
            self.refine(w, l, out);
            if w.outcome.is_none() {
                self.refine(w, r, out);
            }
            return;
        }
        self.finest(w, s, out);
    }

    /// Events inside an interval of the finest level.
    fn finest(&self, w: &mut Walk, s: Seg, out: &mut [f64]) {
        let u = s.w0 + w.jump_level;
        let v = s.w1 + w.jump_level;
        let len = s.len();
        let tm = 0.5 * (s.t0 + s.t1);
        let interp = |level: f64| s.t0 + len * ((level - u) / (v - u)).clamp(0.0, 1.0);
        let at = |t: f64| u + (v - u) * (t - s.t0) / len;
        let touch = keyed_uniform(self.seed, w.path, Ns::Touch, s.key());
        if !w.below {
            if let Some(b) = self.b {
                let hit = if v >= b {
                    Some(interp(b))
                } else if touch < touch_prob(b - u, b - v, self.s2, len) {
                    Some(tm)
                } else {
                    None
                };
                if let Some(te) = hit {
                    self.trapezoid(out, s.t0, u, te, b);
                    w.outcome = Some(Outcome::Exited { t: te });
                    return;
                }
            }
            if v < 0.0 {
                let tc = interp(0.0);
                self.trapezoid(out, s.t0, u, tc, 0.0);
                self.trapezoid(out, tc, 0.0, s.t1, v);
                w.below = true;
                w.start = tc;
            } else {
                self.smooth(w, &s, out, Target::Both);
                self.check_safe(w, s.t1, s.w1);
            }
            return;
        }
        let deadline = w.start + self.r;
        let recover = if v >= 0.0 {
            Some(interp(0.0))
        } else if touch < touch_prob(-u, -v, self.s2, len) {
            Some(tm)
        } else {
            None
        };
        match recover {
            Some(tc) if tc < deadline => {
                let xc = at(tc).min(0.0);
                self.trapezoid(out, s.t0, u, tc, xc);
                self.trapezoid(out, tc, xc, s.t1, v);
                if v >= 0.0 {
                    w.below = false;
                } else {
                    // A fresh excursion starts where the old one ended.
                    w.start = tc;
                }
            }
            _ if deadline <= s.t1 => {
                let level = if recover.is_some() {
                    at(deadline).min(0.0)
                } else {
                    let a = deadline - s.t0;
                    let sd = self.sigma * (a * (s.t1 - deadline) / len).sqrt();
                    let z = keyed_normal(self.seed, w.path, Ns::Deadline, s.key());
                    (at(deadline) + sd * z).min(0.0)
                };
                self.trapezoid(out, s.t0, u, deadline, level);
                w.outcome = Some(Outcome::Ruined { t: deadline, level });
            }
            _ => self.smooth(w, &s, out, Target::Both),
        }
    }

    fn path(&self, index: u64, out: &mut [f64]) -> bool {
        let mut w = Walk {
            path: index,
            jump_level: 0.0,
            below: self.x < 0.0,
            start: 0.0,
            jumps_seen: 0,
            outcome: None,
            cached: vec![0.0; self.n],
            cached_at: f64::NAN,
        };
        if matches!(self.b, Some(b) if self.x >= b) {
            w.outcome = Some(Outcome::Exited { t: 0.0 });
        }
        let mut rng = PathRng::new(self.seed, index);
        let rate = self.jumps.rate();
        let mut next_jump = if rate > 0.0 { rng.sample::<f64, _>(Exp1) / rate } else { f64::INFINITY };
        let mut wc = self.x;
        let mut j = 0u64;
        while w.outcome.is_none() {
            let t0 = j as f64 * self.dt;
            if t0 >= self.horizon {
                w.outcome = Some(Outcome::Censored);
                break;
            }
            let t1 = ((j + 1) as f64 * self.dt).min(self.horizon);
            let len = t1 - t0;
            let (z, zm) = keyed_normal_pair(self.seed, index, Ns::Increment, j);
            let w1 = wc + self.mu * len + self.sigma * len.sqrt() * z;
            let (mut lt, mut lw) = (t0, wc);
            let mut split = false;
            while next_jump <= t1 && w.outcome.is_none() {
                let tau = next_jump;
                let frac = (tau - lt) / (t1 - lt);
                let sd = self.sigma * ((tau - lt) * (t1 - tau) / (t1 - lt)).sqrt();
                let zj = keyed_normal(self.seed, index, Ns::JumpPoint, w.jumps_seen);
                let wt = lw + (w1 - lw) * frac + sd * zj;
                let seg = Seg {
                    t0: lt,
                    t1: tau,
                    w0: lw,
                    w1: wt,
                    root: JUMP_ROOT | (w.jumps_seen << 1),
                    heap: 1,
                };
                self.root(&mut w, seg, None, out);
                if w.outcome.is_some() {
                    break;
                }
                w.jump_level -= self.claim_size(&mut rng);
                w.cached_at = f64::NAN;
                if !w.below && wt + w.jump_level < 0.0 {
                    w.below = true;
                    w.start = tau;
                }
                w.jumps_seen += 1;
                next_jump += rng.sample::<f64, _>(Exp1) / rate;
                (lt, lw) = (tau, wt);
                split = true;
            }
            if w.outcome.is_some() {
                break;
            }
            let root = if split { JUMP_ROOT | (((w.jumps_seen - 1) << 1) | 1) } else { j };
            let seg = Seg {
                t0: lt,
                t1,
                w0: lw,
                w1,
                root,
                heap: 1,
            };
            self.root(&mut w, seg, (!split).then_some(zm), out);
            wc = w1;
            j += 1;
        }
        let outcome = w.outcome.unwrap_or(Outcome::Censored);
        let (coarse, rest) = out.split_at_mut(self.n);
        settle(&self.prep, outcome, coarse);
        settle(&self.prep, outcome, &mut rest[..self.n]);
        outcome == Outcome::Censored
    }
}

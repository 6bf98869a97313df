//! Parisian ruin identities assembled from the scale function and the
//! `Lambda` kernel.

use crate::error::{Error, Result};
use crate::kernel::{check_quad, LambdaKernel};
use crate::levy::{JumpSpec, LevyModel, MarginalLaw};
use crate::quadrature::{breakpoints, integrate_with_breaks, Quad};
use crate::scalar::{discount_ratio, Scalar};

/// One identity evaluation point. `b` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParisianQuery<T> {
    pub x: T,
    pub b: T,
    pub q: T,
    pub lam: T,
    pub r: T,
}

impl<T: Scalar> ParisianQuery<T> {
    pub fn new(x: T, b: T, q: T, lam: T, r: T) -> Self {
        ParisianQuery { x, b, q, lam, r }
    }

    pub fn finite_barrier(&self) -> bool {
        self.b.is_finite()
    }

    fn validate(&self, k: &LambdaKernel<T>) -> Result<()> {
        if !(self.r > T::zero()) || !self.r.is_finite() {
            return Err(Error::DomainError(format!("r must be positive, got {}", self.r)));
        }
        if !(self.lam >= T::zero()) || !(self.q >= T::zero()) {
            return Err(Error::DomainError("q and lambda must be nonnegative".into()));
        }
        if !self.x.is_finite() || self.b.is_nan() || self.b == T::neg_infinity() {
            return Err(Error::DomainError("x must be finite and b real or +inf".into()));
        }
        if self.x > self.b {
            return Err(Error::DomainError(format!("x = {} exceeds b = {}", self.x, self.b)));
        }
        if self.q != k.q() {
            return Err(Error::PreconditionViolation(format!(
                "query q = {} but kernel built for q = {}",
                self.q,
                k.q()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flag {
    /// The value left the range implied by the probabilistic definition.
    OutOfRange,
    /// `psi'(0+) <= 0`: ruin is certain.
    NetProfitViolation,
    /// Estimated quadrature error above `1e-4`.
    PrecisionWarning,
    NegativeDensity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T> {
    pub value: T,
    pub flags: Vec<Flag>,
}

impl<T: Scalar> Evaluation<T> {
    fn plain(value: T) -> Self {
        Evaluation { value, flags: Vec::new() }
    }

    fn within(value: T, lo: T, hi: T) -> Self {
        let slack = T::lit(1e-7) * T::one().max(hi.abs());
        let mut e = Self::plain(value);
        if value < lo - slack || value > hi + slack {
            e.flags.push(Flag::OutOfRange);
        }
        e
    }

    pub fn has(&self, f: Flag) -> bool {
        self.flags.contains(&f)
    }
}

/// `(psi(lam) - q) / (lam - Phi(q))`, continuous through `lam = Phi(q)`.
fn slope_ratio<T: Scalar>(model: &LevyModel<T>, q: T, lam: T, phi: T) -> T {
    let h = lam - phi;
    if h.abs() < T::lit(1e-6) * phi.max(T::one()) {
        model.psi_prime(phi) + T::lit(0.5) * model.psi_second(phi) * h
    } else {
        (model.psi(lam) - q) / h
    }
}

/// `(1 - exp(-d r)) / d` with the `d -> 0` branch.
fn potential_ratio<T: Scalar>(d: T, q: T, r: T) -> T {
    if d.abs() < T::lit(1e-9) * q.max(T::one()) {
        let dr = d * r;
        r * (T::one() - dr * T::lit(0.5) + dr * dr / T::lit(6.0))
    } else {
        discount_ratio(d, r)
    }
}

/// Shared pieces of the bracketed terms for a given starting point.
struct Bracket<T> {
    exp_lx: T,
    space: Quad<T>,
    time: Quad<T>,
}

fn space_integral<T: Scalar>(k: &LambdaKernel<T>, y: T, lam: T) -> Result<Quad<T>> {
    if y <= T::zero() {
        return Ok(Quad::zero());
    }
    let sf = k.scale();
    let phi = sf.phi();
    let cfg = k.quad_config();
    let q = integrate_with_breaks(|u| sf.wt(u) * (phi * u + lam * (y - u)).exp(), &[T::zero(), y], &cfg);
    check_quad(q, &cfg, "scale function convolution")?;
    Ok(q)
}

fn bracket<T: Scalar>(k: &LambdaKernel<T>, y: T, lam: T, r: T) -> Result<Bracket<T>> {
    Ok(Bracket {
        exp_lx: (lam * y).exp(),
        space: space_integral(k, y, lam)?,
        time: k.lambda_time_integral_quad(y, r, lam)?,
    })
}

/// Exit ratio `Lambda(x, r) / Lambda(b, r)`.
fn ratio<T: Scalar>(k: &LambdaKernel<T>, x: T, b: T, r: T) -> Result<T> {
    if x == b {
        return Ok(T::one());
    }
    Ok(k.lambda_q(x, r)? / k.lambda_q(b, r)?)
}

/// `E_x[e^{-q(tau_r - r)} e^{lam X_{tau_r} - psi(lam) r}; tau_r < tau_b^+]`.
/// An infinite barrier is delegated to [`joint_laplace_inf_b`].
pub fn joint_laplace<T: Scalar>(k: &LambdaKernel<T>, query: &ParisianQuery<T>) -> Result<Evaluation<T>> {
    query.validate(k)?;
    if !query.finite_barrier() {
        return joint_laplace_inf_b(k, query);
    }
    let ParisianQuery { x, b, q, lam, r } = *query;
    let model = k.model();
    let bound = (-model.psi(lam) * r).exp();
    if x == b {
        return Ok(Evaluation::within(T::zero(), T::zero(), bound));
    }
    let d = model.psi(lam) - q;
    let rho = ratio(k, x, b, r)?;
    let value = if d == T::zero() {
        (lam * x).exp() - rho * (lam * b).exp()
    } else {
        let bx = bracket(k, x, lam, r)?;
        let bb = bracket(k, b, lam, r)?;
        let part = |br: &Bracket<T>| br.exp_lx - d * (br.space.value + br.time.value);
        part(&bx) - rho * part(&bb)
    };
    Ok(Evaluation::within(value, T::zero(), bound))
}

/// `E_x[e^{-q tau_b^+}; tau_b^+ < tau_r]`.
pub fn exit_laplace<T: Scalar>(k: &LambdaKernel<T>, query: &ParisianQuery<T>) -> Result<Evaluation<T>> {
    query.validate(k)?;
    if !query.finite_barrier() {
        return Err(Error::DomainError("exit transform needs a finite barrier".into()));
    }
    let v = ratio(k, query.x, query.b, query.r)?;
    Ok(Evaluation::within(v, T::zero(), T::one()))
}

/// `E_x[int_0^{tau_r ^ tau_b^+} e^{-q(t-r)} e^{lam X_t - psi(lam) r} dt]`.
/// An infinite barrier is delegated to [`potential_laplace_inf_b`].
pub fn potential_laplace<T: Scalar>(k: &LambdaKernel<T>, query: &ParisianQuery<T>) -> Result<Evaluation<T>> {
    query.validate(k)?;
    if !query.finite_barrier() {
        return potential_laplace_inf_b(k, query);
    }
    let ParisianQuery { x, b, q, lam, r } = *query;
    if x == b {
        return Ok(Evaluation::plain(T::zero()));
    }
    let d = k.model().psi(lam) - q;
    let ratio_r = potential_ratio(d, q, r);
    let rho = ratio(k, x, b, r)?;
    let bx = bracket(k, x, lam, r)?;
    let bb = bracket(k, b, lam, r)?;
    let part = |br: &Bracket<T>| br.exp_lx * ratio_r - br.space.value - br.time.value;
    let value = part(&bx) - rho * part(&bb);
    Ok(Evaluation::within(value, T::zero(), T::infinity()))
}

/// Killed q-potential density at `y >= 0`.
pub fn potential_density_pos<T: Scalar>(k: &LambdaKernel<T>, query: &ParisianQuery<T>, y: T) -> Result<Evaluation<T>> {
    query.validate(k)?;
    if !query.finite_barrier() {
        return Err(Error::DomainError("potential density needs a finite barrier".into()));
    }
    if !(y >= T::zero()) {
        return Err(Error::DomainError(format!("density on the positive half-line needs y >= 0, got {y}")));
    }
    let ParisianQuery { x, b, r, .. } = *query;
    if x == b {
        return Ok(Evaluation::plain(T::zero()));
    }
    let rho = ratio(k, x, b, r)?;
    let sf = k.scale();
    let v = rho * sf.w_q(b - y)? - sf.w_q(x - y)?;
    let mut e = Evaluation::plain(v);
    if v < -T::lit(1e-10) {
        e.flags.push(Flag::NegativeDensity);
    }
    Ok(e)
}

/// Mean of [`potential_density_pos`] over the bin `[lo, hi]`, `0 <= lo < hi`.
pub fn potential_density_pos_average<T: Scalar>(
    k: &LambdaKernel<T>,
    query: &ParisianQuery<T>,
    lo: T,
    hi: T,
) -> Result<Evaluation<T>> {
    query.validate(k)?;
    if !query.finite_barrier() {
        return Err(Error::DomainError("potential density needs a finite barrier".into()));
    }
    if !(lo >= T::zero() && hi > lo && hi.is_finite()) {
        return Err(Error::DomainError(format!("bad bin [{lo}, {hi}]")));
    }
    let ParisianQuery { x, b, r, .. } = *query;
    let top = hi.min(b);
    if x == b || top <= lo {
        return Ok(Evaluation::plain(T::zero()));
    }
    let rho = ratio(k, x, b, r)?;
    let sf = k.scale();
    let phi = sf.phi();
    let w = |z: T| if z < T::zero() { T::zero() } else { (phi * z).exp() * sf.wt(z) };
    let cfg = k.quad_config();
    let quad = integrate_with_breaks(|y| rho * w(b - y) - w(x - y), &breakpoints(lo, top, &[x]), &cfg);
    check_quad(quad, &cfg, "density bin average")?;
    let v = quad.value / (hi - lo);
    let mut e = Evaluation::plain(v);
    if v < -T::lit(1e-10) {
        e.flags.push(Flag::NegativeDensity);
    }
    Ok(e)
}

/// Atoms of `X_s` (from 0) move as `c s - j d` with Poisson(rate s) weights
/// when there is no Gaussian part.
#[derive(Clone, Copy)]
struct MovingAtoms<T> {
    c: T,
    rate: T,
    step: Option<T>,
}

impl<T: Scalar> MovingAtoms<T> {
    fn of(model: &LevyModel<T>) -> Option<Self> {
        if model.has_gaussian() {
            return None;
        }
        let step = match model.jumps() {
            JumpSpec::Deterministic { size, .. } => Some(size),
            _ => None,
        };
        Some(MovingAtoms {
            c: model.mu(),
            rate: model.jumps().rate(),
            step,
        })
    }

    fn count(&self) -> usize {
        if self.step.is_some() {
            256
        } else {
            1
        }
    }

    fn offset(&self, j: usize) -> T {
        self.step.map_or(T::zero(), |d| d * T::from_usize_lossy(j))
    }

    fn mass(&self, j: usize, s: T) -> T {
        if s <= T::zero() {
            return if j == 0 { T::one() } else { T::zero() };
        }
        let m = self.rate * s;
        let mut lf = T::zero();
        for i in 1..=j {
            lf = lf + T::from_usize_lossy(i).ln();
        }
        (T::from_usize_lossy(j) * m.ln() - m - lf).exp()
    }
}

/// `int_0^r f(s) ds` with square-root substitutions at both ends.
fn two_sided<T: Scalar, F: Fn(T) -> T>(k: &LambdaKernel<T>, r: T, extra: &[T], f: F) -> Quad<T> {
    let half = r * T::lit(0.5);
    let cfg = k.quad_config();
    let mut total = Quad::zero();
    let panels = 10;
    // s = u^2 on [0, r/2]
    let uh = half.sqrt();
    let mut left: Vec<T> = (1..=panels).map(|i| uh * T::lit(0.5).powi(i)).collect();
    left.extend(extra.iter().filter(|&&s| s > T::zero() && s < half).map(|s| s.sqrt()));
    let pts = breakpoints(T::zero(), uh, &left);
    total = total.add(integrate_with_breaks(|u| T::lit(2.0) * u * f(u * u), &pts, &cfg));
    // s = r - v^2 on [r/2, r]
    let mut right: Vec<T> = (1..=panels).map(|i| uh * T::lit(0.5).powi(i)).collect();
    right.extend(extra.iter().filter(|&&s| s >= half && s < r).map(|&s| (r - s).sqrt()));
    let pts = breakpoints(T::zero(), uh, &right);
    total = total.add(integrate_with_breaks(|v| T::lit(2.0) * v * f(r - v * v), &pts, &cfg));
    total
}

/// Continuous and atomic parts of the three terms of the full potential
/// density, started from `x`.
fn full_terms<T: Scalar>(k: &LambdaKernel<T>, x: T, y: T, r: T) -> Result<Quad<T>> {
    let model = *k.model();
    let q = k.q();
    let sf = k.scale();
    let tol = k.tolerances();
    let atoms = MovingAtoms::of(&model);
    let cfg = k.quad_config();
    let nan = T::nan();
    let density = |s: T, z: T| -> T {
        if s <= T::zero() {
            return T::zero();
        }
        match MarginalLaw::new(&model, s, tol.series_t()) {
            Ok(l) => l.density(z),
            Err(_) => nan,
        }
    };

    // Term 1: int_0^r e^{q(r-s)} P_x(X_s in dy) ds.
    let mut extra = Vec::new();
    if let Some(a) = atoms {
        for j in 0..a.count() {
            let s = (y - x + a.offset(j)) / a.c;
            if s > r {
                break;
            }
            extra.push(s);
        }
    }
    let mut t1 = two_sided(k, r, &extra, |s| (q * (r - s)).exp() * density(s, y - x));
    if let Some(a) = atoms {
        for j in 0..a.count() {
            let s = (y - x + a.offset(j)) / a.c;
            if s > r {
                break;
            }
            if s > T::zero() {
                t1.value = t1.value + (q * (r - s)).exp() * a.mass(j, s) / a.c;
            }
        }
    }

    // Term 2: int_0^x W(x-z) P_z(X_r in dy) dz.
    let mut t2 = Quad::zero();
    if x > T::zero() {
        let law = MarginalLaw::new(&model, r, tol.series_t())?;
        let mut interior = Vec::new();
        if let Some(up) = law.upper_support() {
            interior.push(y - up);
        }
        for &(loc, _) in law.atoms() {
            interior.push(y - loc);
        }
        let pts = breakpoints(T::zero(), x, &interior);
        t2 = integrate_with_breaks(|z| sf.w(x - z) * law.density(y - z), &pts, &cfg);
        for &(loc, mass) in law.atoms() {
            let z = y - loc;
            // Closed at both ends so that atoms handed over between terms at
            // z = 0 and z = x are counted exactly once.
            if z >= T::zero() && z <= x {
                t2.value = t2.value + sf.w_q(x - z)? * mass;
            }
        }
    }

    // Term 3: int_0^r P(X_{r-s} in dy) Lambda(x, s) ds.
    let mut extra = Vec::new();
    if let Some(a) = atoms {
        for j in 0..a.count() {
            let s = r - (y + a.offset(j)) / a.c;
            if s < T::zero() {
                break;
            }
            extra.push(s);
        }
    }
    if !model.has_gaussian() && x < T::zero() {
        extra.push(-x / model.mu());
    }
    let mut t3 = two_sided(k, r, &extra, |s| {
        let d = density(r - s, y);
        if d == T::zero() {
            T::zero()
        } else {
            d * k.lambda_q(x, s).unwrap_or(nan)
        }
    });
    if let Some(a) = atoms {
        for j in 0..a.count() {
            let s = r - (y + a.offset(j)) / a.c;
            if s < T::zero() {
                break;
            }
            if s > T::zero() && s < r {
                t3.value = t3.value + a.mass(j, r - s) * k.lambda_q(x, s)? / a.c;
            }
        }
    }

    for (name, t) in [("density term 1", &t1), ("density term 2", &t2), ("density term 3", &t3)] {
        if !t.value.is_finite() {
            return Err(Error::QuadratureFailure {
                context: name,
                estimate: t.value.as_f64(),
                error: t.error.as_f64(),
            });
        }
    }
    Ok(Quad {
        value: t1.value - t2.value - t3.value,
        error: t1.error + t2.error + t3.error,
        intervals: t1.intervals + t2.intervals + t3.intervals,
        converged: t1.converged && t2.converged && t3.converged,
    })
}

/// Density in `y` of `int_0^inf e^{-q(t-r)} P_x(X_t in dy, t < tau_r ^ tau_b^+) dt`
/// on the whole real line, built from marginal densities.
pub fn potential_density_full<T: Scalar>(k: &LambdaKernel<T>, query: &ParisianQuery<T>, y: T) -> Result<Evaluation<T>> {
    query.validate(k)?;
    if !query.finite_barrier() {
        return Err(Error::DomainError("potential density needs a finite barrier".into()));
    }
    if !y.is_finite() {
        return Err(Error::DomainError("y must be finite".into()));
    }
    let ParisianQuery { x, b, r, .. } = *query;
    if x == b {
        return Ok(Evaluation::plain(T::zero()));
    }
    let rho = ratio(k, x, b, r)?;
    let fx = full_terms(k, x, y, r)?;
    let fb = full_terms(k, b, y, r)?;
    let value = fx.value - rho * fb.value;
    let error = fx.error + rho.abs() * fb.error;
    let mut e = Evaluation::plain(value);
    if error > T::lit(1e-4) * value.abs().max(T::one()) {
        e.flags.push(Flag::PrecisionWarning);
    }
    if value < -T::lit(1e-8) {
        e.flags.push(Flag::NegativeDensity);
    }
    Ok(e)
}

/// Pieces shared by the two infinite-barrier identities.
struct InfiniteBarrier<T> {
    lambda_x: T,
    moment: T,
    moment_time: T,
}

fn infinite_barrier<T: Scalar>(k: &LambdaKernel<T>, query: &ParisianQuery<T>) -> Result<InfiniteBarrier<T>> {
    Ok(InfiniteBarrier {
        lambda_x: k.lambda_q(query.x, query.r)?,
        moment: k.lambda_exp_moment(query.r)?,
        moment_time: k.exp_moment_time_integral(query.r, query.lam)?,
    })
}

/// `E_x[e^{-q(tau_r - r)} e^{lam X_{tau_r} - psi(lam) r}; tau_r < inf]`.
pub fn joint_laplace_inf_b<T: Scalar>(k: &LambdaKernel<T>, query: &ParisianQuery<T>) -> Result<Evaluation<T>> {
    query.validate(k)?;
    let ParisianQuery { x, q, lam, r, .. } = *query;
    let model = k.model();
    let phi = k.phi();
    let d = model.psi(lam) - q;
    let slope = slope_ratio(model, q, lam, phi);
    let ib = infinite_barrier(k, query)?;
    let head = if d == T::zero() {
        (lam * x).exp()
    } else {
        let bx = bracket(k, x, lam, r)?;
        (lam * x).exp() - d * (bx.space.value + bx.time.value)
    };
    let value = head - ib.lambda_x / ib.moment * (slope - d * ib.moment_time);
    let bound = (-model.psi(lam) * r).exp();
    Ok(Evaluation::within(value, T::zero(), bound))
}

/// `E_x[int_0^{tau_r} e^{-q(t-r)} e^{lam X_t - psi(lam) r} dt]`; `+inf` when
/// `lam >= Phi(q)`.
pub fn potential_laplace_inf_b<T: Scalar>(k: &LambdaKernel<T>, query: &ParisianQuery<T>) -> Result<Evaluation<T>> {
    query.validate(k)?;
    let ParisianQuery { x, q, lam, r, .. } = *query;
    let phi = k.phi();
    if lam >= phi - T::lit(1e-12) * phi.max(T::one()) {
        return Ok(Evaluation::plain(T::infinity()));
    }
    let d = k.model().psi(lam) - q;
    let ib = infinite_barrier(k, query)?;
    let bx = bracket(k, x, lam, r)?;
    let value = (lam * x).exp() * potential_ratio(d, q, r)
        - bx.space.value
        - bx.time.value
        - ib.lambda_x / ib.moment * ((lam - phi).recip() - ib.moment_time);
    Ok(Evaluation::within(value, T::zero(), T::infinity()))
}

/// `P_x(tau_r < inf)`. The kernel's discount rate is ignored; a `q = 0`
/// kernel is built when needed.
pub fn ruin_probability<T: Scalar>(k: &LambdaKernel<T>, x: T, r: T) -> Result<Evaluation<T>> {
    if !(r > T::zero()) || !x.is_finite() {
        return Err(Error::DomainError(format!("ruin probability needs r > 0 and finite x, got r = {r}")));
    }
    let model = k.model();
    let drift = model.mean();
    if drift <= T::zero() {
        return Ok(Evaluation {
            value: T::one(),
            flags: vec![Flag::NetProfitViolation],
        });
    }
    let owned;
    let k0 = if k.q() == T::zero() {
        k
    } else {
        owned = LambdaKernel::new(model, T::zero(), k.tolerances())?;
        &owned
    };
    let value = T::one() - drift * k0.lambda_q(x, r)? / k0.lambda_exp_moment(r)?;
    Ok(Evaluation::within(value, T::zero(), T::one()))
}

/// `(q - psi(lam)) E[int e^{-qt + lam X_t} dt] - e^{lam x} + E[e^{-q T + lam X_T}]`
/// with `T = tau_r ^ tau_b^+`, every expectation taken from the identities.
pub fn strong_markov_residual<T: Scalar>(k: &LambdaKernel<T>, query: &ParisianQuery<T>) -> Result<T> {
    let ParisianQuery { x, b, q, lam, r } = *query;
    let d = k.model().psi(lam) - q;
    let undo = (d * r).exp();
    let pot = potential_laplace(k, query)?.value * undo;
    let mut stopped = joint_laplace(k, query)?.value * undo;
    if query.finite_barrier() {
        stopped = stopped + (lam * b).exp() * exit_laplace(k, query)?.value;
    }
    Ok(-d * pot - (lam * x).exp() + stopped)
}

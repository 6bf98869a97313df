//! The kernel `Lambda^(q)(x, r) = int_0^inf W^(q)(x+z) (z/r) P(X_r in dz)` and
//! the integrals built from it.

use crate::error::{Error, Result};
use crate::levy::{LevyModel, MarginalLaw};
use crate::quadrature::{breakpoints, integrate_with_breaks, Quad, QuadConfig};
use crate::scalar::{floor_tol, Scalar};
use crate::scale::ScaleFunction;
use crate::tolerances::Tolerances;

/// Number of geometric panels (ratio 4 in time) below the upper limit of a
/// time integral.
const TIME_PANELS: i32 = 10;

#[derive(Debug, Clone)]
pub struct LambdaKernel<T> {
    sf: ScaleFunction<T>,
    tol: Tolerances,
}

impl<T: Scalar> LambdaKernel<T> {
    pub fn new(model: &LevyModel<T>, q: T, tol: &Tolerances) -> Result<Self> {
        Ok(Self::from_scale(ScaleFunction::new(model, q, tol)?, tol))
    }

    pub fn from_scale(sf: ScaleFunction<T>, tol: &Tolerances) -> Self {
        LambdaKernel { sf, tol: *tol }
    }

    pub fn scale(&self) -> &ScaleFunction<T> {
        &self.sf
    }

    pub fn model(&self) -> &LevyModel<T> {
        self.sf.model()
    }

    pub fn q(&self) -> T {
        self.sf.q()
    }

    pub fn phi(&self) -> T {
        self.sf.phi()
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub(crate) fn quad_config(&self) -> QuadConfig<T> {
        let rel = (self.tol.lambda_t::<T>() * T::lit(0.1)).max(T::epsilon() * T::lit(256.0));
        QuadConfig::new(rel * T::lit(1e-6), rel)
    }

    fn check_r(r: T) -> Result<()> {
        if r > T::zero() && r.is_finite() {
            Ok(())
        } else {
            Err(Error::DomainError(format!("delay r must be positive and finite, got {r}")))
        }
    }

    /// Upper z-limit beyond which `exp(Phi z) (z/r) P(X_r in dz)` is negligible.
    fn z_max(&self, r: T) -> Result<T> {
        let model = self.model();
        if !model.has_gaussian() {
            return Ok(model.mu() * r);
        }
        let s = model.sigma();
        let k = (T::lit(2.0) * self.tol.lambda_t::<T>().recip().ln()).sqrt() + T::lit(3.0);
        let z = model.mu().max(T::zero()) * r + self.phi() * s * s * r + s * r.sqrt() * k;
        if z > T::lit(self.tol.zmax_cap) {
            return Err(Error::TruncationFailure(format!(
                "z-range {z} for r = {r} exceeds the configured cap {}",
                self.tol.zmax_cap
            )));
        }
        Ok(z)
    }

    /// `int_{lower}^inf h(z) (z/r) P(X_r in dz)` over continuous part and atoms.
    fn kendall_measure<H: Fn(T) -> T>(&self, r: T, lower: T, h: H) -> Result<Quad<T>> {
        let model = self.model();
        let law = MarginalLaw::new(model, r, self.tol.series_t())?;
        let upper = self.z_max(r)?;
        let lower = lower.max(T::zero());
        let cfg = self.quad_config();
        let mut total = Quad::zero();
        if lower < upper {
            let mut interior = Vec::new();
            if model.has_gaussian() {
                let s = model.sigma() * r.sqrt();
                let m = model.mean() * r + self.phi() * s * s;
                for k in [-3.0, 0.0, 3.0] {
                    interior.push(m + T::lit(k) * s);
                }
            }
            let pts = breakpoints(lower, upper, &interior);
            let q = integrate_with_breaks(|z| h(z) * z / r * law.density(z), &pts, &cfg);
            total = total.add(q);
        }
        for &(loc, mass) in law.atoms() {
            if loc > T::zero() && loc >= lower {
                total.value = total.value + h(loc) * loc / r * mass;
            }
        }
        check_quad(total, &cfg, "Lambda kernel")?;
        Ok(total)
    }

    /// `Lambda^(q)(x, r)` with its quadrature error estimate.
    pub fn lambda_q_quad(&self, x: T, r: T) -> Result<Quad<T>> {
        Self::check_r(r)?;
        self.kendall_measure(r, -x, |z| self.sf.w(x + z))
    }

    pub fn lambda_q(&self, x: T, r: T) -> Result<T> {
        Ok(self.lambda_q_quad(x, r)?.value)
    }

    /// `int_0^inf exp(Phi(q) z) (z/r) P(X_r in dz)`.
    pub fn lambda_exp_moment(&self, r: T) -> Result<T> {
        Self::check_r(r)?;
        let phi = self.phi();
        Ok(self.kendall_measure(r, T::zero(), |z| (phi * z).exp())?.value)
    }

    /// `int_0^r exp(-psi(lam) s) Lambda^(q)(x, s) ds`.
    pub fn lambda_time_integral(&self, x: T, r: T, lam: T) -> Result<T> {
        Ok(self.lambda_time_integral_quad(x, r, lam)?.value)
    }

    pub fn lambda_time_integral_quad(&self, x: T, r: T, lam: T) -> Result<Quad<T>> {
        Self::check_r(r)?;
        let psi = self.model().psi(lam);
        let mut extra = Vec::new();
        if !self.model().has_gaussian() && x < T::zero() {
            extra.push(-x / self.model().mu());
        }
        self.time_integral(r, &extra, |s| (-psi * s).exp() * self.lambda_q(x, s).unwrap_or(T::nan()))
    }

    /// `int_0^r exp(-psi(lam) s) E(s) ds` with `E` the exponential moment.
    pub fn exp_moment_time_integral(&self, r: T, lam: T) -> Result<T> {
        Self::check_r(r)?;
        let psi = self.model().psi(lam);
        Ok(self
            .time_integral(r, &[], |s| (-psi * s).exp() * self.lambda_exp_moment(s).unwrap_or(T::nan()))?
            .value)
    }

    /// `int_0^r f(s) ds` after `s = u^2`, on geometric panels refined toward
    /// `s = 0`; extra breakpoints are given in `s`.
    pub(crate) fn time_integral<F: Fn(T) -> T>(&self, r: T, extra_s: &[T], f: F) -> Result<Quad<T>> {
        let ur = r.sqrt();
        let mut interior: Vec<T> = (1..=TIME_PANELS).map(|k| ur * T::lit(0.5).powi(k)).collect();
        interior.extend(extra_s.iter().filter(|&&s| s > T::zero()).map(|s| s.sqrt()));
        let pts = breakpoints(T::zero(), ur, &interior);
        let cfg = self.quad_config();
        let q = integrate_with_breaks(|u| T::lit(2.0) * u * f(u * u), &pts, &cfg);
        check_quad(q, &cfg, "time integral")?;
        Ok(q)
    }

    /// `int_0^inf e^{-theta r} e^{-q r} Lambda(x, r) dr - int_0^inf e^{-Phi(theta+q) z} W(x+z) dz`.
    pub fn kendall_transform_check(&self, x: T, theta: T) -> Result<T> {
        if !(theta > T::zero()) {
            return Err(Error::DomainError(format!("theta must be positive, got {theta}")));
        }
        let model = self.model();
        let q = self.q();
        let tight = floor_tol::<T>(1e-10, 64.0);
        let horizon = (tight.recip().ln() + T::lit(10.0)) / theta;
        let mut extra = Vec::new();
        if !model.has_gaussian() && x < T::zero() {
            extra.push(-x / model.mu());
        }
        let lhs = self
            .time_integral(horizon, &extra, |r| {
                (-(theta + q) * r).exp() * self.lambda_q(x, r).unwrap_or(T::nan())
            })?
            .value;

        let phi_q = self.phi();
        let phi_tq = model.phi(theta + q, self.tol.root_t())?;
        let kappa = phi_tq - phi_q;
        let lower = (-x).max(T::zero());
        let z_end = lower + (T::lit(36.0) + T::one()) / kappa;
        let pts = breakpoints(lower, z_end, &[lower + kappa.recip(), lower + T::lit(4.0) / kappa]);
        let cfg = QuadConfig::new(tight * T::lit(1e-3), tight);
        let shift = (phi_q * x).exp();
        let rhs_q = integrate_with_breaks(|z| (-kappa * z).exp() * self.sf.wt(x + z), &pts, &cfg);
        check_quad(rhs_q, &cfg, "Kendall transform")?;
        let tail = self.sf.w_tilted(x + z_end)? * (-kappa * z_end).exp() / kappa;
        let rhs = shift * (rhs_q.value + tail);
        Ok(lhs - rhs)
    }
}

pub(crate) fn check_quad<T: Scalar>(q: Quad<T>, cfg: &QuadConfig<T>, context: &'static str) -> Result<()> {
    let target = cfg.abs_tol.max(cfg.rel_tol * q.value.abs());
    if !q.value.is_finite() || !q.error.is_finite() || (!q.converged && q.error > T::lit(100.0) * target) {
        return Err(Error::QuadratureFailure {
            context,
            estimate: q.value.as_f64(),
            error: q.error.as_f64(),
        });
    }
    Ok(())
}

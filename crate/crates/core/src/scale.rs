//! q-scale functions `W^(q)` and their tilted versions `W_{Phi(q)}`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::inversion::{euler, talbot, InversionConfig};
use crate::levy::{JumpSpec, LevyModel};
use crate::quadrature::{integrate_with_breaks, QuadConfig};
use crate::roots::{roots, Poly};
use crate::scalar::{complex_finite, floor_tol, Scalar};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleMethod {
    TwoExponentialClosedForm,
    MixedExponentialClosedForm,
    NumericalInversion,
}

#[derive(Debug, Clone)]
enum Repr<T> {
    /// Brownian motion with drift: `W_Phi(x) = -expm1(-k x) / d`, or `2x/sigma^2`
    /// when both roots coincide at 0.
    TwoExp { k: T, d: T, sigma2: T },
    /// `W_Phi(x) = sum res_j exp(shift_j x)`, `shift_j = rho_j - Phi`.
    Mixed { terms: Vec<(Complex<T>, Complex<T>)> },
    /// Premium `c`, claims of fixed size `d` at rate `a`:
    /// `W(x) = sum_k (-a)^k (x - k d)^k exp(beta (x - k d)) / (c^(k+1) k!)`, `beta = (a + q) / c`.
    Delay { c: T, a: T, d: T, beta: T },
    Numerical,
}

/// Monotone piecewise cubic (Fritsch–Carlson) on a uniform grid.
#[derive(Debug, Clone)]
struct Pchip<T> {
    dx: T,
    x_max: T,
    y: Vec<T>,
    d: Vec<T>,
}

impl<T: Scalar> Pchip<T> {
    fn new(dx: T, y: Vec<T>) -> Self {
        let n = y.len();
        let delta: Vec<T> = y.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
        let mut d = vec![T::zero(); n];
        if n >= 2 {
            d[0] = delta[0];
            d[n - 1] = delta[n - 2];
        }
        for i in 1..n.saturating_sub(1) {
            let (a, b) = (delta[i - 1], delta[i]);
            d[i] = if a * b <= T::zero() {
                T::zero()
            } else {
                T::lit(2.0) * a * b / (a + b)
            };
        }
        let x_max = dx * T::from_usize_lossy(n - 1);
        Pchip { dx, x_max, y, d }
    }

    fn eval(&self, x: T) -> T {
        let s = x / self.dx;
        let i = s.floor().to_usize().unwrap_or(0).min(self.y.len() - 2);
        let t = s - T::from_usize_lossy(i);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (d0, d1) = (self.d[i] * self.dx, self.d[i + 1] * self.dx);
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1
    }
}

/// `W^(q)` for a fixed model and discount rate. Immutable once built.
#[derive(Debug, Clone)]
pub struct ScaleFunction<T> {
    model: LevyModel<T>,
    q: T,
    phi: T,
    w0: T,
    method: ScaleMethod,
    repr: Repr<T>,
    inversion: InversionConfig,
    cache: Option<Pchip<T>>,
}

impl<T: Scalar> ScaleFunction<T> {
    pub fn new(model: &LevyModel<T>, q: T, tol: &Tolerances) -> Result<Self> {
        let preferred = match (model.jumps(), model.has_gaussian()) {
            (JumpSpec::None, _) => ScaleMethod::TwoExponentialClosedForm,
            (JumpSpec::Deterministic { .. }, true) => ScaleMethod::NumericalInversion,
            _ => ScaleMethod::MixedExponentialClosedForm,
        };
        match Self::with_method(model, q, preferred, tol) {
            Err(Error::ConvergenceFailure { .. }) if preferred == ScaleMethod::MixedExponentialClosedForm => {
                Self::with_method(model, q, ScaleMethod::NumericalInversion, tol)
            }
            other => other,
        }
    }

    pub fn with_method(model: &LevyModel<T>, q: T, method: ScaleMethod, tol: &Tolerances) -> Result<Self> {
        if !(q >= T::zero()) || !q.is_finite() {
            return Err(Error::DomainError(format!("scale function needs q >= 0, got {q}")));
        }
        let phi = model.phi(q, tol.root_t())?;
        let w0 = if model.has_gaussian() {
            T::zero()
        } else {
            model.mu().recip()
        };
        let repr = match method {
            ScaleMethod::TwoExponentialClosedForm => {
                if !matches!(model.jumps(), JumpSpec::None) {
                    return Err(Error::MethodUnavailable {
                        method: "TwoExponentialClosedForm",
                        reason: "model has jumps".into(),
                    });
                }
                let mu = model.mu();
                let sigma2 = model.sigma() * model.sigma();
                let d = (mu * mu + T::lit(2.0) * q * sigma2).sqrt();
                Repr::TwoExp {
                    k: T::lit(2.0) * d / sigma2,
                    d,
                    sigma2,
                }
            }
            ScaleMethod::MixedExponentialClosedForm => match model.jumps() {
                JumpSpec::Deterministic { rate, size } if !model.has_gaussian() => Repr::Delay {
                    c: model.mu(),
                    a: rate,
                    d: size,
                    beta: (rate + q) / model.mu(),
                },
                _ => mixed_terms(model, q, phi)?,
            },
            ScaleMethod::NumericalInversion => Repr::Numerical,
        };
        let sf = ScaleFunction {
            model: *model,
            q,
            phi,
            w0,
            method,
            repr,
            inversion: tol.inversion,
            cache: None,
        };
        if method == ScaleMethod::MixedExponentialClosedForm {
            sf.validate_partial_fractions()?;
        }
        Ok(sf)
    }

    /// Tabulates `W_Phi` on `[0, x_max]` with step `dx` for fast repeated
    /// evaluation. Only numerical inversion benefits from it.
    pub fn with_cache(mut self, x_max: T, dx: T) -> Result<Self> {
        if self.method != ScaleMethod::NumericalInversion {
            return Ok(self);
        }
        let n = (x_max / dx).ceil().to_usize().unwrap_or(1).max(1);
        let mut y = Vec::with_capacity(n + 1);
        for i in 0..=n {
            y.push(self.tilted_direct(dx * T::from_usize_lossy(i))?);
        }
        self.cache = Some(Pchip::new(dx, y));
        Ok(self)
    }

    pub fn model(&self) -> &LevyModel<T> {
        &self.model
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    pub fn method(&self) -> ScaleMethod {
        self.method
    }

    /// `W^(q)(0)`.
    pub fn w_zero(&self) -> T {
        self.w0
    }

    pub fn w_q(&self, x: T) -> Result<T> {
        if x < T::zero() {
            return Ok(T::zero());
        }
        Ok((self.phi * x).exp() * self.w_tilted(x)?)
    }

    pub fn w_tilted(&self, x: T) -> Result<T> {
        if x < T::zero() {
            return Ok(T::zero());
        }
        if x == T::zero() {
            return Ok(self.w0);
        }
        match &self.repr {
            Repr::TwoExp { k, d, sigma2 } => Ok(if *d == T::zero() {
                T::lit(2.0) * x / *sigma2
            } else {
                -(-*k * x).exp_m1() / *d
            }),
            Repr::Mixed { terms } => Ok(terms
                .iter()
                .map(|&(res, shift)| (res * (shift * x).exp()).re)
                .sum()),
            Repr::Delay { c, a, d, beta } => match self.delay_series(x, *c, *a, *d, *beta) {
                Some(v) => Ok(v),
                None => self.tilted_direct(x),
            },
            Repr::Numerical => match &self.cache {
                Some(c) if x <= c.x_max => Ok(c.eval(x)),
                _ => self.tilted_direct(x),
            },
        }
    }

    /// Tilted delay series in log form; `None` once cancellation between the
    /// alternating terms would cost more than about ten digits.
    fn delay_series(&self, x: T, c: T, a: T, d: T, beta: T) -> Option<T> {
        let cond_max = (T::lit(1e-10) / T::epsilon()).max(T::lit(10.0));
        let ln_ratio = (a / c).ln();
        let base = -self.phi * x - c.ln();
        let (mut sum, mut abs) = (T::zero(), T::zero());
        let mut ln_fact = T::zero();
        let mut k = 0usize;
        loop {
            let kf = T::from_usize_lossy(k);
            let u = x - kf * d;
            if u < T::zero() || (k > 0 && u == T::zero()) {
                break;
            }
            let ln_pow = if k == 0 { T::zero() } else { kf * (ln_ratio + u.ln()) };
            let t = (ln_pow + beta * u + base - ln_fact).exp();
            sum = if k % 2 == 0 { sum + t } else { sum - t };
            abs = abs + t;
            k += 1;
            ln_fact = ln_fact + T::from_usize_lossy(k).ln();
        }
        (sum > T::zero() && abs <= cond_max * sum).then_some(sum)
    }

    /// `W^(q)(x)` with inversion failures mapped to NaN, for integrands.
    pub(crate) fn w(&self, x: T) -> T {
        self.w_q(x).unwrap_or(T::nan())
    }

    pub(crate) fn wt(&self, x: T) -> T {
        self.w_tilted(x).unwrap_or(T::nan())
    }

    fn tilted_direct(&self, x: T) -> Result<T> {
        if x <= T::zero() {
            return Ok(if x == T::zero() { self.w0 } else { T::zero() });
        }
        let phi = self.phi;
        let q = self.q;
        let model = self.model;
        let f = move |s: Complex<T>| (model.psi_complex(s + phi) - q).inv();
        let cfg = self.inversion;
        // exp(-s d) grows on the left half of the Talbot contour, so claims of
        // fixed size are checked against a second Euler configuration instead.
        let fixed_claims = matches!(model.jumps(), JumpSpec::Deterministic { .. });
        let (a, loosen) = if fixed_claims {
            // Euler converges slowly at the kinks x = k d.
            (euler(&f, x, cfg.euler_a - 5.0, cfg.euler_terms, cfg.euler_binomial), 100.0)
        } else {
            (talbot(&f, x, cfg.talbot_nodes), 1.0)
        };
        let b = euler(&f, x, cfg.euler_a, cfg.euler_terms, cfg.euler_binomial);
        let tol = floor_tol::<T>(cfg.agreement_tol * loosen, 1e4);
        let scale = a.abs().max(b.abs());
        if !(a.is_finite() && b.is_finite()) || (a - b).abs() > tol * scale {
            return Err(Error::ConvergenceFailure {
                context: "scale function inversion",
                detail: format!("inversions disagree at x = {x}: {a:e} vs {b:e}"),
            });
        }
        Ok(a)
    }

    fn validate_partial_fractions(&self) -> Result<()> {
        let Repr::Mixed { terms } = &self.repr else {
            return Ok(());
        };
        let tol = floor_tol::<T>(1e-8, 1024.0);
        for off in [0.5, 1.0, 3.0] {
            let lam = self.phi + T::lit(off);
            let exact = (self.model.psi(lam) - self.q).recip();
            let z = Complex::new(lam - self.phi, T::zero());
            let approx: T = terms.iter().map(|&(res, shift)| (res / (z - shift)).re).sum();
            if !((approx - exact).abs() <= tol * exact.abs()) {
                return Err(Error::ConvergenceFailure {
                    context: "scale function partial fractions",
                    detail: format!("transform mismatch at lambda = {lam}: {approx:e} vs {exact:e}"),
                });
            }
        }
        Ok(())
    }

    /// `int_0^inf exp(-lam x) W^(q)(x) dx - 1 / (psi(lam) - q)`.
    pub fn laplace_identity_residual(&self, lam: T) -> Result<T> {
        let margin = T::lit(1e-3);
        if !(lam > self.phi + margin) {
            return Err(Error::PreconditionViolation(format!(
                "Laplace identity needs lambda > Phi(q) + {margin}, got {lam} with Phi(q) = {}",
                self.phi
            )));
        }
        let kappa = lam - self.phi;
        let x_end = T::lit(36.0) / kappa;
        let pts = [T::zero(), (T::one() / kappa).min(T::one()), T::lit(4.0) / kappa, x_end];
        let mut pts: Vec<T> = pts.to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let tol = floor_tol::<T>(1e-12, 64.0);
        let cfg = QuadConfig::new(tol / kappa, tol);
        let quad = integrate_with_breaks(|x| (-kappa * x).exp() * self.wt(x), &pts, &cfg);
        if !quad.value.is_finite() {
            return Err(Error::ConvergenceFailure {
                context: "Laplace identity residual",
                detail: "integrand not finite".into(),
            });
        }
        let tail = self.w_tilted(x_end)? * (-kappa * x_end).exp() / kappa;
        Ok(quad.value + tail - (self.model.psi(lam) - self.q).recip())
    }
}

fn mixed_terms<T: Scalar>(model: &LevyModel<T>, q: T, phi: T) -> Result<Repr<T>> {
    let Some((k, alpha)) = model.jumps().gamma_params() else {
        return Err(Error::MethodUnavailable {
            method: "MixedExponentialClosedForm",
            reason: "needs exponential or Erlang claims".into(),
        });
    };
    let a = model.jumps().rate();
    let s2 = model.sigma() * model.sigma();
    // (psi(l) - q) (alpha + l)^k = P(l); numerator N(l) = (alpha + l)^k.
    let base = Poly::new(vec![-a - q, model.mu(), T::lit(0.5) * s2]);
    let num = Poly::new(vec![alpha, T::one()]).pow(k);
    let p = base.mul(&num).add(&Poly::new(vec![a * alpha.powi(k as i32)]));
    let dp = p.derivative();
    let rs = roots(&p)?;
    let nearest = rs
        .iter()
        .enumerate()
        .min_by(|x, y| (*x.1 - phi).norm().partial_cmp(&(*y.1 - phi).norm()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let mut terms = Vec::with_capacity(rs.len());
    for (i, &rho) in rs.iter().enumerate() {
        let rho = if i == nearest { Complex::new(phi, T::zero()) } else { rho };
        let res = num.eval(rho) / dp.eval(rho);
        let shift = if i == nearest {
            Complex::new(T::zero(), T::zero())
        } else {
            rho - phi
        };
        if !complex_finite(res) {
            return Err(Error::ConvergenceFailure {
                context: "scale function partial fractions",
                detail: "repeated root".into(),
            });
        }
        terms.push((res, shift));
    }
    Ok(Repr::Mixed { terms })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_reproduces_linear_data() {
        let p = Pchip::<f64>::new(0.5, vec![0.0, 0.5, 1.0, 1.5]);
        assert!((p.eval(0.8) - 0.8).abs() < 1e-15);
        assert!((p.eval(1.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn cl_closed_form() {
        // W(x) = (1 - (a/c alpha) ... ) for exponential claims, q = 0:
        // W(x) = (1 / (c - a/alpha)) (1 - (a / (c alpha)) exp(-(alpha - a/c) x))
        let m = LevyModel::cramer_lundberg(1.5, 1.0, 1.0).unwrap();
        let sf = ScaleFunction::new(&m, 0.0, &Tolerances::default()).unwrap();
        assert_eq!(sf.method(), ScaleMethod::MixedExponentialClosedForm);
        for &x in &[0.0, 0.3, 1.0, 4.0, 20.0] {
            let exact = 2.0 - (4.0 / 3.0) * (-x / 3.0f64).exp();
            assert!((sf.w_q(x).unwrap() - exact).abs() < 1e-13, "x = {x}");
        }
    }
}

use num_complex::Complex;

use super::model::{JumpSpec, LevyModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalMethod {
    GaussianClosedForm,
    PoissonMixtureSeries,
    FourierInversion,
}

#[derive(Debug, Clone)]
enum Repr<T> {
    Gaussian {
        mean: T,
        sd: T,
    },
    /// `sigma = 0`, Gamma-family claims: X_t = c t - Gamma(n k, alpha) given n jumps.
    GammaSeries {
        top: T,
        alpha: T,
        // (shape n*k, log of Poisson weight times alpha^{nk} / Gamma(nk))
        terms: Vec<(T, T)>,
    },
    GaussianMixture {
        sd: T,
        // (mean, weight)
        comps: Vec<(T, T)>,
    },
    Fourier {
        mean: T,
        sd: T,
        tail: T,
        u_max: T,
        // Gamma-series terms handled analytically (sigma = 0 only).
        exact: Vec<(T, T)>,
    },
    Atoms,
}

/// Law of `X_t` started from 0: a continuous density plus finitely many atoms.
#[derive(Debug, Clone)]
pub struct MarginalLaw<T> {
    model: LevyModel<T>,
    t: T,
    method: MarginalMethod,
    atoms: Vec<(T, T)>,
    repr: Repr<T>,
}

fn poisson_weights<T: Scalar>(mean: T, tol: T) -> Vec<T> {
    // log pmf in a running sum; stop once past the mode and the geometric
    // tail bound falls under `tol`.
    let mut out = Vec::new();
    let lm = mean.ln();
    let mut logp = -mean;
    let mut n = 0usize;
    loop {
        let p = logp.exp();
        out.push(p);
        let nf = T::from_usize_lossy(n + 1);
        if nf > mean {
            let next = (logp + lm - nf.ln()).exp();
            let ratio = mean / (nf + T::one());
            if ratio < T::one() && next / (T::one() - ratio) < tol {
                break;
            }
        }
        if n > 100_000 {
            break;
        }
        logp = logp + lm - nf.ln();
        n += 1;
    }
    out
}

fn ln_factorial<T: Scalar>(m: usize, cache: &mut Vec<T>) -> T {
    while cache.len() <= m {
        let j = cache.len();
        let prev = *cache.last().unwrap();
        cache.push(prev + T::from_usize_lossy(j).ln());
    }
    cache[m]
}

fn gamma_terms<T: Scalar>(mean_count: T, k: u32, alpha: T, tol: T, skip: usize) -> Vec<(T, T)> {
    let w = poisson_weights(mean_count, tol / alpha);
    let mut lf = vec![T::zero()];
    let la = alpha.ln();
    let mut terms = Vec::with_capacity(w.len());
    for (n, &p) in w.iter().enumerate().skip(skip.max(1)) {
        if p <= T::zero() {
            continue;
        }
        let shape = n * k as usize;
        let coef = p.ln() + T::from_usize_lossy(shape) * la - ln_factorial(shape - 1, &mut lf);
        terms.push((T::from_usize_lossy(shape), coef));
    }
    terms
}

fn gamma_sum<T: Scalar>(terms: &[(T, T)], alpha: T, u: T) -> T {
    if u <= T::zero() {
        return T::zero();
    }
    let lu = u.ln();
    let mut acc = T::zero();
    for &(shape, coef) in terms {
        let pw = if shape == T::one() { T::zero() } else { (shape - T::one()) * lu };
        acc = acc + (coef + pw - alpha * u).exp();
    }
    acc
}

impl<T: Scalar> MarginalLaw<T> {
    /// Picks the exact method available for the model.
    pub fn new(model: &LevyModel<T>, t: T, series_tol: T) -> Result<Self> {
        let method = match (model.jumps(), model.has_gaussian()) {
            (JumpSpec::None, _) => MarginalMethod::GaussianClosedForm,
            (JumpSpec::Deterministic { .. }, _) => MarginalMethod::PoissonMixtureSeries,
            (_, false) => MarginalMethod::PoissonMixtureSeries,
            (_, true) => MarginalMethod::FourierInversion,
        };
        Self::with_method(model, t, method, series_tol)
    }

    pub fn with_method(model: &LevyModel<T>, t: T, method: MarginalMethod, tol: T) -> Result<Self> {
        if !(t > T::zero()) || !t.is_finite() {
            return Err(Error::DomainError(format!("marginal law needs t > 0, got {t}")));
        }
        let jumps = model.jumps();
        let rate = jumps.rate();
        let at = rate * t;
        let sigma = model.sigma();
        let unavailable = |reason: &str| {
            Err(Error::MethodUnavailable {
                method: match method {
                    MarginalMethod::GaussianClosedForm => "GaussianClosedForm",
                    MarginalMethod::PoissonMixtureSeries => "PoissonMixtureSeries",
                    MarginalMethod::FourierInversion => "FourierInversion",
                },
                reason: reason.to_string(),
            })
        };
        let mut atoms = Vec::new();
        let repr = match method {
            MarginalMethod::GaussianClosedForm => {
                if !matches!(jumps, JumpSpec::None) {
                    return unavailable("model has jumps");
                }
                Repr::Gaussian {
                    mean: model.mu() * t,
                    sd: sigma * t.sqrt(),
                }
            }
            MarginalMethod::PoissonMixtureSeries => match jumps {
                JumpSpec::None => return unavailable("model has no jumps"),
                JumpSpec::Deterministic { size, .. } => {
                    let w = poisson_weights(at, tol);
                    let comps: Vec<(T, T)> = w
                        .iter()
                        .enumerate()
                        .map(|(n, &p)| (model.mu() * t - T::from_usize_lossy(n) * size, p))
                        .collect();
                    if sigma == T::zero() {
                        atoms = comps;
                        Repr::Atoms
                    } else {
                        Repr::GaussianMixture {
                            sd: sigma * t.sqrt(),
                            comps,
                        }
                    }
                }
                _ => {
                    if sigma > T::zero() {
                        return unavailable("Gamma-family series needs sigma = 0");
                    }
                    let (k, alpha) = jumps.gamma_params().unwrap();
                    atoms.push((model.mu() * t, (-at).exp()));
                    Repr::GammaSeries {
                        top: model.mu() * t,
                        alpha,
                        terms: gamma_terms(at, k, alpha, tol, 1),
                    }
                }
            },
            MarginalMethod::FourierInversion => {
                let mean = model.mean() * t;
                let sd = (model.psi_second(T::zero()) * t).sqrt();
                match (jumps, sigma > T::zero()) {
                    (JumpSpec::Deterministic { .. }, false) => return unavailable("law is purely atomic"),
                    (_, true) => {
                        let s2t = sigma * sigma * t;
                        let mut u = (T::lit(2.0) * (T::one() / tol).ln() / s2t).sqrt();
                        for _ in 0..20 {
                            let bound = (-T::lit(0.5) * s2t * u * u).exp() / (s2t * u);
                            if bound < T::PI() * tol {
                                break;
                            }
                            u = u * T::lit(1.1);
                        }
                        let tail = match jumps.gamma_params() {
                            Some((k, alpha)) => T::lit(40.0 * k as f64) / alpha,
                            None => T::zero(),
                        };
                        Repr::Fourier {
                            mean,
                            sd,
                            tail,
                            u_max: u,
                            exact: Vec::new(),
                        }
                    }
                    (JumpSpec::None, false) => unreachable!("rejected by the model constructor"),
                    (_, false) => {
                        let (k, alpha) = jumps.gamma_params().unwrap();
                        atoms.push((model.mu() * t, (-at).exp()));
                        let p3 = at * at * at / T::lit(6.0);
                        let e = T::lit(3.0 * k as f64 - 1.0);
                        let u = (p3 * alpha.powf(e + T::one()) / (e * T::PI() * tol))
                            .powf(e.recip())
                            .max(alpha * T::lit(2.0));
                        let exact = gamma_terms(at, k, alpha, tol, 1).into_iter().take(2).collect();
                        Repr::Fourier {
                            mean,
                            sd,
                            tail: T::lit(40.0 * k as f64) / alpha,
                            u_max: u,
                            exact,
                        }
                    }
                }
            }
        };
        Ok(MarginalLaw {
            model: *model,
            t,
            method,
            atoms,
            repr,
        })
    }

    pub fn method(&self) -> MarginalMethod {
        self.method
    }

    pub fn t(&self) -> T {
        self.t
    }

    /// `(location, mass)` of every atom.
    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    /// Upper end of the support, if bounded.
    pub fn upper_support(&self) -> Option<T> {
        if self.model.has_gaussian() {
            None
        } else {
            Some(self.model.mu() * self.t)
        }
    }

    /// Density of the continuous part at `z`.
    pub fn density(&self, z: T) -> T {
        match &self.repr {
            Repr::Gaussian { mean, sd } => gauss(z, *mean, *sd),
            Repr::GammaSeries { top, alpha, terms } => gamma_sum(terms, *alpha, *top - z),
            Repr::GaussianMixture { sd, comps } => comps.iter().map(|&(m, w)| w * gauss(z, m, *sd)).sum(),
            Repr::Atoms => T::zero(),
            Repr::Fourier {
                mean,
                sd,
                tail,
                u_max,
                exact,
            } => self.fourier_density(z, *mean, *sd, *tail, *u_max, exact),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn fourier_density(&self, z: T, mean: T, sd: T, tail: T, u_max: T, exact: &[(T, T)]) -> T {
        let model = &self.model;
        let t = self.t;
        let two = T::lit(2.0);
        let period = two * ((z - mean).abs() + T::lit(12.0) * sd + tail);
        let h = T::TAU() / period;
        let n = (u_max / h).ceil().to_usize().unwrap_or(usize::MAX).min(4_000_000);
        let remainder = !exact.is_empty();
        let at = model.jumps().rate() * t;
        let mut acc = T::zero();
        for j in 0..=n {
            let u = T::from_usize_lossy(j) * h;
            let iu = Complex::new(T::zero(), u);
            let phi = if remainder {
                let w = model.jumps().transform_complex(iu) * at;
                let drift = Complex::new(T::zero(), u * model.mu() * t).exp();
                drift * exp_tail3(w) * (-at).exp()
            } else {
                (model.psi_complex(iu) * t).exp()
            };
            let v = (Complex::new(T::zero(), -u * z).exp() * phi).re;
            acc = acc + if j == 0 { v * T::lit(0.5) } else { v };
        }
        let mut dens = acc * h / T::PI();
        if remainder {
            let (_, alpha) = model.jumps().gamma_params().unwrap();
            dens = dens + gamma_sum(exact, alpha, model.mu() * t - z);
        }
        dens
    }
}

/// `exp(w) - 1 - w - w^2/2` without cancellation for small `w`.
fn exp_tail3<T: Scalar>(w: Complex<T>) -> Complex<T> {
    if w.norm() < T::lit(0.5) {
        let mut term = w * w * w / T::lit(6.0);
        let mut acc = term;
        for k in 4..30 {
            term = term * w / T::lit(k as f64);
            acc = acc + term;
            if term.norm() < T::epsilon() * acc.norm() {
                break;
            }
        }
        acc
    } else {
        w.exp() - T::one() - w - w * w * T::lit(0.5)
    }
}

fn gauss<T: Scalar>(z: T, mean: T, sd: T) -> T {
    let u = (z - mean) / sd;
    (-T::lit(0.5) * u * u).exp() / (sd * T::TAU().sqrt())
}

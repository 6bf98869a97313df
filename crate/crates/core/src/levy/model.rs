use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Downward jump component. Jump sizes are positive magnitudes; the process
/// jumps by their negatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpSpec<T> {
    None,
    Exponential { rate: T, alpha: T },
    Erlang { rate: T, shape: u32, alpha: T },
    Deterministic { rate: T, size: T },
}

impl<T: Scalar> JumpSpec<T> {
    pub fn rate(&self) -> T {
        match *self {
            JumpSpec::None => T::zero(),
            JumpSpec::Exponential { rate, .. } | JumpSpec::Erlang { rate, .. } | JumpSpec::Deterministic { rate, .. } => rate,
        }
    }

    /// Gamma-family view `(shape, rate)` of Exp/Erlang claims.
    pub fn gamma_params(&self) -> Option<(u32, T)> {
        match *self {
            JumpSpec::Exponential { alpha, .. } => Some((1, alpha)),
            JumpSpec::Erlang { shape, alpha, .. } => Some((shape, alpha)),
            _ => None,
        }
    }

    pub fn mean_size(&self) -> T {
        match *self {
            JumpSpec::None => T::zero(),
            JumpSpec::Deterministic { size, .. } => size,
            _ => {
                let (k, alpha) = self.gamma_params().unwrap();
                T::lit(k as f64) / alpha
            }
        }
    }

    /// Smallest real `lam` at which the claim transform blows up.
    pub fn abscissa(&self) -> T {
        match self.gamma_params() {
            Some((_, alpha)) => -alpha,
            None => T::neg_infinity(),
        }
    }

    /// `E[exp(-lam * size)]` and its first two derivatives in `lam`.
    pub fn transform(&self, lam: T) -> (T, T, T) {
        match *self {
            JumpSpec::None => (T::one(), T::zero(), T::zero()),
            JumpSpec::Deterministic { size, .. } => {
                let l = (-lam * size).exp();
                (l, -size * l, size * size * l)
            }
            _ => {
                let (k, alpha) = self.gamma_params().unwrap();
                let kf = T::lit(k as f64);
                let base = alpha / (alpha + lam);
                let l = base.powi(k as i32);
                let inv = (alpha + lam).recip();
                (l, -kf * inv * l, kf * (kf + T::one()) * inv * inv * l)
            }
        }
    }

    pub fn transform_complex(&self, s: Complex<T>) -> Complex<T> {
        match *self {
            JumpSpec::None => Complex::new(T::one(), T::zero()),
            JumpSpec::Deterministic { size, .. } => (-s * size).exp(),
            _ => {
                let (k, alpha) = self.gamma_params().unwrap();
                (Complex::new(alpha, T::zero()) / (s + alpha)).powi(k as i32)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidModel(m.to_string()));
        let pos = |v: T| v.is_finite() && v > T::zero();
        match *self {
            JumpSpec::None => Ok(()),
            JumpSpec::Exponential { rate, alpha } => {
                if !pos(rate) || !pos(alpha) {
                    return bad("exponential jumps need positive rate and alpha");
                }
                Ok(())
            }
            JumpSpec::Erlang { rate, shape, alpha } => {
                if !pos(rate) || !pos(alpha) || shape == 0 {
                    return bad("Erlang jumps need positive rate, alpha and shape");
                }
                Ok(())
            }
            JumpSpec::Deterministic { rate, size } => {
                if !pos(rate) || !pos(size) {
                    return bad("deterministic jumps need positive rate and size");
                }
                Ok(())
            }
        }
    }
}

/// Spectrally negative Lévy process with Laplace exponent
/// `psi(lam) = mu*lam + sigma^2 lam^2 / 2 + rate * (E[exp(-lam*size)] - 1)`.
///
/// For `sigma = 0` the drift `mu` is the premium rate `c` of a Cramér–Lundberg
/// surplus process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyModel<T> {
    mu: T,
    sigma: T,
    jumps: JumpSpec<T>,
}

impl<T: Scalar> LevyModel<T> {
    pub fn new(mu: T, sigma: T, jumps: JumpSpec<T>) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma < T::zero() {
            return Err(Error::InvalidModel(format!("mu = {mu}, sigma = {sigma}")));
        }
        jumps.validate()?;
        if sigma == T::zero() {
            if matches!(jumps, JumpSpec::None) {
                return Err(Error::InvalidModel("deterministic drift has monotone paths".into()));
            }
            if mu <= T::zero() {
                return Err(Error::InvalidModel(
                    "without a Gaussian part the premium rate must be positive".into(),
                ));
            }
        }
        Ok(LevyModel { mu, sigma, jumps })
    }

    pub fn brownian(mu: T, sigma: T) -> Result<Self> {
        Self::new(mu, sigma, JumpSpec::None)
    }

    pub fn cramer_lundberg(c: T, rate: T, alpha: T) -> Result<Self> {
        Self::new(c, T::zero(), JumpSpec::Exponential { rate, alpha })
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn jumps(&self) -> JumpSpec<T> {
        self.jumps
    }

    pub fn has_gaussian(&self) -> bool {
        self.sigma > T::zero()
    }

    pub fn psi(&self, lam: T) -> T {
        if lam <= self.jumps.abscissa() {
            return T::infinity();
        }
        let (l, _, _) = self.jumps.transform(lam);
        self.mu * lam + T::lit(0.5) * self.sigma * self.sigma * lam * lam + self.jumps.rate() * (l - T::one())
    }

    pub fn psi_prime(&self, lam: T) -> T {
        let (_, dl, _) = self.jumps.transform(lam);
        self.mu + self.sigma * self.sigma * lam + self.jumps.rate() * dl
    }

    pub fn psi_second(&self, lam: T) -> T {
        let (_, _, d2l) = self.jumps.transform(lam);
        self.sigma * self.sigma + self.jumps.rate() * d2l
    }

    pub fn psi_complex(&self, s: Complex<T>) -> Complex<T> {
        let l = self.jumps.transform_complex(s);
        s * self.mu + s * s * (T::lit(0.5) * self.sigma * self.sigma) + (l - T::one()) * self.jumps.rate()
    }

    /// Mean drift `E[X_1] = psi'(0+)`.
    pub fn mean(&self) -> T {
        self.mu - self.jumps.rate() * self.jumps.mean_size()
    }

    /// Right inverse `sup{lam >= 0 : psi(lam) = q}`.
    pub fn phi(&self, q: T, root_tol: T) -> Result<T> {
        if !(q >= T::zero()) || !q.is_finite() {
            return Err(Error::DomainError(format!("phi needs q >= 0, got {q}")));
        }
        let target = root_tol * q.max(T::one());
        let d0 = self.psi_prime(T::zero());
        let mut lo = T::zero();
        if d0 < T::zero() {
            lo = self.argmin()?;
        } else if q == T::zero() {
            return Ok(T::zero());
        }
        let mut hi = lo.max(T::one());
        let mut guard = 0;
        while self.psi(hi) <= q {
            hi = hi * T::lit(2.0);
            guard += 1;
            if guard > 200 {
                return Err(Error::ConvergenceFailure {
                    context: "phi",
                    detail: "could not bracket root".into(),
                });
            }
        }
        // Newton from the right stays to the right of the root for a convex
        // increasing function; bisection guards the rest.
        let mut x = hi;
        for _ in 0..200 {
            let f = self.psi(x) - q;
            if f.abs() <= target {
                return Ok(x);
            }
            if f > T::zero() {
                hi = x;
            } else {
                lo = x;
            }
            let step = f / self.psi_prime(x);
            let mut next = x - step;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = T::lit(0.5) * (lo + hi);
            }
            if next == x {
                break;
            }
            x = next;
        }
        let f = self.psi(x) - q;
        if f.abs() <= target {
            Ok(x)
        } else {
            Err(Error::ConvergenceFailure {
                context: "phi",
                detail: format!("residual {:e} after iteration limit at q = {q}", f.as_f64()),
            })
        }
    }

    /// Minimiser of psi on `[0, inf)` when `psi'(0) < 0`.
    fn argmin(&self) -> Result<T> {
        let mut hi = T::one();
        let mut guard = 0;
        while self.psi_prime(hi) <= T::zero() {
            hi = hi * T::lit(2.0);
            guard += 1;
            if guard > 200 {
                return Err(Error::ConvergenceFailure {
                    context: "phi",
                    detail: "psi has no minimiser".into(),
                });
            }
        }
        let mut lo = T::zero();
        for _ in 0..300 {
            let mid = T::lit(0.5) * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.psi_prime(mid) > T::zero() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(lo)
    }

    /// Positive root `gamma` of `psi(-gamma) = 0` (the adjustment coefficient)
    /// when the process drifts to `+inf`.
    pub fn lundberg_exponent(&self) -> Option<T> {
        if self.mean() <= T::zero() {
            return None;
        }
        let f = |g: T| self.psi(-g);
        let mut lo = T::zero();
        let ab = -self.jumps.abscissa();
        let mut hi = if ab.is_finite() { ab } else { T::one() };
        if !ab.is_finite() {
            let mut guard = 0;
            while f(hi) < T::zero() {
                lo = hi;
                hi = hi * T::lit(2.0);
                guard += 1;
                if guard > 200 {
                    return None;
                }
            }
        }
        for _ in 0..300 {
            let mid = T::lit(0.5) * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if f(mid) < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(T::lit(0.5) * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_monotone_paths() {
        assert!(LevyModel::<f64>::new(1.0, 0.0, JumpSpec::None).is_err());
        assert!(LevyModel::cramer_lundberg(-1.0, 1.0, 1.0).is_err());
        assert!(LevyModel::new(1.0, -0.5, JumpSpec::None).is_err());
        assert!(LevyModel::new(1.0, 0.0, JumpSpec::Erlang { rate: 1.0, shape: 0, alpha: 1.0 }).is_err());
    }

    #[test]
    fn closed_forms() {
        let bm = LevyModel::brownian(1.0, 1.0).unwrap();
        assert_eq!(bm.psi(1.0), 1.5);
        let cl = LevyModel::cramer_lundberg(1.5, 1.0, 1.0).unwrap();
        assert_eq!(cl.psi(1.0), 1.0);
        assert_eq!(cl.psi(0.0), 0.0);
        assert_eq!(cl.mean(), 0.5);
    }

    #[test]
    fn lundberg_exponent_matches_exponential_closed_form() {
        let cl = LevyModel::<f64>::cramer_lundberg(1.5, 1.0, 1.0).unwrap();
        let g = cl.lundberg_exponent().unwrap();
        assert!((g - 1.0 / 3.0).abs() < 1e-14);
        let bm = LevyModel::<f64>::brownian(1.0, 1.0).unwrap();
        assert!((bm.lundberg_exponent().unwrap() - 2.0).abs() < 1e-14);
    }
}

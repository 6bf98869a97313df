//! Numerical inverse Laplace transforms: fixed Talbot contour and
//! Euler-accelerated Fourier series on the Bromwich line.

use num_complex::Complex;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    /// Talbot node count.
    pub talbot_nodes: usize,
    /// Euler damping parameter; discretization error is about `exp(-a)`.
    pub euler_a: f64,
    pub euler_terms: usize,
    pub euler_binomial: usize,
    /// Relative disagreement between the two inverters that is tolerated.
    pub agreement_tol: f64,
}

impl InversionConfig {
    pub fn for_precision(eps: f64) -> Self {
        if eps > 1e-10 {
            InversionConfig {
                talbot_nodes: 10,
                euler_a: 12.0,
                euler_terms: 20,
                euler_binomial: 8,
                agreement_tol: 1e-3,
            }
        } else {
            InversionConfig {
                talbot_nodes: 20,
                euler_a: 25.0,
                euler_terms: 38,
                euler_binomial: 11,
                agreement_tol: 1e-7,
            }
        }
    }
}

pub fn talbot<T: Scalar, F: Fn(Complex<T>) -> Complex<T>>(f: &F, t: T, m: usize) -> T {
    let mt = T::from_usize_lossy(m);
    let r = T::lit(0.4) * mt / t;
    let mut acc = T::lit(0.5) * (f(Complex::new(r, T::zero())) * (r * t).exp()).re;
    for k in 1..m {
        let theta = T::from_usize_lossy(k) * T::PI() / mt;
        let cot = theta.cos() / theta.sin();
        let s = Complex::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - T::one()) * cot;
        let term = (s * t).exp() * f(s) * Complex::new(T::one(), sigma);
        acc = acc + term.re;
    }
    acc * r / mt
}

pub fn euler<T: Scalar, F: Fn(Complex<T>) -> Complex<T>>(f: &F, t: T, a: f64, n: usize, m: usize) -> T {
    let a = T::lit(a);
    let two_t = T::lit(2.0) * t;
    let scale = (a / T::lit(2.0)).exp() / t;
    let mut partial = Vec::with_capacity(n + m + 1);
    let mut s = T::lit(0.5) * f(Complex::new(a / two_t, T::zero())).re;
    partial.push(s);
    for k in 1..=(n + m) {
        let z = Complex::new(a / two_t, T::PI() * T::from_usize_lossy(k) / t);
        let term = f(z).re;
        s = if k % 2 == 0 { s + term } else { s - term };
        partial.push(s);
    }
    let mut binom = T::one();
    let half_m = T::lit(0.5).powi(m as i32);
    let mut acc = T::zero();
    for j in 0..=m {
        acc = acc + binom * partial[n + j];
        binom = binom * T::from_usize_lossy(m - j) / T::from_usize_lossy(j + 1);
    }
    scale * acc * half_m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(f: impl Fn(Complex<f64>) -> Complex<f64>, exact: impl Fn(f64) -> f64, ts: &[f64]) {
        let cfg = InversionConfig::for_precision(f64::EPSILON);
        for &t in ts {
            let tv = talbot(&f, t, cfg.talbot_nodes);
            let ev = euler(&f, t, cfg.euler_a, cfg.euler_terms, cfg.euler_binomial);
            let e = exact(t);
            assert!((tv - e).abs() <= 1e-10 * e.abs().max(1.0), "talbot t={t}: {tv} vs {e}");
            assert!((ev - e).abs() <= 1e-9 * e.abs().max(1.0), "euler t={t}: {ev} vs {e}");
        }
    }

    #[test]
    fn exponential() {
        check(|s| (s + 1.0).inv(), |t| (-t).exp(), &[0.05, 0.5, 1.0, 3.0, 10.0]);
    }

    #[test]
    fn sine() {
        // Poles on the imaginary axis: the fixed contour degrades for large t.
        check(|s| (s * s + 1.0).inv(), |t| t.sin(), &[0.05, 0.5, 1.0, 3.0]);
    }

    #[test]
    fn double_pole_at_origin() {
        check(|s| (s * s).inv(), |t| t, &[0.05, 0.5, 1.0, 3.0, 10.0]);
    }
}

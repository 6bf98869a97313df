//! Simultaneous polynomial root finding (Aberth–Ehrlich) with Newton polish.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{complex_finite, Scalar};

/// Real polynomial, coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    pub coef: Vec<T>,
}

impl<T: Scalar> Poly<T> {
    pub fn new(mut coef: Vec<T>) -> Self {
        while coef.len() > 1 && *coef.last().unwrap() == T::zero() {
            coef.pop();
        }
        Poly { coef }
    }

    pub fn degree(&self) -> usize {
        self.coef.len() - 1
    }

    pub fn mul(&self, other: &Poly<T>) -> Poly<T> {
        let mut out = vec![T::zero(); self.coef.len() + other.coef.len() - 1];
        for (i, &a) in self.coef.iter().enumerate() {
            for (j, &b) in other.coef.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly<T>) -> Poly<T> {
        let n = self.coef.len().max(other.coef.len());
        let get = |p: &Poly<T>, i: usize| p.coef.get(i).copied().unwrap_or(T::zero());
        Poly::new((0..n).map(|i| get(self, i) + get(other, i)).collect())
    }

    pub fn pow(&self, k: u32) -> Poly<T> {
        let mut out = Poly::new(vec![T::one()]);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn derivative(&self) -> Poly<T> {
        if self.coef.len() == 1 {
            return Poly::new(vec![T::zero()]);
        }
        Poly::new(
            self.coef
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * T::from_usize_lossy(i))
                .collect(),
        )
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        self.coef
            .iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + c)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, z: Complex<T>) -> (Complex<T>, Complex<T>) {
        let zero = Complex::new(T::zero(), T::zero());
        let mut p = zero;
        let mut dp = zero;
        for &c in self.coef.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }
}

/// All complex roots of `p`.
pub fn roots<T: Scalar>(p: &Poly<T>) -> Result<Vec<Complex<T>>> {
    let n = p.degree();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = *p.coef.last().unwrap();
    if n == 1 {
        return Ok(vec![Complex::new(-p.coef[0] / lead, T::zero())]);
    }
    // Cauchy bound on the root moduli.
    let bound = T::one()
        + p.coef[..n]
            .iter()
            .map(|c| (*c / lead).abs())
            .fold(T::zero(), T::max);
    let radius = bound * T::lit(0.5);
    let mut z: Vec<Complex<T>> = (0..n)
        .map(|k| {
            let ang = T::TAU() * T::from_usize_lossy(k) / T::from_usize_lossy(n) + T::lit(0.4);
            Complex::from_polar(radius, ang)
        })
        .collect();

    let tol = T::epsilon() * T::lit(4.0);
    let mut converged = false;
    for _ in 0..500 {
        let mut max_step = T::zero();
        for i in 0..n {
            let (pv, dpv) = p.eval_with_derivative(z[i]);
            if pv.norm() == T::zero() {
                continue;
            }
            let ratio = pv / dpv;
            let mut repulsion = Complex::new(T::zero(), T::zero());
            for j in 0..n {
                if j != i {
                    repulsion = repulsion + (z[i] - z[j]).inv();
                }
            }
            let step = ratio / (Complex::new(T::one(), T::zero()) - ratio * repulsion);
            if complex_finite(step) {
                z[i] = z[i] - step;
                let rel = step.norm() / z[i].norm().max(T::one());
                max_step = max_step.max(rel);
            }
        }
        if max_step <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure {
            context: "polynomial roots",
            detail: format!("Aberth iteration did not settle for degree {n}"),
        });
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (pv, dpv) = p.eval_with_derivative(*zi);
            if dpv.norm() == T::zero() {
                break;
            }
            let next = *zi - pv / dpv;
            if complex_finite(next) {
                *zi = next;
            }
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_with_complex_pair() {
        // (x - 2)(x^2 + 2x + 5): roots 2, -1 +- 2i
        let p = Poly::new(vec![-10.0, 1.0, 0.0, 1.0]);
        let mut r = roots(&p).unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        assert!((r[0] - Complex::new(-1.0, -2.0)).norm() < 1e-13);
        assert!((r[1] - Complex::new(-1.0, 2.0)).norm() < 1e-13);
        assert!((r[2] - Complex::new(2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn exact_zero_root() {
        let p = Poly::<f64>::new(vec![0.0, -1.0, 1.0]);
        let r = roots(&p).unwrap();
        assert!(r.iter().any(|z| z.norm() < 1e-15));
        assert!(r.iter().any(|z| (z.re - 1.0).abs() < 1e-15));
    }

    #[test]
    fn pow_and_derivative() {
        let p = Poly::new(vec![1.0, 1.0]).pow(3);
        assert_eq!(p.coef, vec![1.0, 3.0, 3.0, 1.0]);
        assert_eq!(p.derivative().coef, vec![3.0, 6.0, 3.0]);
    }
}

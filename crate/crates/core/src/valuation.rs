//! Expected discounted penalty `V(x) = E_x[int_0^T e^{-qt} g(X_t) dt + e^{-qT} f(X_T)]`
//! with `T = tau_r ^ tau_b^+`, for payoffs given as exponential mixtures.

use crate::error::{Error, Result};
use crate::kernel::LambdaKernel;
use crate::parisian::{exit_laplace, joint_laplace, potential_laplace, Evaluation, Flag, ParisianQuery};
use crate::scalar::Scalar;

/// `h(y) = sum_i w_i exp(lam_i y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpMixture<T> {
    terms: Vec<(T, T)>,
}

impl<T: Scalar> ExpMixture<T> {
    pub fn new(terms: Vec<(T, T)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::DomainError("exponential mixture needs at least one term".into()));
        }
        for (i, &(w, lam)) in terms.iter().enumerate() {
            if !w.is_finite() || !(lam >= T::zero()) || !lam.is_finite() {
                return Err(Error::DomainError(format!("bad mixture term ({w}, {lam})")));
            }
            if terms[..i].iter().any(|&(_, l)| l == lam) {
                return Err(Error::DomainError(format!("repeated exponent {lam} in mixture")));
            }
        }
        Ok(ExpMixture { terms })
    }

    pub fn constant(c: T) -> Self {
        ExpMixture {
            terms: vec![(c, T::zero())],
        }
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    pub fn terms(&self) -> &[(T, T)] {
        &self.terms
    }

    pub fn eval(&self, y: T) -> T {
        self.terms.iter().map(|&(w, lam)| w * (lam * y).exp()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValuationSpec<T> {
    /// Running payoff.
    pub g: ExpMixture<T>,
    /// Penalty applied at Parisian ruin.
    pub f_below: ExpMixture<T>,
    /// Payoff on reaching the barrier first.
    pub f_at_b: T,
    /// Start, barrier, discount and delay; the exponent field is ignored.
    pub query: ParisianQuery<T>,
}

pub fn value<T: Scalar>(k: &LambdaKernel<T>, spec: &ValuationSpec<T>) -> Result<Evaluation<T>> {
    let q = k.q();
    let phi = k.phi();
    let model = k.model();
    let base = spec.query;
    let query = |lam: T| ParisianQuery { lam, ..base };
    let r = base.r;
    let mut flags: Vec<Flag> = Vec::new();
    let mut merge = |e: &Evaluation<T>| {
        for f in &e.flags {
            if !flags.contains(f) {
                flags.push(*f);
            }
        }
    };
    let mut total = T::zero();
    for &(w, lam) in spec.g.terms() {
        if w == T::zero() {
            continue;
        }
        if !base.b.is_finite() && lam >= phi {
            return Err(Error::MixtureDomainError(format!(
                "running payoff exponent {lam} >= Phi(q) = {phi} makes the value infinite without a barrier"
            )));
        }
        let e = potential_laplace(k, &query(lam))?;
        merge(&e);
        total = total + w * e.value * ((model.psi(lam) - q) * r).exp();
    }
    for &(w, lam) in spec.f_below.terms() {
        if w == T::zero() {
            continue;
        }
        let e = joint_laplace(k, &query(lam))?;
        merge(&e);
        total = total + w * e.value * ((model.psi(lam) - q) * r).exp();
    }
    if spec.f_at_b != T::zero() && base.b.is_finite() {
        let e = exit_laplace(k, &query(T::zero()))?;
        merge(&e);
        total = total + spec.f_at_b * e.value;
    }
    Ok(Evaluation { value: total, flags })
}

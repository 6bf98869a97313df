//! Parisian ruin functionals for spectrally negative Lévy processes.
//!
//! Evaluators are generic over the floating point type; the aliases below fix
//! it to `f64` (and `f32` where useful). The Monte Carlo oracle in [`mc`] is
//! `f64` only.

pub mod error;
pub mod inversion;
pub mod kernel;
pub mod levy;
pub mod mc;
pub mod parisian;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod scale;
pub mod tolerances;
pub mod valuation;

pub use error::{Error, Result};
pub use kernel::LambdaKernel;
pub use levy::{JumpSpec, LevyModel, MarginalLaw, MarginalMethod};
pub use parisian::{Evaluation, Flag, ParisianQuery};
pub use scalar::Scalar;
pub use scale::{ScaleFunction, ScaleMethod};
pub use tolerances::Tolerances;
pub use valuation::{ExpMixture, ValuationSpec};

pub type Model = LevyModel<f64>;
pub type Jumps = JumpSpec<f64>;
pub type Scale = ScaleFunction<f64>;
pub type Kernel = LambdaKernel<f64>;
pub type Query = ParisianQuery<f64>;
pub type Mixture = ExpMixture<f64>;
pub type Valuation = ValuationSpec<f64>;

pub type ModelF32 = LevyModel<f32>;
pub type ScaleF32 = ScaleFunction<f32>;
pub type KernelF32 = LambdaKernel<f32>;
pub type QueryF32 = ParisianQuery<f32>;

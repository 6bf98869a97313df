mod marginal;
mod model;

pub use marginal::{MarginalLaw, MarginalMethod};
pub use model::{JumpSpec, LevyModel};

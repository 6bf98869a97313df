use crate::inversion::InversionConfig;
use crate::scalar::Scalar;

/// Numerical tolerances shared by every evaluator. Values tighter than a few
/// ulps of the working precision are floored when converted with [`Tolerances::get`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub root: f64,
    pub density: f64,
    pub series: f64,
    pub lambda: f64,
    /// Largest z-truncation point for kernel integrals.
    pub zmax_cap: f64,
    pub inversion: InversionConfig,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root: 1e-12,
            density: 1e-8,
            series: 1e-12,
            lambda: 1e-8,
            zmax_cap: 1e3,
            inversion: InversionConfig::for_precision(f64::EPSILON),
        }
    }
}

impl Tolerances {
    /// Defaults adapted to the precision of `T`.
    pub fn for_scalar<T: Scalar>() -> Self {
        let eps = T::epsilon().as_f64();
        let base = Tolerances::default();
        Tolerances {
            inversion: InversionConfig::for_precision(eps),
            ..base
        }
    }

    pub(crate) fn get<T: Scalar>(v: f64) -> T {
        crate::scalar::floor_tol(v, 64.0)
    }

    pub(crate) fn root_t<T: Scalar>(&self) -> T {
        Self::get(self.root)
    }
    pub fn density_t<T: Scalar>(&self) -> T {
        Self::get(self.density)
    }
    pub(crate) fn series_t<T: Scalar>(&self) -> T {
        Self::get(self.series)
    }
    pub(crate) fn lambda_t<T: Scalar>(&self) -> T {
        Self::get(self.lambda)
    }
}

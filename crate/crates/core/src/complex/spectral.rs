//! Spectral preprocessing and prediction for noiseless complex phase retrieval.

use crate::error::{invalid, Result};
use crate::models::Preprocessing;
use crate::numerics::QuadratureRule;
use crate::spectral::{SpectralModel, SpectralPrediction};

/// Weak-recovery threshold of noiseless complex phase retrieval (`m0 / m2 = 1/y`, `Y ~ Exp(1)`).
pub const COMPLEX_DELTA_U: f64 = 1.0;

/// Upper end of the tabulated `y` domain (`|G|^2` on the quadrature grid stays below 144).
const Y_MAX: f64 = 150.0;

/// `T(y) = sqrt(du) (1 - 1/y) / (sqrt(du) + (sqrt(delta) - sqrt(du)) / y)`, i.e.
/// `(y - 1) / (y + sqrt(delta) - 1)` for `du = 1`.
pub fn complex_t_bar(delta: f64) -> Result<Preprocessing> {
    if !(delta > COMPLEX_DELTA_U) {
        return Err(invalid(format!("optimal preprocessing needs delta > {COMPLEX_DELTA_U}, got {delta}")));
    }
    let (su, sd) = (COMPLEX_DELTA_U.sqrt(), delta.sqrt());
    Preprocessing::on_domain(
        format!("t-bar:complex-pr:{delta}"),
        move |y: f64| {
            if y <= 0.0 {
                -su / (sd - su)
            } else {
                su * (y - 1.0) / (su * y + sd - su)
            }
        },
        (0.0, Y_MAX),
    )
}

/// Asymptotic spectral prediction for Gaussian sensing with preprocessing `preproc`.
pub fn complex_prediction(preproc: &Preprocessing, delta: f64, rule: &QuadratureRule) -> Result<SpectralPrediction> {
    SpectralModel::complex_noiseless(preproc, rule)?.solve(delta)
}

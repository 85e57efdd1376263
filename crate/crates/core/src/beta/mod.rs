//! Beta distribution: special functions, moments, method-of-moments calibration
//! from a (skewness, kurtosis) pair, and the discrete laws of the urn model.
//!
//! Note on labels: the two moment formulas bound here are the standard Beta
//! skewness `2(b-a)√(a+b+1) / ((a+b+2)√(ab))` and non-excess kurtosis
//! `3(a+b+1)[2(a+b)² + ab(a+b-6)] / (ab(a+b+2)(a+b+3))`. Some sources print them
//! with the K and S labels exchanged; the help-variable inversion only closes
//! with this binding.

mod calibrate;
mod discrete;
mod special;

pub use calibrate::{calibrate_from_sk, help_variable, BetaCalibration};
pub use discrete::{urn_limit_pmf, yule_simon_pmf};
pub use special::{beta_function, ln_beta, ln_gamma, regularized_incomplete_beta};

use serde::Serialize;

use crate::error::{Error, Result};

/// Shape parameters of a Beta law on (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
            Ok(BetaParams { a, b })
        } else {
            Err(Error::Domain(format!(
                "Beta shape parameters must be positive, got ({a}, {b})"
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }
}

/// Density `x^{a-1} (1-x)^{b-1} / B(a, b)`.
///
/// Returns 0 outside [0, 1]. At an endpoint where the exponent is negative the
/// density is unbounded and `f64::INFINITY` is returned.
pub fn beta_pdf(x: f64, params: BetaParams) -> f64 {
    let BetaParams { a, b } = params;
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    let ln_norm = special::ln_beta_pos(a, b);
    let endpoint = |exponent: f64, other: f64| -> f64 {
        if exponent < 0.0 {
            f64::INFINITY
        } else if exponent == 0.0 {
            (other - ln_norm).exp()
        } else {
            0.0
        }
    };
    if x == 0.0 {
        return endpoint(a - 1.0, 0.0);
    }
    if x == 1.0 {
        return endpoint(b - 1.0, 0.0);
    }
    ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_norm).exp()
}

/// Cumulative distribution `I_x(a, b)`; exactly 0 at x = 0 and 1 at x = 1.
pub fn beta_cdf(x: f64, params: BetaParams) -> Result<f64> {
    regularized_incomplete_beta(x, params.a, params.b)
}

pub fn beta_skewness(params: BetaParams) -> f64 {
    let BetaParams { a, b } = params;
    2.0 * (b - a) * (a + b + 1.0).sqrt() / ((a + b + 2.0) * (a * b).sqrt())
}

/// Non-excess kurtosis (3 in the normal limit).
pub fn beta_kurtosis(params: BetaParams) -> f64 {
    let BetaParams { a, b } = params;
    let s = a + b;
    let p = a * b;
    3.0 * (s + 1.0) * (2.0 * s * s + p * (s - 6.0)) / (p * (s + 2.0) * (s + 3.0))
}

/// Points `(x, cdf)` on a uniform grid of `n` points over [0, 1] inclusive.
pub fn cdf_curve(params: BetaParams, n: usize) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "cdf curve needs at least 2 points".into(),
        ));
    }
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| {
            let x = i as f64 / last;
            beta_cdf(x, params).map(|c| (x, c))
        })
        .collect()
}

use super::special::ln_beta_pos;
use crate::error::{Error, Result};

/// Yule–Simon mass `f(k; shape) = shape · B(k, shape + 1)` for `k >= 1`.
///
/// The integer argument is called `k` here; in the urn literature it is often
/// written `a`, which clashes with the Beta shape parameter.
pub fn yule_simon_pmf(k: u64, shape: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("Yule-Simon support starts at k = 1".into()));
    }
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::Domain(format!(
            "Yule-Simon shape must be positive, got {shape}"
        )));
    }
    Ok(shape * ln_beta_pos(k as f64, shape + 1.0).exp())
}

/// Limit fraction of urns holding `k` balls:
/// `P(k) = B(k + a, b) / B(k0 + a, b - 1)` for `k >= k0`, zero below `k0`.
///
/// Normalized over `k >= k0` through `Σ_{k>=k0} B(k+a, b) = B(k0+a, b-1)`,
/// which requires `b > 1`.
pub fn urn_limit_pmf(k: u64, k0: u64, a: f64, b: f64) -> Result<f64> {
    if !(b > 1.0) || !b.is_finite() {
        return Err(Error::Domain(format!(
            "urn limit law is not normalizable for b = {b} (need b > 1)"
        )));
    }
    let base = k0 as f64 + a;
    if !(base > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "attachment offset must satisfy k0 + a > 0, got k0 = {k0}, a = {a}"
        )));
    }
    if k < k0 {
        return Ok(0.0);
    }
    let ln_p = ln_beta_pos(k as f64 + a, b) - ln_beta_pos(base, b - 1.0);
    Ok(ln_p.exp())
}

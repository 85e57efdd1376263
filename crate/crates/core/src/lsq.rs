//! Small dense least-squares helpers shared by the K–S and rank-size fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ordinary least-squares solution of `y ≈ X β`.
#[derive(Debug, Clone)]
pub(crate) struct LinearFit {
    pub coef: DVector<f64>,
    pub sse: f64,
    /// `(XᵀX)⁻¹`; multiply by the residual variance for the coefficient covariance.
    pub cov_unscaled: DMatrix<f64>,
}

pub(crate) fn linear_least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LinearFit> {
    let (m, n) = x.shape();
    if m < n {
        return Err(Error::SingularDesign(format!(
            "{m} observations for {n} coefficients"
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = r.diagonal().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-12 * max_diag.max(f64::MIN_POSITIVE) * (m as f64).sqrt();
    if r.diagonal().iter().any(|v| v.abs() <= tol) {
        return Err(Error::SingularDesign(
            "design matrix is rank deficient".into(),
        ));
    }
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign("triangular solve failed".into()))?;
    let resid = y - x * &coef;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::SingularDesign("triangular inverse failed".into()))?;
    let cov_unscaled = &r_inv * r_inv.transpose();
    Ok(LinearFit {
        coef,
        sse: resid.norm_squared(),
        cov_unscaled,
    })
}

/// Coefficient of determination `1 - SSE/SST`, clamped to [0, 1].
/// A constant response fitted exactly counts as `R² = 1`.
pub(crate) fn r_squared(y: &[f64], sse: f64) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if sst == 0.0 {
        return if sse <= f64::EPSILON { 1.0 } else { 0.0 };
    }
    (1.0 - sse / sst).clamp(0.0, 1.0)
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
/// Returns `(argmin, min)`; the final bracket is narrower than `tol`.
pub(crate) fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        // Ties move toward the lower end.
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Model evaluation for the damped Gauss–Newton solver: fitted values and their
/// Jacobian with respect to the parameters, or `None` outside the model's domain.
pub(crate) type Evaluation = Option<(DVector<f64>, DMatrix<f64>)>;

#[derive(Debug, Clone)]
pub(crate) struct NonlinearFit {
    pub params: DVector<f64>,
    pub sse: f64,
    pub cov_unscaled: Option<DMatrix<f64>>,
    pub converged: bool,
}

const LM_MAX_ITER: usize = 500;
const LM_LAMBDA_MAX: f64 = 1e16;

/// Levenberg–Marquardt damped Gauss–Newton minimization of `Σ (y - f(θ))²`.
///
/// Steps that leave the model domain or fail to reduce the SSE are rejected and
/// the damping raised, so the returned SSE never exceeds the SSE at `start`.
pub(crate) fn damped_gauss_newton<F>(
    model: F,
    y: &DVector<f64>,
    start: DVector<f64>,
) -> Result<NonlinearFit>
where
    F: Fn(&DVector<f64>) -> Evaluation,
{
    let (fitted, mut jac) = model(&start)
        .ok_or_else(|| Error::Domain("starting point outside the model domain".into()))?;
    let mut params = start;
    let mut resid = y - &fitted;
    let mut sse = resid.norm_squared();
    if !sse.is_finite() {
        return Err(Error::Domain(
            "non-finite residuals at the starting point".into(),
        ));
    }
    let n = params.len();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < LM_MAX_ITER {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &resid;
        if jtr.amax() <= 1e-15 * (1.0 + sse) {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda <= LM_LAMBDA_MAX {
            let mut damped = jtj.clone();
            for i in 0..n {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&jtr),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let candidate = &params + &step;
            if let Some((f_new, j_new)) = model(&candidate) {
                let r_new = y - &f_new;
                let sse_new = r_new.norm_squared();
                if sse_new.is_finite() && sse_new <= sse {
                    let small_step = step.norm() <= 1e-14 * (params.norm() + 1e-14);
                    let small_gain = sse - sse_new <= 1e-16 * sse.max(f64::MIN_POSITIVE);
                    params = candidate;
                    jac = j_new;
                    resid = r_new;
                    sse = sse_new;
                    lambda = (lambda / 10.0).max(1e-15);
                    accepted = true;
                    if small_step || small_gain {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No descent direction left at any damping: a stationary point.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    let jtj = jac.transpose() * &jac;
    let cov_unscaled = jtj
        .clone()
        .try_inverse()
        .or_else(|| jtj.pseudo_inverse(1e-12).ok());
    Ok(NonlinearFit {
        params,
        sse,
        cov_unscaled,
        converged,
    })
}

/// Standard errors `sqrt(σ² diag(C))` with `σ² = SSE / dof`; zero when `dof == 0`.
pub(crate) fn standard_errors(cov_unscaled: &DMatrix<f64>, sse: f64, dof: usize) -> Vec<f64> {
    let sigma2 = if dof > 0 { sse / dof as f64 } else { 0.0 };
    cov_unscaled
        .diagonal()
        .iter()
        .map(|c| (sigma2 * c.max(0.0)).sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_parabola() {
        // A flat minimum only locates x to about sqrt(eps).
        let (x, fx) = golden_section(|x| (x - 1.234).powi(2) + 2.0, 0.0, 4.0, 1e-9);
        assert!((x - 1.234).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn linear_fit_exact_line() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 1.0, 2.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0]);
        let fit = linear_least_squares(&x, &y).unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-14);
        assert!((fit.coef[1] - 1.0).abs() < 1e-14);
        assert!(fit.sse < 1e-25);
    }

    #[test]
    fn linear_fit_rank_deficient() {
        let x = DMatrix::from_row_slice(3, 2, &[2.0, 1.0, 2.0, 1.0, 2.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0]);
        assert!(matches!(
            linear_least_squares(&x, &y),
            Err(Error::SingularDesign(_))
        ));
    }

    #[test]
    fn gauss_newton_exponential_decay() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let y = DVector::from_iterator(t.len(), t.iter().map(|t| 3.0 * (-0.7 * t).exp()));
        let model = |p: &DVector<f64>| -> Evaluation {
            let f = DVector::from_iterator(t.len(), t.iter().map(|t| p[0] * (-p[1] * t).exp()));
            let mut j = DMatrix::zeros(t.len(), 2);
            for (i, t) in t.iter().enumerate() {
                j[(i, 0)] = (-p[1] * t).exp();
                j[(i, 1)] = -t * p[0] * (-p[1] * t).exp();
            }
            Some((f, j))
        };
        let fit = damped_gauss_newton(model, &y, DVector::from_vec(vec![1.0, 0.1])).unwrap();
        assert!(fit.converged);
        assert!((fit.params[0] - 3.0).abs() < 1e-10);
        assert!((fit.params[1] - 0.7).abs() < 1e-10);
    }

    #[test]
    fn r_squared_bounds() {
        assert_eq!(r_squared(&[1.0, 1.0], 0.0), 1.0);
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], 0.0), 1.0);
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], 100.0), 0.0);
    }
}

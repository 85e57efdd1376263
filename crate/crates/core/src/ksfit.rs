//! Kurtosis–skewness relations over a cloud of per-group (S, K) points:
//! the quadratic envelope `K = p S² + q` and the free-exponent form `K = p S^ν + q`.
//!
//! Both fits are ordinary least squares in raw (S, K) space. For the power form
//! the model is linear in (p, q) at fixed ν, so ν is profiled: a coarse scan
//! locates the basin, golden-section search narrows it, and a damped Gauss–Newton
//! pass on (p, q, ν) polishes the optimum and supplies the linearized Jacobian
//! for the standard errors.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lsq::{self, Evaluation};
use crate::moments::SKPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KsModel {
    Quadratic,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsResidual {
    pub group_key: String,
    pub s: f64,
    pub k: f64,
    pub fitted: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSFitResult {
    pub model: KsModel,
    pub p: f64,
    pub q: f64,
    /// Fixed at 2 for the quadratic model.
    pub nu: f64,
    pub se_p: f64,
    pub se_q: f64,
    /// Zero for the quadratic model, where ν is not estimated.
    pub se_nu: f64,
    /// Raw-space `1 - SSE/SST` on K.
    pub r_squared: f64,
    pub sse: f64,
    pub n_points: usize,
    /// One entry per input point, in canonical (S, K, group) order.
    pub residuals: Vec<KsResidual>,
    /// Set when the power-model optimum sits on the ν bracket boundary.
    pub boundary_warning: Option<String>,
}

impl KSFitResult {
    pub fn predict(&self, s: f64) -> f64 {
        self.p * s.powf(self.nu) + self.q
    }
}

/// Search settings for the free exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFitOptions {
    pub nu_min: f64,
    pub nu_max: f64,
    pub tolerance: f64,
}

impl Default for PowerFitOptions {
    fn default() -> Self {
        PowerFitOptions {
            nu_min: 0.5,
            nu_max: 4.0,
            tolerance: 1e-6,
        }
    }
}

fn canonical_order(points: &[SKPoint]) -> Vec<&SKPoint> {
    let mut sorted: Vec<&SKPoint> = points.iter().collect();
    sorted.sort_by(|a, b| {
        a.s.total_cmp(&b.s)
            .then(a.k.total_cmp(&b.k))
            .then_with(|| a.group_key.cmp(&b.group_key))
            .then(a.n.cmp(&b.n))
    });
    sorted
}

fn check_finite(points: &[&SKPoint]) -> Result<()> {
    match points.iter().find(|p| !p.s.is_finite() || !p.k.is_finite()) {
        Some(p) => Err(Error::Domain(format!(
            "non-finite (S, K) for group `{}`",
            p.group_key
        ))),
        None => Ok(()),
    }
}

fn residuals(points: &[&SKPoint], fitted: impl Fn(f64) -> f64) -> Vec<KsResidual> {
    points
        .iter()
        .map(|pt| {
            let f = fitted(pt.s);
            KsResidual {
                group_key: pt.group_key.clone(),
                s: pt.s,
                k: pt.k,
                fitted: f,
                residual: pt.k - f,
            }
        })
        .collect()
}

fn fit_linear_in_pq(points: &[&SKPoint], nu: f64) -> Result<lsq::LinearFit> {
    let n = points.len();
    let mut x = DMatrix::zeros(n, 2);
    for (i, pt) in points.iter().enumerate() {
        x[(i, 0)] = pt.s.powf(nu);
        x[(i, 1)] = 1.0;
    }
    let y = DVector::from_iterator(n, points.iter().map(|pt| pt.k));
    lsq::linear_least_squares(&x, &y)
}

/// Least squares of K on S² with intercept.
pub fn fit_quadratic(points: &[SKPoint]) -> Result<KSFitResult> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "quadratic K-S fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let sorted = canonical_order(points);
    check_finite(&sorted)?;
    let first = sorted[0].s * sorted[0].s;
    if sorted.iter().all(|pt| pt.s * pt.s == first) {
        return Err(Error::SingularDesign(
            "all points share the same S²; p and q are not identifiable".into(),
        ));
    }
    let fit = fit_linear_in_pq(&sorted, 2.0)?;
    let n = sorted.len();
    let se = lsq::standard_errors(&fit.cov_unscaled, fit.sse, n - 2);
    let (p, q) = (fit.coef[0], fit.coef[1]);
    let k: Vec<f64> = sorted.iter().map(|pt| pt.k).collect();
    Ok(KSFitResult {
        model: KsModel::Quadratic,
        p,
        q,
        nu: 2.0,
        se_p: se[0],
        se_q: se[1],
        se_nu: 0.0,
        r_squared: lsq::r_squared(&k, fit.sse),
        sse: fit.sse,
        n_points: n,
        residuals: residuals(&sorted, |s| p * s * s + q),
        boundary_warning: None,
    })
}

pub fn fit_power(points: &[SKPoint]) -> Result<KSFitResult> {
    fit_power_with(points, PowerFitOptions::default())
}

/// Least squares of `K = p S^ν + q` over (p, q, ν) with ν restricted to the bracket.
pub fn fit_power_with(points: &[SKPoint], opts: PowerFitOptions) -> Result<KSFitResult> {
    if !(opts.nu_min > 0.0 && opts.nu_max > opts.nu_min && opts.tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid ν bracket [{}, {}] / tolerance {}",
            opts.nu_min, opts.nu_max, opts.tolerance
        )));
    }
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "power K-S fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    let sorted = canonical_order(points);
    check_finite(&sorted)?;
    let offenders: Vec<&str> = sorted
        .iter()
        .filter(|pt| !(pt.s > 0.0))
        .map(|pt| pt.group_key.as_str())
        .collect();
    if !offenders.is_empty() {
        return Err(Error::Domain(format!(
            "power K-S fit requires S > 0; offending group(s): {}",
            offenders.join(", ")
        )));
    }
    let n = sorted.len();
    let k: Vec<f64> = sorted.iter().map(|pt| pt.k).collect();

    let profile = |nu: f64| -> f64 {
        fit_linear_in_pq(&sorted, nu)
            .map(|f| f.sse)
            .unwrap_or(f64::INFINITY)
    };

    // Coarse scan of the profiled SSE, then golden-section inside the best cell.
    let cells = ((opts.nu_max - opts.nu_min) / 0.1).ceil().max(4.0) as usize;
    let step = (opts.nu_max - opts.nu_min) / cells as f64;
    let grid: Vec<f64> = (0..=cells).map(|i| opts.nu_min + i as f64 * step).collect();
    let sse_grid: Vec<f64> = grid.iter().map(|&nu| profile(nu)).collect();
    let best = sse_grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if !sse_grid[best].is_finite() {
        return Err(Error::SingularDesign(
            "profiled design is singular for every ν".into(),
        ));
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(cells)];
    let (nu0, _) = lsq::golden_section(profile, lo, hi, opts.tolerance);
    let start_fit = fit_linear_in_pq(&sorted, nu0)?;

    let s_vals: Vec<f64> = sorted.iter().map(|pt| pt.s).collect();
    let (nu_min, nu_max) = (opts.nu_min, opts.nu_max);
    let model = |theta: &DVector<f64>| -> Evaluation {
        let (p, q, nu) = (theta[0], theta[1], theta[2]);
        if !(nu_min..=nu_max).contains(&nu) {
            return None;
        }
        let mut f = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 3);
        for (i, &s) in s_vals.iter().enumerate() {
            let pw = s.powf(nu);
            f[i] = p * pw + q;
            j[(i, 0)] = pw;
            j[(i, 1)] = 1.0;
            j[(i, 2)] = p * pw * s.ln();
        }
        Some((f, j))
    };
    let y = DVector::from_vec(k.clone());
    let start = DVector::from_vec(vec![start_fit.coef[0], start_fit.coef[1], nu0]);
    let polished = lsq::damped_gauss_newton(model, &y, start)?;
    let (p, q, nu) = (polished.params[0], polished.params[1], polished.params[2]);

    let se = match &polished.cov_unscaled {
        Some(cov) => lsq::standard_errors(cov, polished.sse, n - 3),
        None => vec![f64::NAN; 3],
    };
    let edge = 10.0 * opts.tolerance;
    let boundary_warning = if nu - opts.nu_min <= edge || opts.nu_max - nu <= edge {
        Some(format!(
            "no interior minimum: ν = {nu} lies on the search bracket [{}, {}]",
            opts.nu_min, opts.nu_max
        ))
    } else {
        None
    };

    Ok(KSFitResult {
        model: KsModel::Power,
        p,
        q,
        nu,
        se_p: se[0],
        se_q: se[1],
        se_nu: se[2],
        r_squared: lsq::r_squared(&k, polished.sse),
        sse: polished.sse,
        n_points: n,
        residuals: residuals(&sorted, |s| p * s.powf(nu) + q),
        boundary_warning,
    })
}

/// Help variable implied by the quadratic relation at skewness `s`:
/// `rho = 6 [(p-1) s² + (q-1)] / [(3-2p) s² + 2(3-q)]`.
pub fn help_variable_from_pq(p: f64, q: f64, s: f64) -> Result<f64> {
    let s2 = s * s;
    let denominator = (3.0 - 2.0 * p) * s2 + 2.0 * (3.0 - q);
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(Error::NotBetaRepresentable { denominator });
    }
    Ok(6.0 * ((p - 1.0) * s2 + (q - 1.0)) / denominator)
}

//! Rank-size analysis: ascending ranking (rank 1 = smallest value) and the
//! rank-model family
//!
//! | variant     | model                                            |
//! |-------------|--------------------------------------------------|
//! | Zipf        | `d r^{-α}`                                       |
//! | Yule–Simon  | `d r^{-α} e^{-λ r}`                              |
//! | Lav3        | `κ r^{-γ} (N - r + 1)^{-ξ}`                      |
//! | Lav5        | `κ (r + Φ)^{-γ} (N + 1 - r + Ψ)^{-ξ}`            |
//! | Lav4        | `κ r^{ξ} (N - r + ψ)^{-γ}`                       |
//!
//! Every model is log-linear once its shift parameters are fixed. Fits start
//! from ordinary least squares on `ln y` (profiling ψ for Lav4) and are refined
//! by damped Gauss–Newton on the raw values, where R² is reported.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::beta::BetaParams;
use crate::error::{Error, Result};
use crate::lsq::{self, Evaluation};

/// Values sorted ascending; rank `r` is the 1-based position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedSeries {
    values: Vec<f64>,
}

impl RankedSeries {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `(rank, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (i + 1, v))
    }
}

/// Stable ascending sort.
pub fn rank_ascending(values: &[f64]) -> Result<RankedSeries> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite value at index {i}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(RankedSeries { values: sorted })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RankVariant {
    Zipf,
    YuleSimon,
    Lav3,
    Lav5,
    Lav4,
}

impl RankVariant {
    pub fn param_count(self) -> usize {
        match self {
            RankVariant::Zipf => 2,
            RankVariant::YuleSimon | RankVariant::Lav3 => 3,
            RankVariant::Lav4 => 4,
            RankVariant::Lav5 => 5,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            RankVariant::Zipf => &["d", "alpha"],
            RankVariant::YuleSimon => &["d", "alpha", "lambda"],
            RankVariant::Lav3 => &["kappa3", "gamma", "xi"],
            RankVariant::Lav5 => &["kappa5", "gamma", "xi", "phi", "psi"],
            RankVariant::Lav4 => &["kappa4", "gamma4", "xi4", "psi4"],
        }
    }
}

impl fmt::Display for RankVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            RankVariant::Zipf => "zipf",
            RankVariant::YuleSimon => "yule-simon",
            RankVariant::Lav3 => "lav3",
            RankVariant::Lav5 => "lav5",
            RankVariant::Lav4 => "lav4",
        };
        f.write_str(name)
    }
}

impl FromStr for RankVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "zipf" => Ok(RankVariant::Zipf),
            "yule-simon" | "yulesimon" | "ys" => Ok(RankVariant::YuleSimon),
            "lav3" => Ok(RankVariant::Lav3),
            "lav4" => Ok(RankVariant::Lav4),
            "lav5" => Ok(RankVariant::Lav5),
            other => Err(Error::UnsupportedVariant(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum RankModelSpec {
    Zipf {
        d: f64,
        alpha: f64,
    },
    YuleSimon {
        d: f64,
        alpha: f64,
        lambda: f64,
    },
    Lav3 {
        kappa: f64,
        gamma: f64,
        xi: f64,
    },
    Lav5 {
        kappa: f64,
        gamma: f64,
        xi: f64,
        phi: f64,
        psi: f64,
    },
    Lav4 {
        kappa: f64,
        gamma: f64,
        xi: f64,
        psi: f64,
    },
}

impl RankModelSpec {
    pub fn variant(&self) -> RankVariant {
        match self {
            RankModelSpec::Zipf { .. } => RankVariant::Zipf,
            RankModelSpec::YuleSimon { .. } => RankVariant::YuleSimon,
            RankModelSpec::Lav3 { .. } => RankVariant::Lav3,
            RankModelSpec::Lav5 { .. } => RankVariant::Lav5,
            RankModelSpec::Lav4 { .. } => RankVariant::Lav4,
        }
    }

    /// Parameters in [`RankVariant::param_names`] order.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            RankModelSpec::Zipf { d, alpha } => vec![d, alpha],
            RankModelSpec::YuleSimon { d, alpha, lambda } => vec![d, alpha, lambda],
            RankModelSpec::Lav3 { kappa, gamma, xi } => vec![kappa, gamma, xi],
            RankModelSpec::Lav5 {
                kappa,
                gamma,
                xi,
                phi,
                psi,
            } => vec![kappa, gamma, xi, phi, psi],
            RankModelSpec::Lav4 {
                kappa,
                gamma,
                xi,
                psi,
            } => vec![kappa, gamma, xi, psi],
        }
    }

    fn scale(&self) -> f64 {
        self.params()[0]
    }

    /// Internal coordinates: log of the scale, then the remaining parameters.
    fn to_theta(self) -> DVector<f64> {
        let mut p = self.params();
        p[0] = p[0].ln();
        DVector::from_vec(p)
    }

    fn from_theta(variant: RankVariant, theta: &DVector<f64>) -> Self {
        let t = |i: usize| theta[i];
        let scale = theta[0].exp();
        match variant {
            RankVariant::Zipf => RankModelSpec::Zipf {
                d: scale,
                alpha: t(1),
            },
            RankVariant::YuleSimon => RankModelSpec::YuleSimon {
                d: scale,
                alpha: t(1),
                lambda: t(2),
            },
            RankVariant::Lav3 => RankModelSpec::Lav3 {
                kappa: scale,
                gamma: t(1),
                xi: t(2),
            },
            RankVariant::Lav5 => RankModelSpec::Lav5 {
                kappa: scale,
                gamma: t(1),
                xi: t(2),
                phi: t(3),
                psi: t(4),
            },
            RankVariant::Lav4 => RankModelSpec::Lav4 {
                kappa: scale,
                gamma: t(1),
                xi: t(2),
                psi: t(3),
            },
        }
    }
}

/// `ln y(r)` and its gradient in internal coordinates; `None` on a nonpositive base.
fn log_model(spec: &RankModelSpec, r: f64, n: f64) -> Option<(f64, Vec<f64>)> {
    let ln_scale = spec.scale().ln();
    match *spec {
        RankModelSpec::Zipf { alpha, .. } => {
            let lr = r.ln();
            Some((ln_scale - alpha * lr, vec![1.0, -lr]))
        }
        RankModelSpec::YuleSimon { alpha, lambda, .. } => {
            let lr = r.ln();
            Some((ln_scale - alpha * lr - lambda * r, vec![1.0, -lr, -r]))
        }
        RankModelSpec::Lav3 { gamma, xi, .. } => {
            let upper = n - r + 1.0;
            let (lr, lu) = (r.ln(), upper.ln());
            Some((ln_scale - gamma * lr - xi * lu, vec![1.0, -lr, -lu]))
        }
        RankModelSpec::Lav5 {
            gamma,
            xi,
            phi,
            psi,
            ..
        } => {
            let lower = r + phi;
            let upper = n + 1.0 - r + psi;
            if !(lower > 0.0 && upper > 0.0) {
                return None;
            }
            let (ll, lu) = (lower.ln(), upper.ln());
            Some((
                ln_scale - gamma * ll - xi * lu,
                vec![1.0, -ll, -lu, -gamma / lower, -xi / upper],
            ))
        }
        RankModelSpec::Lav4 { gamma, xi, psi, .. } => {
            let upper = n - r + psi;
            if !(upper > 0.0) {
                return None;
            }
            let (lr, lu) = (r.ln(), upper.ln());
            // Internal order: ln κ, γ, ξ, ψ.
            Some((
                ln_scale + xi * lr - gamma * lu,
                vec![1.0, -lu, lr, -gamma / upper],
            ))
        }
    }
}

/// Model value at rank `r` of `n`.
pub fn eval_rank_model(spec: &RankModelSpec, r: usize, n: usize) -> Result<f64> {
    if r == 0 || r > n {
        return Err(Error::Domain(format!("rank {r} outside 1..={n}")));
    }
    if !(spec.scale() > 0.0) {
        return Err(Error::Domain(format!(
            "scale parameter must be positive, got {}",
            spec.scale()
        )));
    }
    let (g, _) = log_model(spec, r as f64, n as f64).ok_or_else(|| {
        Error::Domain(format!(
            "nonpositive base in {} at rank {r} of {n}",
            spec.variant()
        ))
    })?;
    Ok(g.exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankFitResult {
    pub spec: RankModelSpec,
    /// Standard errors in [`RankVariant::param_names`] order.
    pub std_errors: Vec<f64>,
    /// Raw-space `1 - SSE/SST`.
    pub r_squared: f64,
    pub sse: f64,
    /// Raw-space SSE of the log-space initializer.
    pub profile_sse: f64,
    pub n: usize,
    pub converged: bool,
}

impl RankFitResult {
    pub fn fitted(&self) -> Vec<f64> {
        (1..=self.n)
            .map(|r| eval_rank_model(&self.spec, r, self.n).unwrap_or(f64::NAN))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankFitOptions {
    /// Upper end of the ψ profile bracket `(0, psi_max]` for Lav4.
    pub psi_max: f64,
    pub tolerance: f64,
}

impl Default for RankFitOptions {
    fn default() -> Self {
        RankFitOptions {
            psi_max: 2.0,
            tolerance: 1e-10,
        }
    }
}

fn log_ols(design: DMatrix<f64>, ln_y: &DVector<f64>) -> Result<lsq::LinearFit> {
    lsq::linear_least_squares(&design, ln_y)
}

fn design(n: usize, cols: impl Fn(f64) -> Vec<f64>) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = (1..=n).map(|r| cols(r as f64)).collect();
    let k = rows[0].len();
    DMatrix::from_fn(n, k, |i, j| rows[i][j])
}

fn lav4_log_fit(ln_y: &DVector<f64>, n: usize, psi: f64) -> Result<lsq::LinearFit> {
    let nf = n as f64;
    log_ols(design(n, |r| vec![1.0, r.ln(), -(nf - r + psi).ln()]), ln_y)
}

/// Log-space starting point for each variant.
fn initial_spec(
    variant: RankVariant,
    ln_y: &DVector<f64>,
    n: usize,
    opts: &RankFitOptions,
) -> Result<RankModelSpec> {
    let nf = n as f64;
    let spec = match variant {
        RankVariant::Zipf => {
            let c = log_ols(design(n, |r| vec![1.0, -r.ln()]), ln_y)?.coef;
            RankModelSpec::Zipf {
                d: c[0].exp(),
                alpha: c[1],
            }
        }
        RankVariant::YuleSimon => {
            let c = log_ols(design(n, |r| vec![1.0, -r.ln(), -r]), ln_y)?.coef;
            RankModelSpec::YuleSimon {
                d: c[0].exp(),
                alpha: c[1],
                lambda: c[2],
            }
        }
        RankVariant::Lav3 | RankVariant::Lav5 => {
            let c = log_ols(
                design(n, |r| vec![1.0, -r.ln(), -(nf - r + 1.0).ln()]),
                ln_y,
            )?
            .coef;
            if variant == RankVariant::Lav3 {
                RankModelSpec::Lav3 {
                    kappa: c[0].exp(),
                    gamma: c[1],
                    xi: c[2],
                }
            } else {
                RankModelSpec::Lav5 {
                    kappa: c[0].exp(),
                    gamma: c[1],
                    xi: c[2],
                    phi: 0.0,
                    psi: 0.0,
                }
            }
        }
        RankVariant::Lav4 => {
            let profile = |psi: f64| {
                lav4_log_fit(ln_y, n, psi)
                    .map(|f| f.sse)
                    .unwrap_or(f64::INFINITY)
            };
            let lo = opts.psi_max * 1e-6;
            let cells = 40usize;
            let step = (opts.psi_max - lo) / cells as f64;
            let grid: Vec<f64> = (0..=cells).map(|i| lo + i as f64 * step).collect();
            let sse: Vec<f64> = grid.iter().map(|&p| profile(p)).collect();
            let best = (0..sse.len())
                .min_by(|&a, &b| sse[a].total_cmp(&sse[b]))
                .unwrap_or(0);
            if !sse[best].is_finite() {
                return Err(Error::SingularDesign(
                    "Lav4 log-space design is singular".into(),
                ));
            }
            let (psi, _) = lsq::golden_section(
                profile,
                grid[best.saturating_sub(1)],
                grid[(best + 1).min(cells)],
                opts.tolerance,
            );
            let c = lav4_log_fit(ln_y, n, psi)?.coef;
            RankModelSpec::Lav4 {
                kappa: c[0].exp(),
                xi: c[1],
                gamma: c[2],
                psi,
            }
        }
    };
    Ok(spec)
}

fn raw_evaluation(variant: RankVariant, theta: &DVector<f64>, n: usize) -> Evaluation {
    let spec = RankModelSpec::from_theta(variant, theta);
    let nf = n as f64;
    let k = theta.len();
    let mut f = DVector::zeros(n);
    let mut j = DMatrix::zeros(n, k);
    for i in 0..n {
        let (g, grad) = log_model(&spec, (i + 1) as f64, nf)?;
        let v = g.exp();
        if !v.is_finite() {
            return None;
        }
        f[i] = v;
        for (c, dg) in grad.iter().enumerate() {
            j[(i, c)] = v * dg;
        }
    }
    Some((f, j))
}

pub fn fit_rank_model(series: &RankedSeries, variant: RankVariant) -> Result<RankFitResult> {
    fit_rank_model_with(series, variant, RankFitOptions::default())
}

/// Least-squares fit of a rank model to the ranked values (raw space).
pub fn fit_rank_model_with(
    series: &RankedSeries,
    variant: RankVariant,
    opts: RankFitOptions,
) -> Result<RankFitResult> {
    let n = series.n();
    let k = variant.param_count();
    if n < k + 2 {
        return Err(Error::InsufficientData(format!(
            "{variant} needs at least {} values, got {n}",
            k + 2
        )));
    }
    if let Some((r, v)) = series.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Domain(format!(
            "rank models need positive values; rank {r} has {v}"
        )));
    }
    if !(opts.psi_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "psi_max must be positive, got {}",
            opts.psi_max
        )));
    }
    let y = DVector::from_column_slice(series.values());
    let ln_y = y.map(f64::ln);

    let start = initial_spec(variant, &ln_y, n, &opts)?;
    let theta0 = start.to_theta();
    let (f0, _) = raw_evaluation(variant, &theta0, n)
        .ok_or_else(|| Error::Domain(format!("{variant} initializer left the model domain")))?;
    let profile_sse = (&y - f0).norm_squared();

    let (spec, sse, cov, converged) =
        match lsq::damped_gauss_newton(|t| raw_evaluation(variant, t, n), &y, theta0) {
            Ok(fit) if fit.sse <= profile_sse => (
                RankModelSpec::from_theta(variant, &fit.params),
                fit.sse,
                fit.cov_unscaled,
                fit.converged,
            ),
            _ => {
                let (_, j0) = raw_evaluation(variant, &start.to_theta(), n)
                    .ok_or_else(|| Error::Domain("initializer left the model domain".into()))?;
                (
                    start,
                    profile_sse,
                    (j0.transpose() * j0).try_inverse(),
                    false,
                )
            }
        };

    let mut std_errors = match &cov {
        Some(c) => lsq::standard_errors(c, sse, n - k),
        None => vec![f64::NAN; k],
    };
    // Delta method for the scale parameter fitted on the log scale.
    std_errors[0] *= spec.scale();

    Ok(RankFitResult {
        spec,
        std_errors,
        r_squared: lsq::r_squared(series.values(), sse),
        sse,
        profile_sse,
        n,
        converged,
    })
}

/// Ranks `values` ascending, then fits.
pub fn fit_rank_values(values: &[f64], variant: RankVariant) -> Result<RankFitResult> {
    fit_rank_model(&rank_ascending(values)?, variant)
}

/// Beta shape parameters from a Lav4 fit: `a = ξ₄ + 1`, `b = γ₄ + 1`.
pub fn rank_fit_to_beta(result: &RankFitResult) -> Result<BetaParams> {
    match result.spec {
        RankModelSpec::Lav4 { gamma, xi, .. } => BetaParams::new(xi + 1.0, gamma + 1.0),
        other => Err(Error::UnsupportedVariant(format!(
            "Beta correspondence is defined for lav4 only, got {}",
            other.variant()
        ))),
    }
}

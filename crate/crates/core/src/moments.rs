//! Central moments, Fisher–Pearson skewness, non-excess kurtosis and the
//! descriptive-statistics battery used for each group and for the S/K clouds.
//!
//! All moments use the population convention (divide by n). Deviations from
//! the mean are formed in two passes with a mean-correction term, so large
//! common offsets (EUR-scale totals) do not leak into the shape moments.

use serde::Serialize;

use crate::beta::help_variable;
use crate::error::{Error, Result};
use crate::ingest::GroupedDataset;

/// Default minimum group size for emitting an (S, K) point.
pub const DEFAULT_MIN_N: usize = 4;

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidArgument(format!(
            "non-finite value at index {i}"
        ))),
        None => Ok(()),
    }
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Mean and deviations from it.
fn deviations(values: &[f64]) -> (f64, Vec<f64>) {
    let n = values.len() as f64;
    let mean0 = compensated_sum(values.iter().copied()) / n;
    let mut dev: Vec<f64> = values.iter().map(|x| x - mean0).collect();
    let correction = compensated_sum(dev.iter().copied()) / n;
    for d in &mut dev {
        *d -= correction;
    }
    (mean0 + correction, dev)
}

fn central_sums(dev: &[f64]) -> (f64, f64, f64) {
    let n = dev.len() as f64;
    let (mut m2, mut m3, mut m4) = (
        CompensatedSum::default(),
        CompensatedSum::default(),
        CompensatedSum::default(),
    );
    for d in dev {
        let d2 = d * d;
        m2.add(d2);
        m3.add(d2 * d);
        m4.add(d2 * d2);
    }
    (m2.value() / n, m3.value() / n, m4.value() / n)
}

/// Central moments `[μ₁, ..., μ_order]` with `μ_i = (1/n) Σ (x - mean)^i`.
///
/// `μ₁` is zero by construction. A constant sample yields [`Error::ZeroVariance`].
pub fn central_moments(values: &[f64], order: usize) -> Result<Vec<f64>> {
    if !(2..=4).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "moment order must be 2, 3 or 4, got {order}"
        )));
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_finite(values)?;
    if values.len() == 1 {
        return Err(Error::DegenerateSample(
            "a single value has no central moments".into(),
        ));
    }
    let (_, dev) = deviations(values);
    let (m2, m3, m4) = central_sums(&dev);
    if m2 == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok([0.0, m2, m3, m4][..order].to_vec())
}

/// Skewness `μ₃ / μ₂^{3/2}` and non-excess kurtosis `μ₄ / μ₂²`.
pub fn shape_moments(values: &[f64]) -> Result<(f64, f64)> {
    let m = central_moments(values, 4)?;
    let (m2, m3, m4) = (m[1], m[2], m[3]);
    Ok((m3 / (m2 * m2.sqrt()), m4 / (m2 * m2)))
}

fn median_of(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Descriptive statistics of one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSummary {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub sum: f64,
    pub mean: f64,
    pub median: f64,
    pub rms: f64,
    pub std_dev: f64,
    pub variance: f64,
    pub std_err: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub mu_over_sigma: f64,
    /// Coefficient of variation σ/μ.
    pub cv: f64,
    /// `3 (μ - m) / σ`.
    pub nonparam_skew: f64,
    /// Help variable of (skewness, kurtosis); `None` when its denominator is not positive.
    pub rho: Option<f64>,
    pub outlier_low: f64,
    pub outlier_high: f64,
}

pub fn summarize(values: &[f64]) -> Result<MomentSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_finite(values)?;
    if values.len() < 2 {
        return Err(Error::DegenerateSample(
            "summary needs at least two values".into(),
        ));
    }
    let n = values.len();
    let nf = n as f64;
    let (mean, dev) = deviations(values);
    let (variance, m3, m4) = central_sums(&dev);
    if variance == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let std_dev = variance.sqrt();
    let skewness = m3 / (variance * std_dev);
    let kurtosis = m4 / (variance * variance);
    let median = median_of(values);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    Ok(MomentSummary {
        n,
        min,
        max,
        sum: compensated_sum(values.iter().copied()),
        mean,
        median,
        rms: (compensated_sum(values.iter().map(|x| x * x)) / nf).sqrt(),
        std_dev,
        variance,
        std_err: std_dev / nf.sqrt(),
        skewness,
        kurtosis,
        mu_over_sigma: mean / std_dev,
        cv: std_dev / mean,
        nonparam_skew: 3.0 * (mean - median) / std_dev,
        rho: help_variable(skewness, kurtosis).ok(),
        outlier_low: mean - 2.0 * std_dev,
        outlier_high: mean + 2.0 * std_dev,
    })
}

/// One group's (skewness, kurtosis) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SKPoint {
    pub group_key: String,
    pub s: f64,
    pub k: f64,
    pub n: usize,
}

/// Groups that did not produce an (S, K) point, with the reason.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkippedReport {
    pub skipped: Vec<(String, String)>,
}

impl SkippedReport {
    pub fn contains(&self, key: &str) -> bool {
        self.skipped.iter().any(|(k, _)| k == key)
    }

    pub fn is_empty(&self) -> bool {
        self.skipped.is_empty()
    }
}

/// One (S, K) point per group with at least `min_n` values and positive variance,
/// in group-key order.
pub fn group_sk_points(
    data: &GroupedDataset,
    min_n: usize,
) -> Result<(Vec<SKPoint>, SkippedReport)> {
    let mut points = Vec::new();
    let mut report = SkippedReport::default();
    for (key, values) in &data.groups {
        if values.len() < min_n.max(2) {
            report.skipped.push((
                key.clone(),
                format!("{} values < min_n {}", values.len(), min_n),
            ));
            continue;
        }
        match shape_moments(values) {
            Ok((s, k)) => points.push(SKPoint {
                group_key: key.clone(),
                s,
                k,
                n: values.len(),
            }),
            Err(Error::ZeroVariance) => report
                .skipped
                .push((key.clone(), "zero variance".to_string())),
            Err(e) => return Err(e),
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyResult(format!(
            "no group reached min_n = {min_n} with positive variance ({} groups skipped)",
            report.skipped.len()
        )));
    }
    Ok((points, report))
}

/// Indices of values strictly outside `(μ - 2σ, μ + 2σ)`.
pub fn detect_outliers(values: &[f64], mean: f64, std_dev: f64) -> Vec<usize> {
    let (lo, hi) = (mean - 2.0 * std_dev, mean + 2.0 * std_dev);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v < lo || v > hi)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]`; bins are right-open except the last.
/// A constant sample gives a single bin holding every value.
pub fn histogram(values: &[f64], n_bins: usize) -> Result<Vec<HistogramBin>> {
    if n_bins == 0 {
        return Err(Error::InvalidArgument(
            "histogram needs at least one bin".into(),
        ));
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_finite(values)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(vec![HistogramBin {
            low: min,
            high: max,
            count: values.len(),
        }]);
    }
    let width = (max - min) / n_bins as f64;
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            low: min + i as f64 * width,
            high: if i + 1 == n_bins {
                max
            } else {
                min + (i + 1) as f64 * width
            },
            count: 0,
        })
        .collect();
    for &v in values {
        let mut idx = (((v - min) / width).floor() as usize).min(n_bins - 1);
        // Edges are computed from `min + i * width`; settle rounding at the boundary.
        while idx > 0 && v < bins[idx].low {
            idx -= 1;
        }
        while idx + 1 < n_bins && v >= bins[idx + 1].low {
            idx += 1;
        }
        bins[idx].count += 1;
    }
    Ok(bins)
}

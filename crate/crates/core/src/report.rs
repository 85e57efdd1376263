//! Text and CSV renderings of analysis results.
//!
//! Key-value and CSV outputs print every number at full round-trip precision.
//! Only [`summary_table`] rounds, since it is meant for reading.

use std::fmt::Write as _;

use crate::beta::{cdf_curve, BetaCalibration, BetaParams};
use crate::error::Result;
use crate::ksfit::KSFitResult;
use crate::moments::{HistogramBin, MomentSummary, SKPoint};
use crate::ranksize::{RankFitResult, RankedSeries};
use crate::urnsim::SimResult;

/// Round-trip representation of a float (`NaN`, `inf` spelled out).
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn rounded(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if a != 0.0 && !(1e-3..1e9).contains(&a) {
        format!("{x:.4e}")
    } else {
        format!("{x:.4}")
    }
}

/// Row labels of the descriptive-statistics table.
pub const SUMMARY_ROWS: [&str; 18] = [
    "Min.",
    "Max.",
    "Sum",
    "N_p",
    "Mean (μ)",
    "Median (m)",
    "RMS",
    "St. Dev. (σ)",
    "Variance",
    "Std Err.",
    "Skewn.",
    "Kurt.",
    "μ/σ",
    "CV",
    "3(μ−m)/σ",
    "ρ",
    "μ−2σ",
    "μ+2σ",
];

fn summary_cells(s: &MomentSummary) -> [String; 18] {
    [
        rounded(s.min),
        rounded(s.max),
        rounded(s.sum),
        s.n.to_string(),
        rounded(s.mean),
        rounded(s.median),
        rounded(s.rms),
        rounded(s.std_dev),
        rounded(s.variance),
        rounded(s.std_err),
        rounded(s.skewness),
        rounded(s.kurtosis),
        rounded(s.mu_over_sigma),
        rounded(s.cv),
        rounded(s.nonparam_skew),
        s.rho.map_or_else(|| "undefined".to_string(), rounded),
        rounded(s.outlier_low),
        rounded(s.outlier_high),
    ]
}

/// Descriptive statistics side by side, one column per named sample (rounded).
/// Kurtosis is the non-excess form and σ uses the population divisor.
pub fn summary_table(columns: &[(&str, &MomentSummary)]) -> String {
    let cells: Vec<[String; 18]> = columns.iter().map(|(_, s)| summary_cells(s)).collect();
    let label_width = SUMMARY_ROWS
        .iter()
        .map(|r| r.chars().count())
        .max()
        .unwrap_or(0);
    let widths: Vec<usize> = columns
        .iter()
        .zip(&cells)
        .map(|((name, _), col)| {
            col.iter()
                .map(String::len)
                .chain([name.len()])
                .max()
                .unwrap_or(0)
        })
        .collect();

    let mut out = String::new();
    let _ = write!(out, "{:label_width$}", "");
    for ((name, _), w) in columns.iter().zip(&widths) {
        let _ = write!(out, "  {name:>w$}");
    }
    out.push('\n');
    for (i, label) in SUMMARY_ROWS.iter().enumerate() {
        let pad = label_width - label.chars().count();
        let _ = write!(out, "{label}{:pad$}", "");
        for (col, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", col[i]);
        }
        out.push('\n');
    }
    out
}

pub fn sk_points_csv(points: &[SKPoint]) -> String {
    let mut out = String::from("group,s,k,n\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.group_key, num(p.s), num(p.k), p.n);
    }
    out
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("low,high,count\n");
    for b in bins {
        let _ = writeln!(out, "{},{},{}", num(b.low), num(b.high), b.count);
    }
    out
}

fn kv(out: &mut String, key: &str, value: impl AsRef<str>) {
    let _ = writeln!(out, "{key} = {}", value.as_ref());
}

pub fn ks_fit_text(fit: &KSFitResult) -> String {
    let mut out = String::new();
    kv(&mut out, "model", format!("{:?}", fit.model).to_lowercase());
    kv(&mut out, "p", num(fit.p));
    kv(&mut out, "q", num(fit.q));
    kv(&mut out, "nu", num(fit.nu));
    kv(&mut out, "se_p", num(fit.se_p));
    kv(&mut out, "se_q", num(fit.se_q));
    kv(&mut out, "se_nu", num(fit.se_nu));
    kv(&mut out, "r_squared", num(fit.r_squared));
    kv(&mut out, "sse", num(fit.sse));
    kv(&mut out, "n_points", fit.n_points.to_string());
    if let Some(w) = &fit.boundary_warning {
        kv(&mut out, "warning", w);
    }
    out
}

pub fn ks_residuals_csv(fit: &KSFitResult) -> String {
    let mut out = String::from("group,s,k,fitted,residual\n");
    for r in &fit.residuals {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.group_key,
            num(r.s),
            num(r.k),
            num(r.fitted),
            num(r.residual)
        );
    }
    out
}

/// Fitted curve on `n` evenly spaced S values spanning the data.
pub fn ks_curve_csv(fit: &KSFitResult, n: usize) -> String {
    let mut out = String::from("s,k\n");
    let lo = fit
        .residuals
        .iter()
        .map(|r| r.s)
        .fold(f64::INFINITY, f64::min);
    let hi = fit
        .residuals
        .iter()
        .map(|r| r.s)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) || n < 2 {
        return out;
    }
    for i in 0..n {
        let s = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let _ = writeln!(out, "{},{}", num(s), num(fit.predict(s)));
    }
    out
}

pub fn rank_fit_text(fit: &RankFitResult) -> String {
    let mut out = String::new();
    let variant = fit.spec.variant();
    kv(&mut out, "model", variant.to_string());
    for ((name, value), se) in variant
        .param_names()
        .iter()
        .zip(fit.spec.params())
        .zip(&fit.std_errors)
    {
        kv(&mut out, name, num(value));
        kv(&mut out, &format!("se_{name}"), num(*se));
    }
    kv(&mut out, "r_squared", num(fit.r_squared));
    kv(&mut out, "sse", num(fit.sse));
    kv(&mut out, "profile_sse", num(fit.profile_sse));
    kv(&mut out, "n", fit.n.to_string());
    kv(&mut out, "converged", fit.converged.to_string());
    out
}

pub fn rank_series_csv(series: &RankedSeries, fit: Option<&RankFitResult>) -> String {
    let fitted = fit.map(RankFitResult::fitted);
    let mut out = String::from(if fitted.is_some() {
        "rank,value,fitted\n"
    } else {
        "rank,value\n"
    });
    for (r, v) in series.iter() {
        match &fitted {
            Some(f) => {
                let _ = writeln!(out, "{r},{},{}", num(v), num(f[r - 1]));
            }
            None => {
                let _ = writeln!(out, "{r},{}", num(v));
            }
        }
    }
    out
}

pub fn beta_params_text(route: &str, params: &BetaParams) -> String {
    let mut out = String::new();
    kv(&mut out, "route", route);
    kv(&mut out, "a", num(params.a));
    kv(&mut out, "b", num(params.b));
    kv(&mut out, "a_plus_b", num(params.a + params.b));
    kv(&mut out, "mean", num(params.mean()));
    out
}

pub fn calibration_text(route: &str, cal: &BetaCalibration) -> String {
    let mut out = String::new();
    kv(&mut out, "route", route);
    kv(&mut out, "s", num(cal.s_in));
    kv(&mut out, "k", num(cal.k_in));
    kv(&mut out, "rho", num(cal.rho));
    kv(&mut out, "ab", num(cal.ab_product));
    kv(&mut out, "discriminant", num(cal.discriminant));
    kv(&mut out, "root_small", num(cal.roots.0));
    kv(&mut out, "root_large", num(cal.roots.1));
    kv(&mut out, "a", num(cal.selected.a));
    kv(&mut out, "b", num(cal.selected.b));
    out
}

/// Beta CDF on `n` grid points with a `# a=…,b=…` comment header.
pub fn cdf_csv(params: &BetaParams, n: usize) -> Result<String> {
    let mut out = format!("# a={},b={}\nx,cdf\n", num(params.a), num(params.b));
    for (x, c) in cdf_curve(*params, n)? {
        let _ = writeln!(out, "{},{}", num(x), num(c));
    }
    Ok(out)
}

/// Observed size distribution next to the limit law tabulated on the same sizes.
pub fn simulation_csv(result: &SimResult, limit: &std::collections::BTreeMap<u64, f64>) -> String {
    let mut out = String::from("k,count,frequency,limit_pmf\n");
    for (k, c) in &result.counts {
        let _ = writeln!(
            out,
            "{k},{c},{},{}",
            num(result.empirical_pmf[k]),
            limit.get(k).map_or_else(|| "NaN".to_string(), |p| num(*p))
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::summarize;

    #[test]
    fn full_precision_numbers() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(2.0), "2.0");
        assert_eq!(num(1e-20), "1e-20");
        let x = 1.0 / 3.0;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn summary_table_has_every_row() {
        let s = summarize(&[1.0, 2.0, 3.0, 10.0]).unwrap();
        let table = summary_table(&[("x", &s), ("y", &s)]);
        assert_eq!(table.lines().count(), 1 + SUMMARY_ROWS.len());
        for label in SUMMARY_ROWS {
            assert!(table.contains(label), "{label}");
        }
        assert!(table.contains("16.0000"));
    }

    #[test]
    fn sk_csv_layout() {
        let pts = vec![SKPoint {
            group_key: "AA".into(),
            s: 0.5,
            k: 2.25,
            n: 7,
        }];
        assert_eq!(sk_points_csv(&pts), "group,s,k,n\nAA,0.5,2.25,7\n");
    }

    #[test]
    fn cdf_header() {
        let text = cdf_csv(&BetaParams { a: 1.0, b: 2.0 }, 3).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(&lines[..3], &["# a=1.0,b=2.0", "x,cdf", "0.0,0.0"]);
        assert_eq!(lines[4], "1.0,1.0");
        let (x, c) = lines[3].split_once(',').unwrap();
        assert_eq!(x, "0.5");
        assert!((c.parse::<f64>().unwrap() - 0.75).abs() < 1e-15);
    }
}

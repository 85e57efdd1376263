mod common;

use proptest::prelude::*;

use skewkurt::beta::{
    beta_cdf, beta_kurtosis, beta_skewness, calibrate_from_sk, help_variable, ln_beta, ln_gamma,
    regularized_incomplete_beta, urn_limit_pmf, BetaParams,
};
use skewkurt::ingest::GroupedDataset;
use skewkurt::ksfit::fit_quadratic;
use skewkurt::moments::{group_sk_points, histogram, shape_moments, summarize, SKPoint};
use skewkurt::ranksize::{fit_rank_values, RankVariant};
use skewkurt::urnsim::{run, Fenwick, UrnConfig};

use common::{beta_shape_closed, integer_shape, rel_err};

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(1.0)
}

fn varied_ints() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-1000i64..1000, 2..300)
        .prop_filter("not constant", |v| v.iter().any(|&x| x != v[0]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn shape_moments_match_exact_integer_oracle(values in varied_ints()) {
        let xs: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        let (s, k) = shape_moments(&xs).unwrap();
        let (s_ref, k_ref) = integer_shape(&values).unwrap();
        prop_assert!(close(s, s_ref, 1e-10), "{s} vs {s_ref}");
        prop_assert!(rel_err(k, k_ref) <= 1e-10, "{k} vs {k_ref}");
    }

    #[test]
    fn pearson_bound_holds(values in prop::collection::vec(-1e6f64..1e6, 2..200)) {
        if let Ok((s, k)) = shape_moments(&values) {
            prop_assert!(k >= s * s + 1.0 - 1e-12 * k.max(1.0), "K={k} S={s}");
        }
    }

    #[test]
    fn shape_is_affine_invariant(values in varied_ints(), shift in -1000i64..1000, pow in -3i32..4) {
        let xs: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        let scale = 2f64.powi(pow);
        let ys: Vec<f64> = xs.iter().map(|x| x * scale + shift as f64).collect();
        let (s1, k1) = shape_moments(&xs).unwrap();
        let (s2, k2) = shape_moments(&ys).unwrap();
        prop_assert!(close(s2, s1, 1e-10));
        prop_assert!(close(k2, k1, 1e-10));
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let (s3, k3) = shape_moments(&neg).unwrap();
        prop_assert!(close(s3, -s1, 1e-12) && close(k3, k1, 1e-12));
    }

    #[test]
    fn summary_identities(values in prop::collection::vec(0.0f64..1e4, 2..200)) {
        if let Ok(s) = summarize(&values) {
            prop_assert!(s.min <= s.median && s.median <= s.max);
            prop_assert!(s.min <= s.mean && s.mean <= s.max);
            prop_assert!(close(s.rms * s.rms, s.mean * s.mean + s.variance, 1e-10));
            prop_assert!(close(s.std_dev * s.std_dev, s.variance, 1e-12));
            prop_assert!(close(s.outlier_high - s.outlier_low, 4.0 * s.std_dev, 1e-12));
            if let Some(rho) = s.rho {
                prop_assert!(close(rho, help_variable(s.skewness, s.kurtosis).unwrap(), 1e-15));
            }
        }
    }

    #[test]
    fn histogram_conserves_count(values in prop::collection::vec(-1e3f64..1e3, 1..300), bins in 1usize..40) {
        let h = histogram(&values, bins).unwrap();
        prop_assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), values.len());
        prop_assert!(h.windows(2).all(|w| w[0].high == w[1].low));
    }

    #[test]
    fn sk_points_respect_min_n(sizes in prop::collection::vec(1usize..12, 1..20), min_n in 2usize..8) {
        let groups = sizes
            .iter()
            .enumerate()
            .map(|(g, &n)| (format!("G{g:02}"), (0..n).map(|i| ((i * i + g) % 7) as f64).collect::<Vec<_>>()))
            .collect();
        let data = GroupedDataset { groups, value_label: "v".into() };
        match group_sk_points(&data, min_n) {
            Ok((points, skipped)) => {
                prop_assert_eq!(points.len() + skipped.skipped.len(), sizes.len());
                prop_assert!(points.iter().all(|p| p.n >= min_n));
            }
            Err(e) => prop_assert_eq!(e.exit_code(), 3),
        }
    }

    #[test]
    fn beta_shape_roundtrip(a in 0.3f64..30.0, b in 0.3f64..30.0) {
        let p = BetaParams::new(a, b).unwrap();
        let (s, k) = (beta_skewness(p), beta_kurtosis(p));
        let (s_ref, k_ref) = beta_shape_closed(a, b);
        prop_assert!(close(s, s_ref, 1e-12) && close(k, k_ref, 1e-12));
        prop_assert!(close(help_variable(s, k).unwrap(), a + b, 1e-9));
        let cal = calibrate_from_sk(s, k).unwrap();
        prop_assert!(close(cal.selected.a, a, 1e-6) && close(cal.selected.b, b, 1e-6));
        prop_assert!(close(cal.selected.a + cal.selected.b, cal.rho, 1e-9));
        prop_assert!(close(cal.selected.a * cal.selected.b, cal.ab_product, 1e-9));
        prop_assert!(k >= s * s + 1.0);
    }

    #[test]
    fn ln_gamma_matches_reference(x in 1e-3f64..1e5) {
        let want = statrs::function::gamma::ln_gamma(x);
        prop_assert!((ln_gamma(x).unwrap() - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn ln_beta_is_symmetric_and_recursive(a in 0.1f64..50.0, b in 0.1f64..50.0) {
        let lb = ln_beta(a, b).unwrap();
        prop_assert_eq!(lb, ln_beta(b, a).unwrap());
        // B(a + 1, b) = B(a, b) · a / (a + b)
        let next = ln_beta(a + 1.0, b).unwrap();
        prop_assert!((next - (lb + (a / (a + b)).ln())).abs() <= 1e-12 * lb.abs().max(1.0));
    }

    #[test]
    fn incomplete_beta_matches_reference(x in 0.0f64..=1.0, a in 0.2f64..40.0, b in 0.2f64..40.0) {
        let got = regularized_incomplete_beta(x, a, b).unwrap();
        let want = statrs::function::beta::beta_reg(a, b, x);
        prop_assert!((got - want).abs() <= 1e-10, "I({x}; {a}, {b}) = {got} vs {want}");
        let mirror = regularized_incomplete_beta(1.0 - x, b, a).unwrap();
        prop_assert!((got + mirror - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn beta_cdf_is_monotone(a in 0.2f64..20.0, b in 0.2f64..20.0) {
        let p = BetaParams::new(a, b).unwrap();
        let mut prev = 0.0;
        for i in 0..=64 {
            let c = beta_cdf(i as f64 / 64.0, p).unwrap();
            prop_assert!((0.0..=1.0).contains(&c) && c >= prev - 1e-15);
            prev = c;
        }
    }

    #[test]
    fn urn_pmf_ratio_identity(k0 in 1u64..6, a_off in 0.01f64..5.0, b in 1.01f64..6.0, k in 0u64..2000) {
        let a = a_off - k0 as f64;
        let k = k0 + k;
        let ratio = urn_limit_pmf(k + 1, k0, a, b).unwrap() / urn_limit_pmf(k, k0, a, b).unwrap();
        let want = (k as f64 + a) / (k as f64 + a + b);
        prop_assert!((ratio - want).abs() <= 1e-12);
    }

    #[test]
    fn fenwick_matches_linear_scan(weights in prop::collection::vec(0.0f64..10.0, 1..80), u in 0.0f64..1.0) {
        let mut f = Fenwick::new();
        for &w in &weights {
            f.push(w);
        }
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 0.0);
        let target = u * total;
        let mut acc = 0.0;
        let mut want = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if acc + w > target && *w > 0.0 {
                want = i;
                break;
            }
            acc += w;
        }
        let got = f.find(target);
        // Near bucket edges the two summation orders may round differently.
        let edge = (f.prefix_sum(got) - target).abs() < 1e-9 || (f.prefix_sum(got + 1) - target).abs() < 1e-9;
        prop_assert!(got == want || edge, "got {got}, want {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn urn_conserves_balls(k0 in 1u64..5, a_off in 0.1f64..3.0, alpha in 0.0f64..=1.0, steps in 0u64..3000, seed in any::<u64>()) {
        let config = UrnConfig::new(k0, a_off - k0 as f64, alpha, steps, seed).unwrap();
        let r = run(&config).unwrap();
        let new_urns = r.n_urns - 1;
        prop_assert_eq!(r.total_balls, k0 + new_urns * k0 + (steps - new_urns));
        prop_assert!(r.urn_sizes.iter().all(|&k| k >= k0));
        prop_assert_eq!(r.urn_sizes.iter().sum::<u64>(), r.total_balls);
        prop_assert!((r.empirical_pmf.values().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert_eq!(run(&config).unwrap(), r);
    }

    #[test]
    fn quadratic_fit_is_order_invariant(mut s in prop::collection::vec(0.1f64..8.0, 3..40), seed in any::<u64>()) {
        s.dedup();
        let points: Vec<SKPoint> = s
            .iter()
            .enumerate()
            .map(|(i, &s)| SKPoint { group_key: format!("G{i}"), s, k: 1.1 * s * s + 0.3 + ((i * 7) % 5) as f64 * 0.01, n: 10 })
            .collect();
        let mut shuffled = points.clone();
        let len = shuffled.len();
        shuffled.rotate_left((seed % len as u64) as usize);
        shuffled.reverse();
        match (fit_quadratic(&points), fit_quadratic(&shuffled)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "fit succeeded on one order only"),
        }
    }

    #[test]
    fn rank_fit_is_order_invariant(values in prop::collection::vec(0.5f64..50.0, 10..60), rot in any::<usize>()) {
        let mut shuffled = values.clone();
        let len = shuffled.len();
        shuffled.rotate_left(rot % len);
        shuffled.reverse();
        let a = fit_rank_values(&values, RankVariant::Zipf);
        let b = fit_rank_values(&shuffled, RankVariant::Zipf);
        prop_assert_eq!(a.ok(), b.ok());
    }
}

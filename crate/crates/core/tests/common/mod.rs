//! Independent reference computations shared by the integration suites.

#![allow(dead_code)]

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss–Kronrod 7/15 on one interval: (Kronrod estimate, |K - G|).
fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = gk15(f, lo, hi);
    if err <= tol || depth == 0 {
        return k;
    }
    let mid = 0.5 * (lo + hi);
    adaptive(f, lo, mid, 0.5 * tol, depth - 1) + adaptive(f, mid, hi, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Kronrod integral of a smooth integrand.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    adaptive(&f, lo, hi, tol, 40)
}

/// Skewness and non-excess kurtosis of Beta(a, b) by quadrature.
///
/// With `x = sin²θ` the weight `x^{a-1} (1-x)^{b-1} dx` becomes
/// `2 sin^{2a-1}θ cos^{2b-1}θ dθ`, smooth on `[0, π/2]` for every `a, b >= 1/2`.
/// The normalizer is integrated too, so no Beta function is needed.
pub fn beta_shape_by_quadrature(a: f64, b: f64) -> (f64, f64) {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let tol = 1e-15;
    let weight = |t: f64| 2.0 * t.sin().powf(2.0 * a - 1.0) * t.cos().powf(2.0 * b - 1.0);
    let m0 = integrate(weight, 0.0, half_pi, tol);
    let mean = integrate(|t| t.sin().powi(2) * weight(t), 0.0, half_pi, tol) / m0;
    let central = |k: i32| {
        integrate(
            |t| (t.sin().powi(2) - mean).powi(k) * weight(t),
            0.0,
            half_pi,
            tol,
        ) / m0
    };
    let (m2, m3, m4) = (central(2), central(3), central(4));
    (m3 / m2.powf(1.5), m4 / (m2 * m2))
}

/// Exact skewness and kurtosis of an integer sample via 128-bit power sums.
///
/// With `A = n Σx² - (Σx)²`, `B = n² Σx³ - 3n Σx Σx² + 2 (Σx)³` and
/// `C = n³ Σx⁴ - 4n² Σx Σx³ + 6n (Σx)² Σx² - 3 (Σx)⁴`, `S = B / A^{3/2}` and
/// `K = C / A²`. Only the final divisions round.
pub fn integer_shape(values: &[i64]) -> Option<(f64, f64)> {
    let n = values.len() as i128;
    let (mut s1, mut s2, mut s3, mut s4) = (0i128, 0i128, 0i128, 0i128);
    for &v in values {
        let x = v as i128;
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
    }
    let a = n * s2 - s1 * s1;
    if a == 0 {
        return None;
    }
    let b = n * n * s3 - 3 * n * s1 * s2 + 2 * s1 * s1 * s1;
    let c = n * n * n * s4 - 4 * n * n * s1 * s3 + 6 * n * s1 * s1 * s2 - 3 * s1 * s1 * s1 * s1;
    let af = a as f64;
    Some((b as f64 / af.powf(1.5), c as f64 / (af * af)))
}

/// Closed-form Beta skewness and non-excess kurtosis.
pub fn beta_shape_closed(a: f64, b: f64) -> (f64, f64) {
    let s = 2.0 * (b - a) * (a + b + 1.0).sqrt() / ((a + b + 2.0) * (a * b).sqrt());
    let excess = 6.0 * ((a - b).powi(2) * (a + b + 1.0) - a * b * (a + b + 2.0))
        / (a * b * (a + b + 2.0) * (a + b + 3.0));
    (s, 3.0 + excess)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

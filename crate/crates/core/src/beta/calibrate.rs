use serde::Serialize;

use super::BetaParams;
use crate::error::{Error, Result};

/// Tolerance below zero at which a discriminant is treated as an exact double root.
const DISCRIMINANT_SLACK: f64 = 1e-12;
/// Disagreement allowed between the closed-form roots and direct quadratic roots,
/// on top of the conditioning term for nearly equal roots.
const ROOT_AGREEMENT: f64 = 1e-9;

/// Result of inverting a (skewness, kurtosis) pair into Beta shape parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaCalibration {
    pub s_in: f64,
    pub k_in: f64,
    /// Help variable; equals `a + b` for a Beta law.
    pub rho: f64,
    pub ab_product: f64,
    /// `1 - 4ab / rho^2`, clamped at zero when negative by rounding only.
    pub discriminant: f64,
    /// Smaller and larger solution of `x (rho - x) = ab`.
    pub roots: (f64, f64),
    pub selected: BetaParams,
}

/// `rho = 6 (k - s^2 - 1) / (6 + 3 s^2 - 2 k)`.
///
/// The denominator vanishes on the normal limit `k = 3 + 1.5 s^2`; pairs at or beyond
/// it are not representable by a Beta law.
pub fn help_variable(s: f64, k: f64) -> Result<f64> {
    let s2 = s * s;
    let denominator = 6.0 + 3.0 * s2 - 2.0 * k;
    if !(denominator > 0.0) {
        return Err(Error::NotBetaRepresentable { denominator });
    }
    Ok(6.0 * (k - s2 - 1.0) / denominator)
}

/// Method-of-moments Beta parameters from skewness `s` and non-excess kurtosis `k`.
///
/// With `rho = a + b` from [`help_variable`],
/// `ab = 6 rho^2 (rho+1) / ((rho+2)(rho+3) k - 3 (rho-6)(rho+1))` and the two
/// roots of `x (rho - x) = ab` are `rho/2 [1 ± sqrt(1 - 24 (rho+1) / D)]`.
/// For positive skewness the larger root is `b`, for negative skewness it is `a`.
pub fn calibrate_from_sk(s: f64, k: f64) -> Result<BetaCalibration> {
    let rho = help_variable(s, k)?;
    let d = (rho + 2.0) * (rho + 3.0) * k - 3.0 * (rho - 6.0) * (rho + 1.0);
    let ab = 6.0 * rho * rho * (rho + 1.0) / d;
    let mut discriminant = 1.0 - 24.0 * (rho + 1.0) / d;

    if !(rho > 0.0) || !(ab > 0.0) || !ab.is_finite() || discriminant < -DISCRIMINANT_SLACK {
        return Err(Error::InfeasibleMomentPair {
            rho,
            ab_product: ab,
            discriminant,
        });
    }
    discriminant = discriminant.max(0.0);

    let half = 0.5 * rho;
    let root = discriminant.sqrt();
    let roots = (half * (1.0 - root), half * (1.0 + root));

    let direct_disc = (rho * rho - 4.0 * ab).max(0.0).sqrt();
    let direct = (0.5 * (rho - direct_disc), 0.5 * (rho + direct_disc));
    // Near a double root, rounding in either discriminant moves the roots by about rho·sqrt(eps).
    let tolerance = ROOT_AGREEMENT * rho.max(1.0) + rho * (4.0 * f64::EPSILON).sqrt();
    if (roots.0 - direct.0).abs() > tolerance || (roots.1 - direct.1).abs() > tolerance {
        return Err(Error::InternalAssertion(format!(
            "closed-form roots {roots:?} disagree with quadratic roots {direct:?}"
        )));
    }

    let (a, b) = if s > 0.0 {
        (roots.0, roots.1)
    } else if s < 0.0 {
        (roots.1, roots.0)
    } else {
        (half, half)
    };
    let selected = BetaParams::new(a, b).map_err(|_| Error::InfeasibleMomentPair {
        rho,
        ab_product: ab,
        discriminant,
    })?;

    Ok(BetaCalibration {
        s_in: s,
        k_in: k,
        rho,
        ab_product: ab,
        discriminant,
        roots,
        selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beta::{beta_kurtosis, beta_skewness};

    #[test]
    fn help_variable_hand_cases() {
        assert!((help_variable(0.0, 1.8).unwrap() - 2.0).abs() < 1e-14);
        let s = 4.0 / (5.0 * 2f64.sqrt());
        assert!((help_variable(s, 2.4).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(
            help_variable(0.0, 3.0),
            Err(Error::NotBetaRepresentable { .. })
        ));
    }

    #[test]
    fn help_variable_reproduces_published_rho_rows() {
        // (S, K, rho) rows of the published descriptive tables; K there is the
        // tabulated kurtosis column fed directly into the help variable.
        let rows = [
            (0.87472, 1.6629, -0.1234, 1e-4),
            (2.5531, 10.238, 3.2129, 1e-3),
            (1.0765, 2.2291, 0.0840, 1e-4),
            (3.6571, 15.873, 0.6254, 1e-3),
            (49.490, 2994.7, 2.4020, 2e-2),
        ];
        for (s, k, rho, tol) in rows {
            let got = help_variable(s, k).unwrap();
            assert!((got - rho).abs() < tol, "({s}, {k}): {got} vs {rho}");
        }
    }

    #[test]
    fn calibrate_hand_case_one_two() {
        let s = 4.0 / (5.0 * 2f64.sqrt());
        let cal = calibrate_from_sk(s, 2.4).unwrap();
        assert!((cal.rho - 3.0).abs() < 1e-12);
        assert!((cal.ab_product - 2.0).abs() < 1e-12);
        assert!((cal.selected.a - 1.0).abs() < 1e-9);
        assert!((cal.selected.b - 2.0).abs() < 1e-9);
    }

    #[test]
    fn calibrate_uniform() {
        let cal = calibrate_from_sk(0.0, 1.8).unwrap();
        assert!((cal.selected.a - 1.0).abs() < 1e-12);
        assert!((cal.selected.b - 1.0).abs() < 1e-12);
        assert_eq!(cal.roots.0, cal.roots.1);
    }

    #[test]
    fn negative_skew_swaps_selection() {
        let p = BetaParams::new(4.0, 1.5).unwrap();
        let cal = calibrate_from_sk(beta_skewness(p), beta_kurtosis(p)).unwrap();
        assert!((cal.selected.a - 4.0).abs() < 1e-9);
        assert!((cal.selected.b - 1.5).abs() < 1e-9);
    }

    #[test]
    fn published_pairs_roundtrip() {
        for &(a, b, rho) in &[(0.7556, 4.9668, 5.7224), (0.8493, 5.0623, 5.9116)] {
            let p = BetaParams::new(a, b).unwrap();
            let cal = calibrate_from_sk(beta_skewness(p), beta_kurtosis(p)).unwrap();
            assert!((cal.rho - rho).abs() < 5e-5);
            assert!((cal.selected.a - a).abs() < 1e-6);
            assert!((cal.selected.b - b).abs() < 1e-6);
            assert!((cal.selected.a + cal.selected.b - cal.rho).abs() < 1e-9);
            assert!((cal.selected.a * cal.selected.b - cal.ab_product).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_pairs_are_reported() {
        // Below the Pearson bound: rho < 0.
        match calibrate_from_sk(1.0, 1.5) {
            Err(Error::InfeasibleMomentPair { rho, .. }) => assert!(rho < 0.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            calibrate_from_sk(0.0, 3.5),
            Err(Error::NotBetaRepresentable { .. })
        ));
    }
}

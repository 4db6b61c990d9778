//! Beta-distribution numerics.
//!
//! Closed-form masses go through the regularized incomplete beta function.
//! [`beta_mass_quadrature`] integrates the density directly and is kept as an
//! independent route for validating the closed form.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("beta parameters must be positive, got ({alpha}, {beta})")]
    Domain { alpha: f64, beta: f64 },

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate}, error {error:e})")]
    NotConverged { tol: f64, estimate: f64, error: f64 },

    #[error("non-finite result")]
    NonFinite,
}

fn check(alpha: f64, beta: f64) -> Result<(), NumericError> {
    if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
        Ok(())
    } else {
        Err(NumericError::Domain { alpha, beta })
    }
}

/// `I_x(alpha, beta)` for `x` clamped to `[0, 1]`.
pub fn regularized_incomplete_beta(alpha: f64, beta: f64, x: f64) -> Result<f64, NumericError> {
    check(alpha, beta)?;
    let x = x.clamp(0.0, 1.0);
    let v =
        statrs::function::beta::checked_beta_reg(alpha, beta, x).map_err(|_| NumericError::Domain { alpha, beta })?;
    if v.is_finite() {
        Ok(v.clamp(0.0, 1.0))
    } else {
        Err(NumericError::NonFinite)
    }
}

/// Probability mass of `Beta(alpha, beta)` on `[lo, hi]`, limits clipped to
/// `[0, 1]`.
pub fn beta_mass(alpha: f64, beta: f64, lo: f64, hi: f64) -> Result<f64, NumericError> {
    let lo = lo.clamp(0.0, 1.0);
    let hi = hi.clamp(0.0, 1.0);
    if hi <= lo {
        check(alpha, beta)?;
        return Ok(0.0);
    }
    let upper = regularized_incomplete_beta(alpha, beta, hi)?;
    let lower = regularized_incomplete_beta(alpha, beta, lo)?;
    Ok((upper - lower).max(0.0))
}

/// Normalized beta density.
pub fn beta_density(alpha: f64, beta: f64, x: f64) -> Result<f64, NumericError> {
    check(alpha, beta)?;
    if !(0.0..=1.0).contains(&x) {
        return Ok(0.0);
    }
    let ln_norm = statrs::function::beta::ln_beta(alpha, beta);
    let ln_x = if x == 0.0 {
        if alpha == 1.0 {
            0.0
        } else if alpha > 1.0 {
            return Ok(0.0);
        } else {
            return Ok(f64::INFINITY);
        }
    } else {
        (alpha - 1.0) * x.ln()
    };
    let ln_1mx = if x == 1.0 {
        if beta == 1.0 {
            0.0
        } else if beta > 1.0 {
            return Ok(0.0);
        } else {
            return Ok(f64::INFINITY);
        }
    } else {
        (beta - 1.0) * (-x).ln_1p()
    };
    Ok((ln_x + ln_1mx - ln_norm).exp())
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let s = f(c - h * x) + f(c + h * x);
        kronrod += wk * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod integration of the beta density over `[lo, hi]`.
pub fn beta_mass_quadrature(alpha: f64, beta: f64, lo: f64, hi: f64, tol: f64) -> Result<f64, NumericError> {
    check(alpha, beta)?;
    let lo = lo.clamp(0.0, 1.0);
    let hi = hi.clamp(0.0, 1.0);
    if hi <= lo {
        return Ok(0.0);
    }
    let ln_norm = statrs::function::beta::ln_beta(alpha, beta);
    let density = |x: f64| {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        ((alpha - 1.0) * x.ln() + (beta - 1.0) * (-x).ln_1p() - ln_norm).exp()
    };

    // Global adaptive bisection: always split the interval with the largest
    // error estimate until the summed estimate is under tolerance.
    let mut intervals = vec![(lo, hi, gk15(&density, lo, hi))];
    for _ in 0..2000 {
        let total_err: f64 = intervals.iter().map(|(_, _, (_, e))| e).sum();
        if total_err <= tol {
            let v: f64 = intervals.iter().map(|(_, _, (v, _))| v).sum();
            return if v.is_finite() {
                Ok(v)
            } else {
                Err(NumericError::NonFinite)
            };
        }
        let (i, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("non-empty");
        let (a, b, _) = intervals.swap_remove(i);
        let m = 0.5 * (a + b);
        intervals.push((a, m, gk15(&density, a, m)));
        intervals.push((m, b, gk15(&density, m, b)));
    }
    let estimate = intervals.iter().map(|(_, _, (v, _))| v).sum();
    let error = intervals.iter().map(|(_, _, (_, e))| e).sum();
    Err(NumericError::NotConverged { tol, estimate, error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mass_is_width() {
        assert!((beta_mass(1.0, 1.0, 0.3, 0.5).unwrap() - 0.2).abs() < 1e-14);
        assert!((beta_mass(1.0, 1.0, -0.5, 0.1).unwrap() - 0.1).abs() < 1e-14);
        assert_eq!(beta_mass(1.0, 1.0, 0.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn closed_forms() {
        // Beta(2,1) has CDF x^2; Beta(a,1) has CDF x^a.
        assert!((regularized_incomplete_beta(2.0, 1.0, 0.3).unwrap() - 0.09).abs() < 1e-14);
        let tail = 1.0 - 0.8f64.powi(11);
        assert!((beta_mass(11.0, 1.0, 0.8, 1.0).unwrap() - tail).abs() < 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for &(a, b, lo, hi) in &[
            (1.0, 1.0, 0.2, 0.4),
            (2.0, 5.0, 0.1, 0.35),
            (11.0, 1.0, 0.8, 1.0),
            (500.0, 500.0, 0.4, 0.6),
            (3.5, 0.8, 0.0, 0.9),
        ] {
            let q = beta_mass_quadrature(a, b, lo, hi, 1e-11).unwrap();
            let c = beta_mass(a, b, lo, hi).unwrap();
            assert!((q - c).abs() < 1e-9, "({a},{b}) on [{lo},{hi}]: {q} vs {c}");
        }
    }

    #[test]
    fn density_edges() {
        assert!((beta_density(1.0, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(beta_density(2.0, 1.0, 0.0).unwrap(), 0.0);
        assert!((beta_density(2.0, 1.0, 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(beta_density(2.0, 2.0, 1.5).unwrap(), 0.0);
        assert!(beta_density(0.5, 1.0, 0.0).unwrap().is_infinite());
    }

    #[test]
    fn domain_errors() {
        assert!(regularized_incomplete_beta(0.0, 1.0, 0.5).is_err());
        assert!(beta_mass(1.0, -1.0, 0.0, 1.0).is_err());
        assert!(beta_mass_quadrature(f64::NAN, 1.0, 0.0, 1.0, 1e-9).is_err());
    }
}

//! Exponential integral `E1(x) = int_x^inf e^-t / t dt` for real `x > 0`.
//!
//! Convergent power series on `(0, 1]`, modified Lentz evaluation of the
//! continued fraction above 1. Both branches reach ~1e-15 relative accuracy.

use crate::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_LIMIT: f64 = 1.0;
const MAX_TERMS: usize = 500;

pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check_domain(x)?;
    if x <= SERIES_LIMIT {
        Ok(series(x))
    } else {
        Ok((-x).exp() * continued_fraction(x))
    }
}

/// `e^x E1(x)`, evaluated without forming `e^x` for large arguments.
pub fn exp_scaled_e1(x: f64) -> Result<f64> {
    check_domain(x)?;
    if x <= SERIES_LIMIT {
        Ok(x.exp() * series(x))
    } else {
        Ok(continued_fraction(x))
    }
}

fn check_domain(x: f64) -> Result<()> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain(format!("E1 needs x > 0, got {x}")));
    }
    Ok(())
}

// -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k k!)
fn series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0; // (-1)^{k+1} x^k / k!
    for k in 1..MAX_TERMS {
        term *= if k == 1 { x } else { -x / k as f64 };
        let add = term / k as f64;
        sum += add;
        if add.abs() < f64::EPSILON * sum.abs() {
            break;
        }
    }
    sum - EULER_GAMMA - x.ln()
}

// e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
fn continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        // scipy.special.exp1 / mpmath.e1
        assert!((exp_integral_e1(1.0).unwrap() - 0.219_383_934_395_520_27).abs() < 1e-15);
        assert!((exp_integral_e1(10.0).unwrap() - 4.156_968_929_685_324e-6).abs() < 1e-18);
        assert!((exp_integral_e1(0.5).unwrap() - 0.559_773_594_776_160_8).abs() < 1e-15);
        assert!((exp_integral_e1(2.0).unwrap() - 0.048_900_510_708_061_12).abs() < 1e-16);
    }

    #[test]
    fn small_argument_limit() {
        for x in [1e-6, 1e-9, 1e-12] {
            let v = exp_integral_e1(x).unwrap() + f64::ln(x);
            assert!((v + EULER_GAMMA).abs() < 2.0 * x, "x = {x}");
        }
    }

    #[test]
    fn rejects_non_positive() {
        assert!(exp_integral_e1(0.0).is_err());
        assert!(exp_integral_e1(-1.0).is_err());
        assert!(exp_integral_e1(f64::NAN).is_err());
    }

    #[test]
    fn branches_agree_at_switch() {
        let below = series(1.0);
        let above = (-1.0f64).exp() * continued_fraction(1.0);
        assert!((below - above).abs() < 1e-14);
    }

    #[test]
    fn sandwich_bounds() {
        let mut x = 1e-4;
        while x < 200.0 {
            let e = exp_scaled_e1(x).unwrap();
            assert!(1.0 / (x + 1.0) < e && e < 1.0 / x, "x = {x}");
            x *= 1.37;
        }
    }

    #[test]
    fn scaled_form_survives_large_arguments() {
        let v = exp_scaled_e1(1e4).unwrap();
        assert!((v - 1.0 / (1e4 + 1.0)).abs() < 1e-8);
        assert!(v.is_finite());
    }
}

//! Bessel functions of the first kind (orders 0, 1, 2) and Hankel functions
//! of the first kind (orders 0, 1) for real non-negative arguments.
//!
//! Small arguments use the ascending power series. Larger arguments use
//! Miller's backward recurrence normalized by `J0 + 2 * sum J_2k = 1`. The
//! second-kind functions come from the Neumann expansions over the same
//! normalized sequence, so `Y0` and `Y1` stay accurate on both sides of the
//! series switch point.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Arguments at or below this value use the ascending series for `J_n`.
pub const SERIES_SWITCH: f64 = 8.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE_LIMIT: f64 = 1e200;

/// Bessel function of the first kind `J_order(x)` for `order` in `{0, 1, 2}`.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    if order > 2 {
        return Err(Error::Domain(format!(
            "bessel_j supports orders 0..=2, got {order}"
        )));
    }
    if !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j argument must be finite, got {x}")));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("bessel_j argument must be >= 0, got {x}")));
    }
    Ok(bessel_j_unchecked(order, x))
}

/// `J_order(x)` without argument validation. Callers guarantee `x >= 0`,
/// finite, and `order <= 2`.
pub(crate) fn bessel_j_unchecked(order: u32, x: f64) -> f64 {
    if x <= SERIES_SWITCH {
        ascending_series(order, x)
    } else {
        let seq = miller_sequence(x);
        seq[order as usize]
    }
}

/// `J0(x)` for internal callers that already hold a valid argument.
#[inline]
pub(crate) fn j0(x: f64) -> f64 {
    bessel_j_unchecked(0, x)
}

/// `J1(x)`.
#[inline]
pub(crate) fn j1(x: f64) -> f64 {
    bessel_j_unchecked(1, x)
}

/// `J2(x)`.
#[inline]
pub(crate) fn j2(x: f64) -> f64 {
    bessel_j_unchecked(2, x)
}

/// Hankel function of the first kind `H_order(x) = J_order(x) + i Y_order(x)`
/// for `order` in `{0, 1}` and `x > 0`.
pub fn hankel1(order: u32, x: f64) -> Result<Complex64> {
    if order > 1 {
        return Err(Error::Domain(format!(
            "hankel1 supports orders 0 and 1, got {order}"
        )));
    }
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!(
            "hankel1 needs a finite argument > 0, got {x}"
        )));
    }
    let (y0, y1) = neumann_y01(x);
    let (j, y) = match order {
        0 => (bessel_j_unchecked(0, x), y0),
        _ => (bessel_j_unchecked(1, x), y1),
    };
    Ok(Complex64::new(j, y))
}

fn ascending_series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    // leading term (x/2)^n / n!
    let mut term = match order {
        0 => 1.0,
        1 => half,
        _ => 0.5 * half * half,
    };
    let mut sum = term;
    let n = f64::from(order);
    for m in 1..200 {
        let mf = f64::from(m);
        term *= q / (mf * (mf + n));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Normalized values `J_0(x) .. J_top(x)` via backward recurrence.
fn miller_sequence(x: f64) -> Vec<f64> {
    debug_assert!(x > 0.0);
    let mut top = (x + 30.0 + 10.0 * x.cbrt()).ceil() as usize;
    if top % 2 == 1 {
        top += 1;
    }
    let mut seq = vec![0.0; top + 2];
    seq[top] = 1e-30;
    // running value of J0 + 2 * sum_{k>=1} J_{2k} in the unnormalized scale
    let mut norm = if top.is_multiple_of(2) { 2.0 * seq[top] } else { 0.0 };
    for k in (1..=top).rev() {
        let next = 2.0 * k as f64 / x * seq[k] - seq[k + 1];
        seq[k - 1] = next;
        if k - 1 == 0 {
            norm += next;
        } else if (k - 1) % 2 == 0 {
            norm += 2.0 * next;
        }
        if next.abs() > RESCALE_LIMIT {
            let s = 1.0 / RESCALE_LIMIT;
            for v in &mut seq[k - 1..] {
                *v *= s;
            }
            norm *= s;
        }
    }
    let inv = 1.0 / norm;
    for v in &mut seq {
        *v *= inv;
    }
    seq
}

/// `(Y0(x), Y1(x))` from the Neumann expansions
/// `(pi/2) Y0 = (ln(x/2) + gamma) J0 - 2 sum (-1)^k J_2k / k` and its
/// negated derivative.
fn neumann_y01(x: f64) -> (f64, f64) {
    let seq = miller_sequence(x);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let kmax = (seq.len() - 2) / 2;
    for k in 1..=kmax {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kf = k as f64;
        s0 += sign * seq[2 * k] / kf;
        s1 += sign * (seq[2 * k - 1] - seq[2 * k + 1]) / kf;
    }
    let y0 = 2.0 / PI * (log_term * seq[0] - 2.0 * s0);
    let y1 = 2.0 / PI * (log_term * seq[1] - seq[0] / x + s1);
    (y0, y1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(bessel_j(0, f64::NAN).is_err());
        assert!(bessel_j(1, f64::INFINITY).is_err());
        assert!(bessel_j(3, 1.0).is_err());
        assert!(bessel_j(0, -1.0).is_err());
        assert!(hankel1(0, 0.0).is_err());
        assert!(hankel1(1, -2.0).is_err());
        assert!(hankel1(2, 1.0).is_err());
    }

    #[test]
    fn continuity_across_switch() {
        for order in 0..=2 {
            let below = ascending_series(order, SERIES_SWITCH);
            let above = miller_sequence(SERIES_SWITCH)[order as usize];
            assert!((below - above).abs() < 1e-13, "order {order}: {below} vs {above}");
        }
    }

    #[test]
    fn y0_log_singularity() {
        let a = hankel1(0, 1e-4).unwrap().im;
        let b = hankel1(0, 1e-5).unwrap().im;
        assert!(a < 0.0 && b < a);
        // (2/pi) ln 10 per decade, plus a small J0 correction
        assert!(((a - b) - 2.0 / PI * 10f64.ln()).abs() < 1e-7);
        assert!(((a - b) - 1.465871213992635).abs() < 1e-10);
    }
}

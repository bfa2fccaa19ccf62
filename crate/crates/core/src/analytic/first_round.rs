use std::f64::consts::LN_2;

use super::AnalyticError;

/// Highest equilibrium first-round bid, reached at value 1.
pub const BID_MAX: f64 = 1.0 - LN_2;

const SERIES_CUTOFF: f64 = 1e-4;

fn check_value(v: f64) -> Result<(), AnalyticError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(AnalyticError::OutOfRange { what: "value", value: v })
    }
}

/// Symmetric first-round bid `1 - ln(1+v)/v`, with `b(0) = 0`. Below 1e-4 the
/// alternating series `v/2 - v^2/3 + v^3/4 - ...` avoids the 0/0 form.
pub fn first_round_bid(v: f64) -> Result<f64, AnalyticError> {
    check_value(v)?;
    Ok(bid_unchecked(v))
}

pub(crate) fn bid_unchecked(v: f64) -> f64 {
    if v < SERIES_CUTOFF {
        // sum_{n>=1} (-1)^(n+1) v^n / (n+1)
        let mut term = v;
        let mut sum = 0.0;
        for n in 1..=6 {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign * term / (n as f64 + 1.0);
            term *= v;
        }
        sum
    } else {
        1.0 - v.ln_1p() / v
    }
}

/// Exact derivative `ln(1+v)/v^2 - 1/(v(1+v))`, with the series `1/2 - 2v/3 + 3v^2/4 - ...`
/// near 0.
pub fn first_round_bid_derivative(v: f64) -> Result<f64, AnalyticError> {
    check_value(v)?;
    Ok(derivative_unchecked(v))
}

fn derivative_unchecked(v: f64) -> f64 {
    if v < SERIES_CUTOFF {
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 1..=6 {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign * n as f64 * term / (n as f64 + 1.0);
            term *= v;
        }
        sum
    } else {
        v.ln_1p() / (v * v) - 1.0 / (v * (1.0 + v))
    }
}

fn bid_and_slope(v: f64) -> (f64, f64) {
    if v < SERIES_CUTOFF {
        return (bid_unchecked(v), derivative_unchecked(v));
    }
    let l = v.ln_1p();
    (1.0 - l / v, l / (v * v) - 1.0 / (v * (1.0 + v)))
}

/// The value whose equilibrium bid is `p`, for `p` in `[0, 1 - ln 2]`.
///
/// Safeguarded Newton iteration on the bracket `[0, 1]`: a Newton step is taken when it
/// stays inside the current bracket, otherwise the bracket is bisected.
pub fn first_round_bid_inverse(p: f64) -> Result<f64, AnalyticError> {
    if !(0.0..=BID_MAX).contains(&p) {
        return Err(AnalyticError::OutOfRange { what: "first-round bid", value: p });
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == BID_MAX {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // start from the inverted cubic Taylor polynomial
    let mut v = (2.0 * p + 8.0 / 3.0 * p * p + 28.0 / 9.0 * p * p * p).clamp(lo, hi);
    for _ in 0..200 {
        let (b, slope) = bid_and_slope(v);
        let g = b - p;
        if g == 0.0 {
            return Ok(v);
        }
        if g > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        if hi - lo <= 1e-15 {
            break;
        }
        let step = v - g / slope;
        let next = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if (next - v).abs() <= 1e-16 {
            v = next;
            break;
        }
        v = next;
    }
    Ok(v)
}

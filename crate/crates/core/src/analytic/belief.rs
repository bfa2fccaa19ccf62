use super::first_round::{first_round_bid_inverse, BID_MAX};
use super::AnalyticError;

/// Posterior on the first-round loser's value: uniform on `[0, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Belief {
    pub upper: f64,
}

impl Belief {
    pub fn cdf(&self, x: f64) -> f64 {
        if x >= self.upper {
            1.0
        } else if x <= 0.0 {
            0.0
        } else {
            x / self.upper
        }
    }

    pub fn mean(&self) -> f64 {
        0.5 * self.upper
    }

    pub fn is_point_mass(&self) -> bool {
        self.upper == 0.0
    }
}

/// Belief about the loser after the winning price `p1` is announced. Prices in the
/// equilibrium bid range truncate the prior at `b^-1(p1)`; higher prices reveal nothing
/// and leave `U(0, 1)`, as if `b(1)` had been announced.
pub fn belief_update(p1: f64) -> Result<Belief, AnalyticError> {
    if !(p1 >= 0.0) {
        return Err(AnalyticError::OutOfRange { what: "first-round price", value: p1 });
    }
    if p1 > BID_MAX {
        return Ok(Belief { upper: 1.0 });
    }
    Ok(Belief { upper: first_round_bid_inverse(p1)? })
}

use super::first_round::{first_round_bid_inverse, BID_MAX};
use super::AnalyticError;

/// Which side of the asymmetric last-round auction a bidder is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// The first-round loser, whose value is known to lie below the winner's.
    Weak,
    /// The bidder who sat out the first round, value still uniform on `[0, 1]`.
    Strong,
}

const SUPPORT_SLACK: f64 = 1e-12;

/// Last-round equilibrium after a first-round price: the weak bidder's value is uniform
/// on `[0, support_max]`, the strong bidder's on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondRound {
    support_max: f64,
    k: f64,
}

impl SecondRound {
    /// Equilibrium for weak support `[0, support_max]`, `0 <= support_max <= 1`.
    pub fn with_support(support_max: f64) -> Result<Self, AnalyticError> {
        if !(0.0..=1.0).contains(&support_max) {
            return Err(AnalyticError::OutOfRange { what: "weak support", value: support_max });
        }
        let k = if support_max == 0.0 { f64::INFINITY } else { (1.0 / (support_max * support_max) - 1.0).max(0.0) };
        Ok(Self { support_max, k })
    }

    /// Equilibrium after an on-path or off-path first-round price. Prices above the
    /// first-round bid range leave the prior `U(0, 1)` on the loser.
    pub fn after_price(p1: f64) -> Result<Self, AnalyticError> {
        if !(p1 >= 0.0) {
            return Err(AnalyticError::OutOfRange { what: "first-round price", value: p1 });
        }
        if p1 > BID_MAX {
            return Self::with_support(1.0);
        }
        Self::with_support(first_round_bid_inverse(p1)?)
    }

    /// Asymmetry parameter `1/support_max^2 - 1` (infinite when the support is {0}).
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn support_max(&self) -> f64 {
        self.support_max
    }

    /// Highest bid either side ever makes: `support_max / (1 + support_max)`.
    pub fn top_bid(&self) -> f64 {
        self.support_max / (1.0 + self.support_max)
    }

    fn weak_raw(&self, v: f64) -> f64 {
        if v == 0.0 {
            return 0.0;
        }
        v / (1.0 + (1.0 - self.k * v * v).max(0.0).sqrt())
    }

    fn strong_raw(&self, v: f64) -> f64 {
        if v == 0.0 || self.k.is_infinite() {
            return 0.0;
        }
        v / (1.0 + (1.0 + self.k * v * v).sqrt())
    }

    /// Equilibrium bid of a bidder in `role` with value `v` inside its support.
    pub fn bid(&self, role: Role, v: f64) -> Result<f64, AnalyticError> {
        match role {
            Role::Weak => {
                if !(0.0..=self.support_max + SUPPORT_SLACK).contains(&v) {
                    return Err(AnalyticError::OutOfRange { what: "weak value", value: v });
                }
                Ok(self.weak_raw(v.min(self.support_max)))
            }
            Role::Strong => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(AnalyticError::OutOfRange { what: "strong value", value: v });
                }
                Ok(self.strong_raw(v))
            }
        }
    }

    /// Value whose equilibrium bid in `role` is `bid`: `2b/(1+kb^2)` (weak) or
    /// `2b/(1-kb^2)` (strong). Bids above the top bid are rejected.
    pub fn inverse(&self, role: Role, bid: f64) -> Result<f64, AnalyticError> {
        if !(0.0..=self.top_bid() + SUPPORT_SLACK).contains(&bid) {
            return Err(AnalyticError::OutOfRange { what: "last-round bid", value: bid });
        }
        if bid == 0.0 {
            return Ok(0.0);
        }
        let kb2 = self.k * bid * bid;
        Ok(match role {
            Role::Weak => (2.0 * bid / (1.0 + kb2)).min(self.support_max),
            Role::Strong => (2.0 * bid / (1.0 - kb2)).min(1.0),
        })
    }

    /// Strong value needed to outbid a weak bidder of value `v`: `v / sqrt(1 - k v^2)`.
    pub fn crossover(&self, v: f64) -> Result<f64, AnalyticError> {
        self.bid(Role::Weak, v)?;
        if v == 0.0 {
            return Ok(0.0);
        }
        Ok((v / (1.0 - self.k * v * v).max(0.0).sqrt()).min(1.0))
    }

    /// Best response of a weak bidder with any value: the equilibrium bid inside the
    /// support, the top bid (a sure win) above it.
    pub fn weak_best_response(&self, v: f64) -> f64 {
        if v <= self.support_max {
            self.weak_raw(v)
        } else {
            self.top_bid()
        }
    }

    /// Expected last-round utility of the weak bidder playing its best response.
    /// Inside the support this is `v^2 / (1 + sqrt(1 - k v^2))`; above it the bidder wins
    /// for sure at the top bid.
    pub fn weak_value(&self, v: f64) -> f64 {
        if v <= self.support_max {
            if v == 0.0 {
                return 0.0;
            }
            v * v / (1.0 + (1.0 - self.k * v * v).max(0.0).sqrt())
        } else {
            v - self.top_bid()
        }
    }
}

/// Expected last-round utility `u(v_a, p1)` of the first-round loser with value `v_a`
/// after price `p1`. The value must be consistent with having lost.
pub fn continuation_utility(v_a: f64, p1: f64) -> Result<f64, AnalyticError> {
    if !(0.0..=BID_MAX).contains(&p1) {
        return Err(AnalyticError::OutOfRange { what: "first-round price", value: p1 });
    }
    let game = SecondRound::after_price(p1)?;
    if !(0.0..=game.support_max + SUPPORT_SLACK).contains(&v_a) {
        return Err(AnalyticError::InconsistentLoss { value: v_a, price: p1 });
    }
    Ok(game.weak_value(v_a.min(game.support_max)))
}

/// Second-round bid in `role` after first-round price `p1`.
pub fn second_round_bid(p1: f64, role: Role, v: f64) -> Result<f64, AnalyticError> {
    SecondRound::after_price(p1)?.bid(role, v)
}

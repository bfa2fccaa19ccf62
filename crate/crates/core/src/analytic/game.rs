use crate::model::RngStream;
use crate::stats::{accumulate, Z95};

use super::first_round::{bid_unchecked, first_round_bid};
use super::quad::adaptive_simpson;
use super::second_round::{Role, SecondRound};
use super::AnalyticError;

/// Expected utility of a first-round bidder with value `v` who bids as if its value were
/// `x` while everyone else follows the equilibrium:
/// `x (v - b(x)) + integral over t in [x, 1] of u(v, b(t))`, where `u` is the last-round
/// value after losing to a rival of value `t`. The integral is split at `v`, where the
/// continuation switches from the interior formula to the sure-win top bid.
pub fn interim_first_round_utility(v: f64, x: f64, tol: f64) -> Result<f64, AnalyticError> {
    let bx = first_round_bid(x)?;
    first_round_bid(v)?;
    let lose = |t: f64| {
        SecondRound::with_support(t.clamp(0.0, 1.0)).map(|g| g.weak_value(v)).unwrap_or(f64::NAN)
    };
    let integral = if x < v {
        adaptive_simpson(&lose, x, v, 0.5 * tol) + adaptive_simpson(&lose, v, 1.0, 0.5 * tol)
    } else {
        adaptive_simpson(&lose, x, 1.0, tol)
    };
    Ok(x * (v - bx) + integral)
}

/// Monte Carlo estimate of a probability with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    /// 95% normal confidence interval.
    pub fn ci(&self) -> (f64, f64) {
        (self.mean - Z95 * self.stderr, self.mean + Z95 * self.stderr)
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.ci();
        lo <= x && x <= hi
    }
}

/// Last round between a loser with value `weak` (after price `p1`) and the bidder who
/// sat out with value `strong`; returns whether the item went to the lower value.
fn last_round_misallocated(game: &SecondRound, weak: f64, strong: f64) -> bool {
    let weak_bid = game.weak_best_response(weak);
    let strong_bid = game.bid(Role::Strong, strong).unwrap_or(0.0);
    // the loser has the lower index and wins ties
    if weak_bid >= strong_bid {
        weak < strong
    } else {
        strong < weak
    }
}

const MIN_SAMPLES: usize = 10_000;

/// Frequency with which the two-round equilibrium gives the second item to the
/// lower-valued of its two contenders. Sample `s` uses `rng.split(s)`.
pub fn inefficiency_probability(rng: &RngStream, n: usize) -> Result<Estimate, AnalyticError> {
    if n < MIN_SAMPLES {
        return Err(AnalyticError::TooFewSamples(n));
    }
    let m = accumulate(n, 1, |s, acc| {
        let mut r = rng.split(s as u64);
        let (va, vb, vc) = (r.uniform(), r.uniform(), r.uniform());
        let (ba, bb) = (bid_unchecked(va), bid_unchecked(vb));
        let (price, loser) = if ba >= bb { (ba, vb) } else { (bb, va) };
        let game = SecondRound::after_price(price).expect("equilibrium prices are on path");
        acc.push(&[f64::from(u8::from(last_round_misallocated(&game, loser, vc)))]);
    });
    Ok(Estimate { mean: m.mean(0), stderr: m.stderr(0), samples: n })
}

/// Misallocation frequency of the last round alone, with the weak value uniform on
/// `[0, support_max]` and the strong value uniform on `[0, 1]`.
pub fn second_round_inefficiency(support_max: f64, rng: &RngStream, n: usize) -> Result<Estimate, AnalyticError> {
    if n < MIN_SAMPLES {
        return Err(AnalyticError::TooFewSamples(n));
    }
    let game = SecondRound::with_support(support_max)?;
    let m = accumulate(n, 1, |s, acc| {
        let mut r = rng.split(s as u64);
        let weak = support_max * r.uniform();
        let strong = r.uniform();
        acc.push(&[f64::from(u8::from(last_round_misallocated(&game, weak, strong)))]);
    });
    Ok(Estimate { mean: m.mean(0), stderr: m.stderr(0), samples: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interim_utility_flat_below_truth_and_falls_above() {
        // below v the slope is v - b - x b' - (v - x/(1+x)) = 0 by the first-order condition
        for &v in &[0.2, 0.5, 0.9] {
            let at_truth = interim_first_round_utility(v, v, 1e-10).unwrap();
            for x in [0.0, v / 2.0, v - 0.05, v - 0.01] {
                let other = interim_first_round_utility(v, x, 1e-10).unwrap();
                assert!((other - at_truth).abs() < 1e-9, "v={v} x={x}");
            }
            for dx in [0.01, 0.05] {
                let other = interim_first_round_utility(v, v + dx, 1e-10).unwrap();
                assert!(other < at_truth - 1e-7, "v={v} dx={dx}");
            }
        }
    }

    #[test]
    fn symmetric_last_round_is_efficient() {
        let e = second_round_inefficiency(1.0, &RngStream::new(3), 20_000).unwrap();
        assert_eq!(e.mean, 0.0);
    }

    #[test]
    fn full_game_is_inefficient() {
        let e = inefficiency_probability(&RngStream::new(11), 50_000).unwrap();
        assert!(e.ci().0 > 0.0);
        assert!(inefficiency_probability(&RngStream::new(11), 10).is_err());
    }

    #[test]
    fn continuation_by_simulation() {
        // weak value 0.3 after the loser's support was cut to 0.6
        let game = SecondRound::with_support(0.6).unwrap();
        let v = 0.3;
        let bid = game.bid(Role::Weak, v).unwrap();
        let rng = RngStream::new(5);
        let m = accumulate(200_000, 1, |s, acc| {
            let vc = rng.split(s as u64).uniform();
            let u = if bid >= game.bid(Role::Strong, vc).unwrap() { v - bid } else { 0.0 };
            acc.push(&[u]);
        });
        assert!((m.mean(0) - game.weak_value(v)).abs() < 3.0 * m.stderr(0));
    }
}

//! Closed-form equilibrium of the two-item, three-bidder game with uniform values:
//! first-round bids, the asymmetric last round, beliefs, the first-order ODE and its
//! numeric solution, and the resulting inefficiency.

mod belief;
mod first_round;
mod game;
mod ode;
mod quad;
mod second_round;
mod strategy;

use thiserror::Error;

pub use belief::{belief_update, Belief};
pub use first_round::{first_round_bid, first_round_bid_derivative, first_round_bid_inverse, BID_MAX};
pub use game::{inefficiency_probability, interim_first_round_utility, second_round_inefficiency, Estimate};
pub use ode::{foc_residual, solve_foc_ode, solve_foc_ode_fixed, BidFunction, ClosedFormBid, TabulatedBid, FD_STEP};
pub use quad::adaptive_simpson;
pub use second_round::{continuation_utility, second_round_bid, Role, SecondRound};
pub use strategy::TwoItemEquilibrium;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("{what} {value} is outside its admissible range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("value {value} is above the loser's support after price {price}")]
    InconsistentLoss { value: f64, price: f64 },
    #[error("invalid grid: {0}")]
    Grid(&'static str),
    #[error("ODE step at v = {v} rejected with local error {error:e}")]
    StepRejected { v: f64, error: f64 },
    #[error("at least 10000 samples are required, got {0}")]
    TooFewSamples(usize),
}

//! Sequential first-price auction runner: round schedules, public histories, bidding
//! strategies and traces.

mod history;
mod run;
mod scenario;
mod strategy;

use thiserror::Error;

use crate::combinat::CutError;

pub use history::{History, RoundRecord};
pub use run::{resolve_round, run_auction, Trace, TRACE_HEADER};
pub use scenario::{CutPolicy, InfoPolicy, Market, RoundDescriptor, Scenario, TieRule};
pub use strategy::{
    play_as_type, Abstain, BidContext, ConstantBid, Masquerade, MyopicHalving, Strategy, StrategyProfile, TargetBid, Truthful,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("player {player} submitted an invalid bid {bid} in round {round}")]
    InvalidBid { player: usize, round: usize, bid: f64 },
    #[error("player {player} submitted {got} bids in round {round}, expected {expected}")]
    BidLength { player: usize, round: usize, expected: usize, got: usize },
    #[error("{got} strategies supplied for {expected} players")]
    StrategyCount { expected: usize, got: usize },
    #[error("valuation profile does not match the scenario shape")]
    ProfileShape,
    #[error("strategy of player {player} cannot play this scenario: {reason}")]
    Unsupported { player: usize, reason: String },
    #[error("invalid round schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Cut(#[from] CutError),
}

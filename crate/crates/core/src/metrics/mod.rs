//! Monte Carlo measurements on strategy profiles: the grab-bid deviations and their
//! utility bounds, price-of-anarchy estimates and a menu-based equilibrium check.

mod deviation;
mod poa;
mod verify;

use thiserror::Error;

use crate::combinat::ParticipationError;
use crate::engine::EngineError;
use crate::model::DistError;

pub use deviation::{
    bluff_deviation_utility, constant_bid_deviation_utility, deviation_bid_cdf, deviation_bid_fit, deviation_bid_quantile, losing_rounds_agree,
    sample_deviation_bid, DeviationKind, DeviationOutcome, DeviationSample, FitTest, GRAB_SHARE,
};
pub use poa::{estimate_poa, optimal_welfare, PoAReport, POA_HEADER};
pub use verify::{default_menu, verify_bne, Deviation, VerifyReport, VerifyRow, VERIFY_HEADER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Participation(#[from] ParticipationError),
    #[error("at least {min} samples are needed, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("sample {sample} breaks welfare accounting by {residual:e}")]
    Accounting { sample: usize, residual: f64 },
}

//! Finite versions of the sequential auction: type and bid grids, behavioural strategy
//! tables, public beliefs, exact best replies and the equilibrium gap.

mod belief;
mod eval;
mod game;
mod table;

use thiserror::Error;

pub use belief::{bayes_update, BeliefRow, BeliefTable, OffPathRule};
pub use eval::{apply_plan, best_response_dynamics, epsilon_bne_gap, evaluate, ex_interim_utility, Dynamics, Evaluation, GapReport};
pub use game::{type_grid, Component, DiscreteGame, GridSpec, Node};
pub use table::{Row, StrategyTable, TableStrategy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("unsupported game: {0}")]
    Unsupported(String),
    #[error("more than {cap} decision histories")]
    TooLarge { cap: usize },
    #[error("bad strategy row: {0}")]
    BadRow(String),
    #[error("bad history: {0}")]
    BadHistory(String),
}

use std::fmt;
use std::sync::Arc;

use crate::model::RngStream;

use super::history::History;
use super::scenario::{RoundDescriptor, Scenario};

/// What a bidder sees when asked for a bid.
#[derive(Clone, Copy)]
pub struct BidContext<'a> {
    pub player: usize,
    /// The bidder's own valuation row (one entry for matroid players).
    pub values: &'a [f64],
    pub history: History<'a>,
    pub round: &'a RoundDescriptor,
    pub scenario: &'a Scenario,
}

impl BidContext<'_> {
    /// Best value among items already won (0 if none).
    pub fn held_value(&self) -> f64 {
        if self.scenario.is_matroid() {
            return if self.history.has_won(self.player) { self.values[0] } else { 0.0 };
        }
        self.history.won_items(self.player).iter().map(|&j| self.values[j]).fold(0.0, f64::max)
    }

    /// Value added by winning slot `slot` of the current round, given what is held.
    pub fn marginal_value(&self, slot: usize) -> f64 {
        let v = match self.round.items.get(slot) {
            Some(&j) => self.values[j],
            None => self.values[0],
        };
        (v - self.held_value()).max(0.0)
    }
}

/// A bidding rule: own type and public history to a bid per slot of the current round.
/// Randomised strategies draw from `rng`, which is private to the bidder.
pub trait Strategy: Send + Sync {
    fn bid(&self, ctx: &BidContext<'_>, rng: &mut RngStream) -> Vec<f64>;

    /// Rejects scenarios the rule cannot play (called once per run).
    fn check(&self, _scenario: &Scenario) -> Result<(), String> {
        Ok(())
    }

    fn label(&self) -> String;
}

impl fmt::Debug for dyn Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub type StrategyProfile = Vec<Arc<dyn Strategy>>;

/// Bids half the marginal value on every item of the round.
#[derive(Debug, Clone, Copy, Default)]
pub struct MyopicHalving;

impl Strategy for MyopicHalving {
    fn bid(&self, ctx: &BidContext<'_>, _rng: &mut RngStream) -> Vec<f64> {
        (0..ctx.round.slots()).map(|s| 0.5 * ctx.marginal_value(s)).collect()
    }

    fn label(&self) -> String {
        "myopic-halving".into()
    }
}

/// Bids the full marginal value.
#[derive(Debug, Clone, Copy, Default)]
pub struct Truthful;

impl Strategy for Truthful {
    fn bid(&self, ctx: &BidContext<'_>, _rng: &mut RngStream) -> Vec<f64> {
        (0..ctx.round.slots()).map(|s| ctx.marginal_value(s)).collect()
    }

    fn label(&self) -> String {
        "truthful".into()
    }
}

/// Bids a fixed amount on every slot until the first win, then 0.
#[derive(Debug, Clone, Copy)]
pub struct ConstantBid(pub f64);

impl Strategy for ConstantBid {
    fn bid(&self, ctx: &BidContext<'_>, _rng: &mut RngStream) -> Vec<f64> {
        let b = if ctx.history.has_won(ctx.player) { 0.0 } else { self.0 };
        vec![b; ctx.round.slots()]
    }

    fn label(&self) -> String {
        format!("constant:{}", self.0)
    }
}

/// Bids `bid` on one target item (whenever it is on sale) and 0 everywhere else.
#[derive(Debug, Clone, Copy)]
pub struct TargetBid {
    pub item: usize,
    pub bid: f64,
}

impl Strategy for TargetBid {
    fn bid(&self, ctx: &BidContext<'_>, _rng: &mut RngStream) -> Vec<f64> {
        let mut out = vec![0.0; ctx.round.slots()];
        if let Some(s) = ctx.round.items.iter().position(|&j| j == self.item) {
            out[s] = self.bid;
        }
        out
    }

    fn label(&self) -> String {
        format!("target:{}@{}", self.item, self.bid)
    }
}

/// Bids 0 everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct Abstain;

impl Strategy for Abstain {
    fn bid(&self, ctx: &BidContext<'_>, _rng: &mut RngStream) -> Vec<f64> {
        vec![0.0; ctx.round.slots()]
    }

    fn label(&self) -> String {
        "abstain".into()
    }
}

/// Plays `base` as if the bidder's valuation were `masquerade` for every round before
/// `switch_round`, then hands control to `continuation` with the real valuation.
pub struct Masquerade {
    pub base: Arc<dyn Strategy>,
    pub masquerade: Vec<f64>,
    pub switch_round: usize,
    pub continuation: Arc<dyn Strategy>,
}

impl Strategy for Masquerade {
    fn bid(&self, ctx: &BidContext<'_>, rng: &mut RngStream) -> Vec<f64> {
        if ctx.round.index < self.switch_round {
            let fake = BidContext { values: &self.masquerade, ..*ctx };
            self.base.bid(&fake, rng)
        } else {
            self.continuation.bid(ctx, rng)
        }
    }

    fn check(&self, scenario: &Scenario) -> Result<(), String> {
        self.base.check(scenario)?;
        self.continuation.check(scenario)
    }

    fn label(&self) -> String {
        format!("{} as {:?} until round {}, then {}", self.base.label(), self.masquerade, self.switch_round, self.continuation.label())
    }
}

/// Composite strategy that bids as type `masquerade` before `switch_round` and follows
/// `continuation` afterwards.
pub fn play_as_type(base: Arc<dyn Strategy>, masquerade: Vec<f64>, switch_round: usize, continuation: Arc<dyn Strategy>) -> Arc<dyn Strategy> {
    Arc::new(Masquerade { base, masquerade, switch_round, continuation })
}

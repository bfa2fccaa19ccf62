use std::sync::Arc;

use crate::combinat::{validate_cut, AnyMatroid, Matroid};
use crate::model::TypeDistribution;

use super::EngineError;

/// What every player learns after a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InfoPolicy {
    WinnerOnly,
    #[default]
    WinnerPrice,
    AllBids,
}

impl InfoPolicy {
    pub fn reveals_price(self) -> bool {
        !matches!(self, InfoPolicy::WinnerOnly)
    }

    pub fn reveals_bids(self) -> bool {
        matches!(self, InfoPolicy::AllBids)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    #[default]
    LowestIndex,
    UniformRandom,
}

/// How the auctioneer picks the cut for the next round of a matroid auction.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum CutPolicy {
    /// All elements that are still independent of the winners.
    #[default]
    Cospan,
    /// Use these cuts in order; once exhausted, fall back to the cospan rule.
    Explicit(Vec<Vec<usize>>),
}

#[derive(Debug, Clone)]
pub enum Market {
    /// Items sold in the given order of groups; items in one group are on sale
    /// simultaneously. `single_value` marks markets whose players have one value scaled
    /// by an interest pattern.
    Matching { items: usize, groups: Vec<Vec<usize>>, single_value: bool },
    /// Players are the ground-set elements of a matroid; each round sells one slot to a cut.
    MatroidCut { matroid: Arc<AnyMatroid>, cuts: CutPolicy },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub market: Market,
    pub dist: TypeDistribution,
    pub info: InfoPolicy,
    pub tie: TieRule,
}

impl Scenario {
    /// Checks the round schedule against the prior: every item sold exactly once for
    /// matching markets, one scalar per ground element for matroid markets.
    pub fn new(name: impl Into<String>, market: Market, dist: TypeDistribution, info: InfoPolicy, tie: TieRule) -> Result<Self, EngineError> {
        match &market {
            Market::Matching { items, groups, .. } => {
                let mut seen = vec![false; *items];
                for &j in groups.iter().flatten() {
                    if j >= *items || seen[j] {
                        return Err(EngineError::Schedule(format!("item {j} is out of range or scheduled twice")));
                    }
                    seen[j] = true;
                }
                if let Some(j) = seen.iter().position(|s| !s) {
                    return Err(EngineError::Schedule(format!("item {j} is never sold")));
                }
                if groups.iter().any(Vec::is_empty) {
                    return Err(EngineError::Schedule("empty round".into()));
                }
                if dist.width() != *items {
                    return Err(EngineError::Schedule(format!("prior rows have {} values for {items} items", dist.width())));
                }
            }
            Market::MatroidCut { matroid, cuts } => {
                if dist.width() != 1 {
                    return Err(EngineError::Schedule("matroid players need scalar values".into()));
                }
                if dist.players() != matroid.ground_size() {
                    return Err(EngineError::Schedule(format!(
                        "{} players for a ground set of {}",
                        dist.players(),
                        matroid.ground_size()
                    )));
                }
                if let CutPolicy::Explicit(seq) = cuts {
                    if let Some(first) = seq.first() {
                        validate_cut(matroid.as_ref(), &[], first)?;
                    }
                }
            }
        }
        Ok(Self { name: name.into(), market, dist, info, tie })
    }

    pub fn players(&self) -> usize {
        self.dist.players()
    }

    pub fn is_matroid(&self) -> bool {
        matches!(self.market, Market::MatroidCut { .. })
    }

    /// Number of items (matching) or 1 (matroid scalar slot).
    pub fn width(&self) -> usize {
        self.dist.width()
    }

    pub fn with_info(&self, info: InfoPolicy) -> Self {
        Self { info, ..self.clone() }
    }

    /// Round in which a matching item is sold.
    pub fn round_of_item(&self, item: usize) -> Option<usize> {
        match &self.market {
            Market::Matching { groups, .. } => groups.iter().position(|g| g.contains(&item)),
            Market::MatroidCut { .. } => None,
        }
    }
}

/// The round being played, as seen by the bidders.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundDescriptor {
    pub index: usize,
    /// Items on sale (empty for a matroid cut round, which sells a single slot).
    pub items: Vec<usize>,
    pub participants: Vec<usize>,
}

impl RoundDescriptor {
    /// Length of the bid vector each participant submits.
    pub fn slots(&self) -> usize {
        self.items.len().max(1)
    }

    pub fn is_participant(&self, player: usize) -> bool {
        self.participants.contains(&player)
    }
}

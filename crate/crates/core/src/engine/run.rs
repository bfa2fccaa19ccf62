use std::fmt::Write;
use std::sync::Arc;

use crate::combinat::{cospan_cut, validate_cut, CutError};
use crate::model::{social_welfare, utility, Allocation, RngStream, ValuationProfile};

use super::history::{History, RoundRecord};
use super::scenario::{CutPolicy, Market, RoundDescriptor, Scenario, TieRule};
use super::strategy::{BidContext, Strategy};
use super::EngineError;

/// First-price resolution of one slot: the highest bid wins and pays its bid.
/// Ties go to the lowest player index, or to a uniformly random tied bidder.
///
/// Panics on an empty bid list.
pub fn resolve_round(bids: &[(usize, f64)], tie: TieRule, rng: &mut RngStream) -> (usize, f64) {
    assert!(!bids.is_empty(), "a round needs at least one participant");
    let price = bids.iter().map(|&(_, b)| b).fold(f64::NEG_INFINITY, f64::max);
    let is_tied = |&&(_, b): &&(usize, f64)| b == price;
    let lowest = |above: Option<usize>| bids.iter().filter(is_tied).map(|&(p, _)| p).filter(|&p| above.map_or(true, |a| p > a)).min();
    let winner = match tie {
        TieRule::LowestIndex => lowest(None),
        TieRule::UniformRandom => {
            let count = bids.iter().filter(is_tied).count();
            let skip = if count == 1 { 0 } else { rng.index(count) };
            (0..skip).fold(lowest(None), |w, _| lowest(w))
        }
    }
    .expect("the highest bid is tied with itself");
    (winner, price)
}

/// Full record of one auction run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub profile: ValuationProfile,
    pub rounds: Vec<RoundRecord>,
    pub allocation: Allocation,
    pub utilities: Vec<f64>,
}

impl Trace {
    pub fn welfare(&self) -> f64 {
        social_welfare(&self.profile, &self.allocation)
    }

    pub fn revenue(&self) -> f64 {
        self.allocation.revenue()
    }

    pub fn total_utility(&self) -> f64 {
        self.utilities.iter().sum()
    }

    /// Round and slot in which a matching item was sold.
    pub fn locate_item(&self, item: usize) -> Option<(usize, usize)> {
        self.rounds.iter().enumerate().find_map(|(r, rec)| rec.slot_of_item(item).map(|s| (r, s)))
    }

    /// Winner of round `r`, slot 0 (the only slot of a matroid round).
    pub fn round_winner(&self, r: usize) -> Option<usize> {
        self.rounds[r].winners[0]
    }

    pub fn participant_sets(&self) -> Vec<Vec<usize>> {
        self.rounds.iter().map(|r| r.participants.clone()).collect()
    }

    /// Bids of all players other than `player`, round by round.
    pub fn others_bids(&self, player: usize) -> Vec<Vec<(usize, Vec<f64>)>> {
        self.rounds
            .iter()
            .map(|r| {
                r.participants
                    .iter()
                    .zip(&r.bids)
                    .filter(|(&p, _)| p != player)
                    .map(|(&p, b)| (p, b.clone()))
                    .collect()
            })
            .collect()
    }

    /// CSV rows (without header): one per sold slot, then a summary row.
    pub fn write_csv_rows(&self, run_id: usize, out: &mut String) {
        for rec in &self.rounds {
            for s in 0..rec.winners.len() {
                let parts = join(rec.participants.iter());
                let bids = join(rec.bids.iter().map(|b| b[s]));
                let winner = rec.winners[s].map(|w| w.to_string()).unwrap_or_default();
                writeln!(out, "{run_id},{},{parts},{bids},{winner},{}", rec.index, rec.prices[s]).unwrap();
            }
        }
        let alloc = match &self.allocation {
            Allocation::Matching { won, .. } => {
                join(won.iter().map(|w| if w.is_empty() { "-".to_string() } else { join(w.iter()).replace(';', "+") }))
            }
            Allocation::Matroid { served, .. } => join(served.iter().map(|&s| u8::from(s))),
        };
        let pays = join(self.allocation.payments().iter());
        writeln!(out, "{run_id},summary,{alloc},{pays},{},{}", self.welfare(), self.revenue()).unwrap();
    }
}

pub const TRACE_HEADER: &str = "run_id,round,participants,bids,winner,price";

fn join<T: std::fmt::Display>(xs: impl Iterator<Item = T>) -> String {
    let mut s = String::new();
    for (k, x) in xs.enumerate() {
        if k > 0 {
            s.push(';');
        }
        write!(s, "{x}").unwrap();
    }
    s
}

/// Plays the scenario once. Bidder `i` draws private randomness from `rng.split(i + 1)`
/// and random tie-breaks use `rng.split(0)`.
pub fn run_auction(
    scenario: &Scenario,
    strategies: &[Arc<dyn Strategy>],
    profile: &ValuationProfile,
    rng: &RngStream,
) -> Result<Trace, EngineError> {
    let n = scenario.players();
    if strategies.len() != n {
        return Err(EngineError::StrategyCount { expected: n, got: strategies.len() });
    }
    if profile.players() != n || profile.width() != scenario.width() {
        return Err(EngineError::ProfileShape);
    }
    for (i, s) in strategies.iter().enumerate() {
        s.check(scenario).map_err(|reason| EngineError::Unsupported { player: i, reason })?;
    }
    let mut player_rngs: Vec<RngStream> = (0..n).map(|i| rng.split(i as u64 + 1)).collect();
    let mut tie_rng = rng.split(0);
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut slot_bids: Vec<(usize, f64)> = Vec::with_capacity(n);
    let mut allocation;

    match &scenario.market {
        Market::Matching { groups, .. } => {
            allocation = Allocation::empty_matching(n);
            rounds.reserve_exact(groups.len());
            for (r, group) in groups.iter().enumerate() {
                let participants: Vec<usize> =
                    (0..n).filter(|&i| group.iter().any(|&j| scenario.dist.eligible(i, j))).collect();
                let desc = RoundDescriptor { index: r, items: group.clone(), participants };
                let bids = collect_bids(scenario, strategies, profile, &rounds, &desc, &mut player_rngs)?;
                let mut winners = Vec::with_capacity(group.len());
                let mut prices = Vec::with_capacity(group.len());
                for (s, &item) in group.iter().enumerate() {
                    slot_bids.clear();
                    slot_bids.extend(
                        desc.participants.iter().zip(&bids).filter(|(&p, _)| scenario.dist.eligible(p, item)).map(|(&p, b)| (p, b[s])),
                    );
                    if slot_bids.is_empty() {
                        winners.push(None);
                        prices.push(0.0);
                        continue;
                    }
                    let (w, p) = resolve_round(&slot_bids, scenario.tie, &mut tie_rng);
                    allocation.award(w, item, p);
                    winners.push(Some(w));
                    prices.push(p);
                }
                rounds.push(RoundRecord { index: r, items: desc.items, participants: desc.participants, bids, winners, prices });
            }
        }
        Market::MatroidCut { matroid, cuts } => {
            allocation = Allocation::empty_matroid(n);
            let mut winners: Vec<usize> = Vec::new();
            loop {
                let r = rounds.len();
                let explicit = match cuts {
                    CutPolicy::Explicit(seq) => seq.get(r),
                    CutPolicy::Cospan => None,
                };
                let cut = match explicit {
                    Some(c) => match validate_cut(matroid.as_ref(), &winners, c) {
                        Ok(()) => c.clone(),
                        Err(CutError::Spanning) => break,
                        Err(e) => return Err(e.into()),
                    },
                    None => match cospan_cut(matroid.as_ref(), &winners) {
                        Ok(c) => c,
                        Err(CutError::Spanning) => break,
                        Err(e) => return Err(e.into()),
                    },
                };
                let desc = RoundDescriptor { index: r, items: Vec::new(), participants: cut };
                let bids = collect_bids(scenario, strategies, profile, &rounds, &desc, &mut player_rngs)?;
                slot_bids.clear();
                slot_bids.extend(desc.participants.iter().zip(&bids).map(|(&p, b)| (p, b[0])));
                let (w, p) = resolve_round(&slot_bids, scenario.tie, &mut tie_rng);
                allocation.award(w, 0, p);
                winners.push(w);
                rounds.push(RoundRecord {
                    index: r,
                    items: Vec::new(),
                    participants: desc.participants,
                    bids,
                    winners: vec![Some(w)],
                    prices: vec![p],
                });
            }
        }
    }

    let utilities = (0..n).map(|i| utility(profile, &allocation, i)).collect();
    Ok(Trace { profile: profile.clone(), rounds, allocation, utilities })
}

fn collect_bids(
    scenario: &Scenario,
    strategies: &[Arc<dyn Strategy>],
    profile: &ValuationProfile,
    rounds: &[RoundRecord],
    desc: &RoundDescriptor,
    rngs: &mut [RngStream],
) -> Result<Vec<Vec<f64>>, EngineError> {
    let history = History::new(rounds, scenario.info);
    let mut out = Vec::with_capacity(desc.participants.len());
    for &i in &desc.participants {
        let ctx = BidContext { player: i, values: profile.row(i), history, round: desc, scenario };
        let b = strategies[i].bid(&ctx, &mut rngs[i]);
        if b.len() != desc.slots() {
            return Err(EngineError::BidLength { player: i, round: desc.index, expected: desc.slots(), got: b.len() });
        }
        if let Some(&bad) = b.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(EngineError::InvalidBid { player: i, round: desc.index, bid: bad });
        }
        out.push(b);
    }
    Ok(out)
}

use std::fmt::Write;

use super::scenario::InfoPolicy;

/// Everything that happened in one round, including bids that may stay private.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub index: usize,
    /// Items sold (empty for a matroid cut round).
    pub items: Vec<usize>,
    pub participants: Vec<usize>,
    /// `bids[k][s]` is participant `k`'s bid for slot `s`.
    pub bids: Vec<Vec<f64>>,
    /// Winner per slot; `None` only when no participant could bid on that item.
    pub winners: Vec<Option<usize>>,
    pub prices: Vec<f64>,
}

impl RoundRecord {
    pub fn bid_of(&self, player: usize, slot: usize) -> Option<f64> {
        self.participants.iter().position(|&p| p == player).map(|k| self.bids[k][slot])
    }

    pub fn slot_of_item(&self, item: usize) -> Option<usize> {
        self.items.iter().position(|&j| j == item)
    }

    /// Highest bid on the slot from anyone other than `player` (0 if nobody else bid).
    pub fn max_bid_excluding(&self, slot: usize, player: usize) -> f64 {
        self.participants
            .iter()
            .zip(&self.bids)
            .filter(|(&p, _)| p != player)
            .map(|(_, b)| b[slot])
            .fold(0.0, f64::max)
    }
}

/// The public announcements of the rounds played so far, filtered by the information
/// policy. Participant sets are always public: they follow from earlier winners.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    records: &'a [RoundRecord],
    policy: InfoPolicy,
}

impl<'a> History<'a> {
    pub fn new(records: &'a [RoundRecord], policy: InfoPolicy) -> Self {
        Self { records, policy }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn policy(&self) -> InfoPolicy {
        self.policy
    }

    pub fn items(&self, round: usize) -> &'a [usize] {
        &self.records[round].items
    }

    pub fn participants(&self, round: usize) -> &'a [usize] {
        &self.records[round].participants
    }

    pub fn took_part(&self, round: usize, player: usize) -> bool {
        self.records[round].participants.contains(&player)
    }

    pub fn winner(&self, round: usize, slot: usize) -> Option<usize> {
        self.records[round].winners[slot]
    }

    pub fn price(&self, round: usize, slot: usize) -> Option<f64> {
        self.policy.reveals_price().then(|| self.records[round].prices[slot])
    }

    pub fn bids(&self, round: usize) -> Option<&'a [Vec<f64>]> {
        self.policy.reveals_bids().then(|| self.records[round].bids.as_slice())
    }

    /// Items already won by `player` (for matroid rounds, the slot index 0).
    pub fn won_items(&self, player: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for rec in self.records {
            for (s, w) in rec.winners.iter().enumerate() {
                if *w == Some(player) {
                    out.push(rec.items.get(s).copied().unwrap_or(0));
                }
            }
        }
        out
    }

    pub fn has_won(&self, player: usize) -> bool {
        self.records.iter().any(|r| r.winners.contains(&Some(player)))
    }

    /// Canonical text encoding of the public history: rounds separated by `|`, slots by
    /// `/`, each slot `winner[:price][;bid,bid,...]`; `-` marks an unsold slot.
    pub fn key(&self) -> String {
        let mut out = String::new();
        for (r, rec) in self.records.iter().enumerate() {
            if r > 0 {
                out.push('|');
            }
            for (s, w) in rec.winners.iter().enumerate() {
                if s > 0 {
                    out.push('/');
                }
                match w {
                    Some(w) => write!(out, "{w}").unwrap(),
                    None => out.push('-'),
                }
                if self.policy.reveals_price() {
                    write!(out, ":{}", rec.prices[s]).unwrap();
                }
                if self.policy.reveals_bids() {
                    out.push(';');
                    for (k, b) in rec.bids.iter().enumerate() {
                        if k > 0 {
                            out.push(',');
                        }
                        write!(out, "{}", b[s]).unwrap();
                    }
                }
            }
        }
        out
    }
}

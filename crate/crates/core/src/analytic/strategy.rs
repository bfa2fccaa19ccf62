use crate::combinat::full_rank;
use crate::engine::{BidContext, CutPolicy, Market, Scenario, Strategy};
use crate::model::RngStream;

use super::first_round::bid_unchecked;
use super::second_round::{Role, SecondRound};

/// The solved two-round equilibrium: in the first round both contenders bid
/// `1 - ln(1+v)/v`; in the last round the first-round loser plays the weak side and the
/// newcomer the strong side of the asymmetric auction implied by the announced price.
/// A first-round winner bids 0 afterwards.
///
/// Plays the two-item matching game and the triangle cut auction with an opening cut of
/// two elements; values must lie in `[0, 1]` and prices must be announced.
#[derive(Debug, Clone, Copy, Default)]
pub struct TwoItemEquilibrium;

impl TwoItemEquilibrium {
    fn own_value(ctx: &BidContext<'_>) -> f64 {
        let v = match ctx.round.items.first() {
            Some(&j) => ctx.values[j],
            None => ctx.values[0],
        };
        v.clamp(0.0, 1.0)
    }
}

impl Strategy for TwoItemEquilibrium {
    fn bid(&self, ctx: &BidContext<'_>, _rng: &mut RngStream) -> Vec<f64> {
        let v = Self::own_value(ctx);
        let slots = ctx.round.slots();
        let h = &ctx.history;
        if h.is_empty() {
            return vec![bid_unchecked(v); slots];
        }
        if h.len() > 1 || h.has_won(ctx.player) {
            return vec![0.0; slots];
        }
        let price = h.price(0, 0).unwrap_or(0.0);
        let game = SecondRound::after_price(price).expect("announced prices are non-negative");
        let bid = if h.took_part(0, ctx.player) {
            game.weak_best_response(v)
        } else {
            game.bid(Role::Strong, v).expect("value clamped to [0, 1]")
        };
        vec![bid; slots]
    }

    fn check(&self, scenario: &Scenario) -> Result<(), String> {
        if !scenario.info.reveals_price() {
            return Err("needs the first-round price to be announced".into());
        }
        let (lo, hi) = scenario.dist.value_range();
        if lo < 0.0 || hi > 1.0 {
            return Err(format!("values must lie in [0, 1], prior ranges over [{lo}, {hi}]"));
        }
        match &scenario.market {
            Market::Matching { groups, .. } => {
                if groups.len() != 2 || groups.iter().any(|g| g.len() != 1) {
                    return Err("needs two single-item rounds".into());
                }
            }
            Market::MatroidCut { matroid, cuts } => {
                let opening_pair = matches!(cuts, CutPolicy::Explicit(seq) if seq.first().is_some_and(|c| c.len() == 2));
                if full_rank(matroid.as_ref()) != 2 || !opening_pair {
                    return Err("needs a rank-2 matroid with an opening cut of two elements".into());
                }
            }
        }
        Ok(())
    }

    fn label(&self) -> String {
        "appendixA".into()
    }
}

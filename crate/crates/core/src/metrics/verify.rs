use std::fmt::Write as _;
use std::sync::Arc;

use crate::engine::{play_as_type, run_auction, BidContext, ConstantBid, Market, Scenario, Strategy};
use crate::model::RngStream;
use crate::stats::{try_accumulate_into, Moments};

use super::deviation::{bluff_plan, sample_deviation_bid};
use super::MetricsError;

/// A unilateral deviation, built afresh for each own type and sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Deviation {
    /// Follow the profile's own rule as if the value were `masquerade` (a scalar type)
    /// before `switch_round`, truthfully afterwards.
    Bluff { masquerade: f64, switch_round: usize },
    /// Bid `fraction` of the own value in round `round`, follow the profile elsewhere.
    RoundBid { round: usize, fraction: f64 },
    /// Bid `fraction` of the own value in every round until winning.
    FixedBid { fraction: f64 },
    /// Play as an independently sampled type, then bid a grab bid on the item an optimal
    /// allocation assigns (matching markets).
    BluffAndGrab,
    /// Bid one grab bid in every round until winning.
    ConstantGrab,
}

impl Deviation {
    pub fn label(&self) -> String {
        match self {
            Deviation::Bluff { masquerade, switch_round } => format!("bluff:{masquerade}@{switch_round}"),
            Deviation::RoundBid { round, fraction } => format!("round{round}:{fraction}"),
            Deviation::FixedBid { fraction } => format!("fixed:{fraction}"),
            Deviation::BluffAndGrab => "bluff-and-grab".into(),
            Deviation::ConstantGrab => "constant-grab".into(),
        }
    }
}

/// Bids `bid` in one round and defers to `base` in the others.
struct RoundOverride {
    base: Arc<dyn Strategy>,
    round: usize,
    bid: f64,
}

impl Strategy for RoundOverride {
    fn bid(&self, ctx: &BidContext<'_>, rng: &mut RngStream) -> Vec<f64> {
        if ctx.round.index == self.round {
            vec![self.bid; ctx.round.slots()]
        } else {
            self.base.bid(ctx, rng)
        }
    }

    fn check(&self, scenario: &Scenario) -> Result<(), String> {
        self.base.check(scenario)
    }

    fn label(&self) -> String {
        format!("{} with {} in round {}", self.base.label(), self.bid, self.round)
    }
}

/// 100 first-round bluffs over the value range, 50 bid levels in each of the first two
/// rounds, 10 constant bids, and the grab deviation that fits the market.
pub fn default_menu(scenario: &Scenario) -> Vec<Deviation> {
    let hi = scenario.dist.value_range().1;
    let mut menu: Vec<Deviation> = (1..=100).map(|k| Deviation::Bluff { masquerade: hi * k as f64 / 100.0, switch_round: 1 }).collect();
    for round in 0..2 {
        menu.extend((0..50).map(|k| Deviation::RoundBid { round, fraction: k as f64 / 50.0 }));
    }
    menu.extend((0..10).map(|k| Deviation::FixedBid { fraction: k as f64 / 10.0 }));
    menu.push(match scenario.market {
        Market::Matching { .. } => Deviation::BluffAndGrab,
        Market::MatroidCut { .. } => Deviation::ConstantGrab,
    });
    menu
}

/// One row of a verification: a deviation for one player with one own value.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub player: usize,
    pub own_value: f64,
    pub deviation: String,
    pub eq_utility: f64,
    pub deviation_utility: f64,
    /// Mean paired gain of the deviation and its standard error.
    pub gain: f64,
    pub stderr: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub samples: usize,
    pub tol: f64,
    pub rows: Vec<VerifyRow>,
}

pub const VERIFY_HEADER: &str = "player,own_value,deviation,eq_utility,deviation_utility,gain,stderr,flagged";

impl VerifyReport {
    pub fn flagged(&self) -> impl Iterator<Item = &VerifyRow> {
        self.rows.iter().filter(|r| r.flagged)
    }

    pub fn passed(&self) -> bool {
        self.flagged().next().is_none()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{VERIFY_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.player, r.own_value, r.deviation, r.eq_utility, r.deviation_utility, r.gain, r.stderr, r.flagged
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let cells = self.rows.iter().map(|r| (r.player, r.own_value.to_bits())).collect::<std::collections::BTreeSet<_>>().len();
        let _ = writeln!(out, "samples          {}", self.samples);
        let _ = writeln!(out, "tolerance        {}", self.tol);
        let _ = writeln!(out, "deviations       {} over {} player types", self.rows.len(), cells);
        let _ = writeln!(out, "flagged          {}", self.flagged().count());
        if let Some(worst) = self.rows.iter().max_by(|a, b| (a.gain - 3.0 * a.stderr).total_cmp(&(b.gain - 3.0 * b.stderr))) {
            let _ = writeln!(
                out,
                "largest gain     {:.6} ± {:.6} (player {}, value {}, {})",
                worst.gain, worst.stderr, worst.player, worst.own_value, worst.deviation
            );
        }
        out
    }
}

/// The deviations that do not depend on per-sample randomness, built once per own type.
fn build_fixed(
    scenario: &Scenario,
    base: &Arc<dyn Strategy>,
    player: usize,
    own: &[f64],
    deviation: Deviation,
) -> Result<Option<Arc<dyn Strategy>>, MetricsError> {
    let top = own.iter().copied().fold(0.0, f64::max);
    Ok(match deviation {
        Deviation::Bluff { masquerade, switch_round } => {
            let row = scenario
                .dist
                .row_from_scalar(player, masquerade)
                .ok_or_else(|| MetricsError::Unsupported("bluffing needs scalar types".into()))?;
            Some(play_as_type(base.clone(), row, switch_round, base.clone()))
        }
        Deviation::RoundBid { round, fraction } => Some(Arc::new(RoundOverride { base: base.clone(), round, bid: fraction * top })),
        Deviation::FixedBid { fraction } => Some(Arc::new(ConstantBid(fraction * top))),
        Deviation::BluffAndGrab => {
            if !matches!(scenario.market, Market::Matching { .. }) {
                return Err(MetricsError::Unsupported("bluff-and-grab needs a matching market".into()));
            }
            None
        }
        Deviation::ConstantGrab => None,
    })
}

fn build_sampled(
    scenario: &Scenario,
    base: &Arc<dyn Strategy>,
    player: usize,
    own: &[f64],
    deviation: Deviation,
    rng: &mut RngStream,
) -> Arc<dyn Strategy> {
    let top = own.iter().copied().fold(0.0, f64::max);
    match deviation {
        Deviation::BluffAndGrab => {
            let sampled = scenario.dist.sample(&rng.split(0));
            bluff_plan(scenario, base, player, own, &sampled, &mut rng.split(1)).0
        }
        _ => Arc::new(ConstantBid(sample_deviation_bid(top, rng))),
    }
}

/// For every player and every own scalar value in `own_values[player]`, compares the profile's interim utility
/// with each deviation on common random numbers: sample `s` of cell `c` draws the others'
/// values from `rng.split(c).split(s).split(0)` and plays every variant with the same
/// engine stream. A deviation is flagged when its mean gain exceeds `tol` plus three
/// standard errors.
pub fn verify_bne(
    scenario: &Scenario,
    strategies: &[Arc<dyn Strategy>],
    menu: &[Deviation],
    own_values: &[Vec<f64>],
    rng: &RngStream,
    n: usize,
    tol: f64,
) -> Result<VerifyReport, MetricsError> {
    if strategies.len() != scenario.players() {
        return Err(MetricsError::Unsupported(format!("{} strategies for {} players", strategies.len(), scenario.players())));
    }
    if own_values.len() != scenario.players() {
        return Err(MetricsError::Unsupported(format!("own values for {} players, scenario has {}", own_values.len(), scenario.players())));
    }
    if n < 2 {
        return Err(MetricsError::TooFewSamples { min: 2, got: n });
    }
    let mut rows = Vec::new();
    let mut cell = 0u64;
    for player in 0..scenario.players() {
        for &x in &own_values[player] {
            let own = scenario
                .dist
                .row_from_scalar(player, x)
                .ok_or_else(|| MetricsError::Unsupported("verification needs scalar types".into()))?;
            let fixed = menu
                .iter()
                .map(|&dev| build_fixed(scenario, &strategies[player], player, &own, dev))
                .collect::<Result<Vec<_>, _>>()?;
            let root = rng.split(cell);
            cell += 1;
            let m = try_accumulate_into(n, Moments::diagonal(menu.len() + 1), |s, acc| {
                let stream = root.split(s as u64);
                let values = scenario.dist.sample_given(player, &own, &stream.split(0))?;
                let engine = stream.split(1);
                let eq = run_auction(scenario, strategies, &values, &engine)?.utilities[player];
                let mut point = Vec::with_capacity(menu.len() + 1);
                point.push(eq);
                let mut profile = strategies.to_vec();
                for (d, &dev) in menu.iter().enumerate() {
                    profile[player] = match &fixed[d] {
                        Some(s) => s.clone(),
                        None => build_sampled(scenario, &strategies[player], player, &own, dev, &mut stream.split(2 + d as u64)),
                    };
                    point.push(run_auction(scenario, &profile, &values, &engine)?.utilities[player] - eq);
                }
                acc.push(&point);
                Ok::<(), MetricsError>(())
            })?;
            let eq_utility = m.mean(0);
            for (d, dev) in menu.iter().enumerate() {
                let gain = m.mean(d + 1);
                let stderr = m.stderr(d + 1);
                rows.push(VerifyRow {
                    player,
                    own_value: x,
                    deviation: dev.label(),
                    eq_utility,
                    deviation_utility: eq_utility + gain,
                    gain,
                    stderr,
                    flagged: gain > tol + 3.0 * stderr,
                });
            }
        }
    }
    Ok(VerifyReport { samples: n, tol, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{InfoPolicy, TieRule, Truthful};
    use crate::model::TypeDistribution;

    fn single_item(players: usize) -> Scenario {
        let dist = TypeDistribution::uniform_scalars(0.0, 1.0, vec![vec![1.0]; players]).unwrap();
        let market = Market::Matching { items: 1, groups: vec![vec![0]], single_value: true };
        Scenario::new("one", market, dist, InfoPolicy::WinnerPrice, TieRule::LowestIndex).unwrap()
    }

    #[test]
    fn menu_shape() {
        let menu = default_menu(&single_item(2));
        assert_eq!(menu.len(), 211);
        assert_eq!(menu.last(), Some(&Deviation::BluffAndGrab));
    }

    #[test]
    fn truthful_first_price_is_not_an_equilibrium() {
        let sc = single_item(2);
        let s: Vec<Arc<dyn Strategy>> = vec![Arc::new(Truthful); 2];
        let menu = [Deviation::FixedBid { fraction: 0.5 }, Deviation::FixedBid { fraction: 1.0 }];
        let r = verify_bne(&sc, &s, &menu, &[vec![0.8], vec![0.8]], &RngStream::new(5), 4000, 0.01).unwrap();
        assert!(!r.passed());
        // shading to half wins with probability 0.4 and keeps 0.4: gain about 0.16
        let shade = &r.rows[0];
        assert!(shade.flagged && (shade.gain - 0.16).abs() < 4.0 * shade.stderr);
        // bidding the value again changes nothing
        assert_eq!(r.rows[1].gain, 0.0);
        assert!(!r.rows[1].flagged);
        assert!(r.to_csv().starts_with(VERIFY_HEADER));
    }

    #[test]
    fn equilibrium_of_single_item_auction_passes() {
        // two bidders, U(0,1): bidding half the value is the equilibrium
        let sc = single_item(2);
        let s: Vec<Arc<dyn Strategy>> = vec![Arc::new(crate::engine::MyopicHalving); 2];
        let menu: Vec<Deviation> = (0..20).map(|k| Deviation::FixedBid { fraction: k as f64 / 20.0 }).collect();
        let r = verify_bne(&sc, &s, &menu, &[vec![0.3, 0.9], vec![0.3, 0.9]], &RngStream::new(6), 20_000, 0.01).unwrap();
        assert!(r.passed(), "{}", r.summary());
    }
}

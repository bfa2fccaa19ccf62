use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::combinat::{greedy_max_basis, optimal_assignment, participation_matching};
use crate::engine::{play_as_type, run_auction, Abstain, ConstantBid, Market, Scenario, Strategy, TargetBid, Trace};
use crate::model::{RngStream, ValuationProfile};
use crate::stats::{Moments, Z95};

use super::MetricsError;

/// `1 - 1/e`: the share of a value a grab bid secures in expectation.
pub const GRAB_SHARE: f64 = 1.0 - 1.0 / std::f64::consts::E;

/// CDF of the grab bid with density `1/(v - t)` on `[0, (1 - 1/e) v]`: `ln(v / (v - t))`.
pub fn deviation_bid_cdf(v: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= GRAB_SHARE * v {
        1.0
    } else {
        (v / (v - t)).ln()
    }
}

/// Inverse CDF of the grab bid: `v (1 - e^-u)`.
pub fn deviation_bid_quantile(v: f64, u: f64) -> f64 {
    if v > 0.0 {
        -v * (-u).exp_m1()
    } else {
        0.0
    }
}

/// Draws a grab bid for an item worth `v` (0 when `v` is not positive).
pub fn sample_deviation_bid(v: f64, rng: &mut RngStream) -> f64 {
    if v > 0.0 {
        deviation_bid_quantile(v, rng.uniform())
    } else {
        0.0
    }
}

/// Pearson goodness-of-fit of grab-bid samples against their density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Chi-square test on `bins` equal-width bins of `[0, (1 - 1/e) v]`.
pub fn deviation_bid_fit(samples: &[f64], v: f64, bins: usize) -> FitTest {
    let top = GRAB_SHARE * v;
    let mut counts = vec![0usize; bins];
    for &t in samples {
        let k = ((t / top) * bins as f64).floor() as usize;
        counts[k.min(bins - 1)] += 1;
    }
    let n = samples.len() as f64;
    let statistic: f64 = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let lo = top * k as f64 / bins as f64;
            let hi = top * (k + 1) as f64 / bins as f64;
            let expected = n * (deviation_bid_cdf(v, hi) - deviation_bid_cdf(v, lo));
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    let dof = bins - 1;
    let p_value = ChiSquared::new(dof as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN);
    FitTest { statistic, dof, p_value }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviationKind {
    /// Play as a sampled type, then grab the item an optimal allocation would assign.
    Bluff,
    /// Bid one grab bid in every cut until winning.
    ConstantBid,
}

impl DeviationKind {
    pub fn name(self) -> &'static str {
        match self {
            DeviationKind::Bluff => "bluff",
            DeviationKind::ConstantBid => "constant-bid",
        }
    }
}

/// One sample of a deviation: realised utility and, when the comparison applies, the
/// lower-bound term computed from the same trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationSample {
    pub utility: f64,
    pub bound: Option<f64>,
    /// Whether the trace differed from the equilibrium trace while the deviator kept losing.
    pub visible: bool,
}

/// Monte Carlo outcome of a deviation for one player with a fixed own valuation.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationOutcome {
    pub player: usize,
    pub kind: DeviationKind,
    pub own_values: Vec<f64>,
    pub samples: Vec<DeviationSample>,
    pub mean: f64,
    pub stderr: f64,
    /// Mean lower bound over the samples where it applies.
    pub bound_mean: f64,
    /// Mean and standard error of `utility - bound` over the same samples.
    pub excess_mean: f64,
    pub excess_stderr: f64,
    pub compared: usize,
    /// Samples without a bound (the deviator was not in the optimum or already won in
    /// equilibrium).
    pub skipped: usize,
    pub transparency_violations: usize,
}

impl DeviationOutcome {
    fn from_samples(player: usize, kind: DeviationKind, own_values: Vec<f64>, samples: Vec<DeviationSample>) -> Self {
        let mut all = Moments::new(1);
        let mut paired = Moments::new(2);
        for s in &samples {
            all.push(&[s.utility]);
            if let Some(b) = s.bound {
                paired.push(&[b, s.utility - b]);
            }
        }
        let compared = paired.count();
        Self {
            player,
            kind,
            own_values,
            mean: all.mean(0),
            stderr: all.stderr(0),
            bound_mean: if compared > 0 { paired.mean(0) } else { f64::NAN },
            excess_mean: if compared > 0 { paired.mean(1) } else { f64::NAN },
            excess_stderr: paired.stderr(1),
            compared,
            skipped: samples.len() - compared,
            transparency_violations: samples.iter().filter(|s| s.visible).count(),
            samples,
        }
    }

    /// Whether the mean utility clears the mean bound within `sigmas` standard errors.
    pub fn bound_holds(&self, sigmas: f64) -> bool {
        self.compared == 0 || self.excess_mean >= -sigmas * self.excess_stderr
    }

    /// `sample,utility,bound` rows; the bound is empty where it does not apply.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,utility,bound\n");
        for (k, s) in self.samples.iter().enumerate() {
            let bound = s.bound.map(|b| b.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{k},{},{bound}", s.utility);
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "deviation        {}", self.kind.name());
        let _ = writeln!(out, "player           {}", self.player);
        let _ = writeln!(out, "own values       {:?}", self.own_values);
        let _ = writeln!(out, "samples          {}", self.samples.len());
        let _ = writeln!(
            out,
            "mean utility     {:.6} (95% CI {:.6} .. {:.6})",
            self.mean,
            self.mean - Z95 * self.stderr,
            self.mean + Z95 * self.stderr
        );
        let _ = writeln!(out, "compared         {} (skipped {})", self.compared, self.skipped);
        let _ = writeln!(out, "mean bound       {:.6}", self.bound_mean);
        let _ = writeln!(out, "utility - bound  {:.6} ± {:.6}", self.excess_mean, self.excess_stderr);
        let _ = writeln!(out, "bound holds      {}", self.bound_holds(3.0));
        if self.kind == DeviationKind::ConstantBid {
            let _ = writeln!(out, "visible losses   {}", self.transparency_violations);
        }
        out
    }
}

fn check_profile(scenario: &Scenario, strategies: &[Arc<dyn Strategy>], player: usize, own_values: &[f64]) -> Result<(), MetricsError> {
    if strategies.len() != scenario.players() {
        return Err(MetricsError::Unsupported(format!("{} strategies for {} players", strategies.len(), scenario.players())));
    }
    if player >= scenario.players() {
        return Err(MetricsError::Unsupported(format!("no player {player}")));
    }
    if own_values.len() != scenario.width() || own_values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(MetricsError::Unsupported(format!("own values {own_values:?} do not fit the scenario")));
    }
    Ok(())
}

fn with_player(strategies: &[Arc<dyn Strategy>], player: usize, s: Arc<dyn Strategy>) -> Vec<Arc<dyn Strategy>> {
    let mut out = strategies.to_vec();
    out[player] = s;
    out
}

/// Bluff plan for one sample: masquerade as the sampled type until the round selling the
/// item an optimal allocation of `(own, sampled others)` gives the deviator, then bid a
/// grab bid on that item. Returns the strategy and `(item, round, bid)` when there is a
/// target; without one the deviator abstains.
pub(crate) fn bluff_plan(
    scenario: &Scenario,
    base: &Arc<dyn Strategy>,
    player: usize,
    own: &[f64],
    sampled: &ValuationProfile,
    rng: &mut RngStream,
) -> (Arc<dyn Strategy>, Option<(usize, usize, f64)>) {
    let mixed = sampled.with_row(player, own);
    let target = optimal_assignment(&mixed.matrix()).item_of(player);
    match target.and_then(|j| scenario.round_of_item(j).map(|r| (j, r))) {
        Some((j, r)) => {
            let t = sample_deviation_bid(own[j], rng);
            let s = play_as_type(base.clone(), sampled.row(player).to_vec(), r, Arc::new(TargetBid { item: j, bid: t }));
            (s, Some((j, r, t)))
        }
        None => (Arc::new(Abstain), None),
    }
}

/// Highest bid on `item` in its round from eligible bidders other than `player`.
fn others_price(scenario: &Scenario, trace: &Trace, item: usize, player: usize) -> f64 {
    let Some((r, slot)) = trace.locate_item(item) else { return 0.0 };
    let rec = &trace.rounds[r];
    rec.participants
        .iter()
        .zip(&rec.bids)
        .filter(|(&p, _)| p != player && scenario.dist.eligible(p, item))
        .map(|(_, b)| b[slot])
        .fold(0.0, f64::max)
}

/// The bluffing deviation in a matching market. Sample `s` draws the others' values and
/// an independent profile `w` from `rng.split(s)`, plays as `w`'s type for the deviator
/// until the target item's round and then bids a grab bid on it. The bound term is
/// `(1 - 1/e) v_ij - p_j - P`, with `p_j` the best competing bid on the target and `P`
/// what the deviator paid before the target's round, both read from the same trace.
pub fn bluff_deviation_utility(
    scenario: &Scenario,
    strategies: &[Arc<dyn Strategy>],
    player: usize,
    own_values: &[f64],
    rng: &RngStream,
    n: usize,
) -> Result<DeviationOutcome, MetricsError> {
    if !matches!(scenario.market, Market::Matching { .. }) {
        return Err(MetricsError::Unsupported("the bluffing deviation needs a matching market".into()));
    }
    check_profile(scenario, strategies, player, own_values)?;
    let samples: Result<Vec<DeviationSample>, MetricsError> = (0..n)
        .into_par_iter()
        .map(|s| {
            let stream = rng.split(s as u64);
            let values = scenario.dist.sample_given(player, own_values, &stream.split(0))?;
            let sampled = scenario.dist.sample(&stream.split(1));
            let (dev, target) = bluff_plan(scenario, &strategies[player], player, own_values, &sampled, &mut stream.split(2));
            let trace = run_auction(scenario, &with_player(strategies, player, dev), &values, &stream.split(3))?;
            let utility = trace.utilities[player];
            let bound = match target {
                None => Some(0.0),
                Some((j, r, _)) => {
                    let paid: f64 = trace.rounds[..r]
                        .iter()
                        .flat_map(|rec| rec.winners.iter().zip(&rec.prices))
                        .filter(|(w, _)| **w == Some(player))
                        .map(|(_, p)| p)
                        .sum();
                    Some(GRAB_SHARE * own_values[j] - others_price(scenario, &trace, j, player) - paid)
                }
            };
            Ok(DeviationSample { utility, bound, visible: false })
        })
        .collect();
    Ok(DeviationOutcome::from_samples(player, DeviationKind::Bluff, own_values.to_vec(), samples?))
}

/// Whether the two traces agree on everything public and on the others' bids in every
/// round before `player` first wins in either of them.
pub fn losing_rounds_agree(a: &Trace, b: &Trace, player: usize) -> bool {
    let first_win = |t: &Trace| t.rounds.iter().position(|r| r.winners.contains(&Some(player))).unwrap_or(t.rounds.len());
    let until = first_win(a).min(first_win(b));
    if a.rounds.len() < until || b.rounds.len() < until {
        return false;
    }
    let others = |t: &Trace, r: usize| -> Vec<(usize, Vec<f64>)> {
        let rec = &t.rounds[r];
        rec.participants.iter().zip(&rec.bids).filter(|(&p, _)| p != player).map(|(&p, b)| (p, b.clone())).collect()
    };
    (0..until).all(|r| {
        let (x, y) = (&a.rounds[r], &b.rounds[r]);
        x.participants == y.participants && x.winners == y.winners && x.prices == y.prices && others(a, r) == others(b, r)
    })
}

/// The constant-bid deviation in a matroid cut auction: bid one grab bid `t` in every
/// cut until winning. When the deviator belongs to the optimal basis but does not win in
/// equilibrium, the bound term is `(1 - 1/e) v_i - p`, with `p` the equilibrium price of
/// the round matched to it in the participation matching. Every sample also checks that
/// losing bids leave the other bidders' play unchanged.
pub fn constant_bid_deviation_utility(
    scenario: &Scenario,
    strategies: &[Arc<dyn Strategy>],
    player: usize,
    own_value: f64,
    rng: &RngStream,
    n: usize,
) -> Result<DeviationOutcome, MetricsError> {
    let Market::MatroidCut { matroid, .. } = &scenario.market else {
        return Err(MetricsError::Unsupported("the constant-bid deviation needs a matroid cut auction".into()));
    };
    if !scenario.info.reveals_price() || scenario.info.reveals_bids() {
        return Err(MetricsError::Unsupported("the constant-bid deviation needs winner and price announcements".into()));
    }
    let own = [own_value];
    check_profile(scenario, strategies, player, &own)?;
    let samples: Result<Vec<DeviationSample>, MetricsError> = (0..n)
        .into_par_iter()
        .map(|s| {
            let stream = rng.split(s as u64);
            let values = scenario.dist.sample_given(player, &own, &stream.split(0))?;
            let t = sample_deviation_bid(own_value, &mut stream.split(2));
            let eq = run_auction(scenario, strategies, &values, &stream.split(3))?;
            let dev = run_auction(scenario, &with_player(strategies, player, Arc::new(ConstantBid(t))), &values, &stream.split(3))?;
            let scalars: Vec<f64> = (0..scenario.players()).map(|i| values.scalar(i)).collect();
            let basis = greedy_max_basis(matroid.as_ref(), &scalars);
            let bound = if basis.contains(&player) && !eq.allocation.has_won(player) {
                let matching = participation_matching(&eq.participant_sets(), &basis)?;
                let round = matching.iter().find(|(e, _)| *e == player).map(|&(_, r)| r).expect("basis elements are matched");
                Some(GRAB_SHARE * own_value - eq.rounds[round].prices[0])
            } else {
                None
            };
            Ok(DeviationSample { utility: dev.utilities[player], bound, visible: !losing_rounds_agree(&eq, &dev, player) })
        })
        .collect();
    Ok(DeviationOutcome::from_samples(player, DeviationKind::ConstantBid, own.to_vec(), samples?))
}

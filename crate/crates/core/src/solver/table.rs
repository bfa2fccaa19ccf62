use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::engine::{BidContext, History, RoundDescriptor, Strategy};
use crate::model::RngStream;

use super::game::{nearest, DiscreteGame};
use super::SolverError;

/// Behaviour of one type at one history, over the bid grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Row {
    Pure(usize),
    /// Probabilities with their running sums: `cum[k]` is the mass strictly below bid `k`.
    Mixed { probs: Vec<f64>, cum: Vec<f64> },
}

impl Row {
    pub fn mixed(probs: Vec<f64>) -> Result<Self, SolverError> {
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(SolverError::BadRow(format!("probabilities {probs:?} do not form a distribution")));
        }
        let mut cum = Vec::with_capacity(probs.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for p in &probs {
            acc += p;
            cum.push(acc);
        }
        Ok(Row::Mixed { probs, cum })
    }

    fn base(&self, bid: usize) -> f64 {
        match self {
            Row::Pure(k) => f64::from(u8::from(*k == bid)),
            Row::Mixed { probs, .. } => probs[bid],
        }
    }

    fn base_below(&self, bid: usize) -> f64 {
        match self {
            Row::Pure(k) => f64::from(u8::from(*k < bid)),
            Row::Mixed { cum, .. } => cum[bid],
        }
    }
}

/// Behavioural strategies for every player, type and decision history of a
/// [`DiscreteGame`]. A table-wide perturbation `epsilon` mixes every row with the
/// uniform distribution on the bid grid: each bid gets at least `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTable {
    /// `rows[node][player][type]`; empty for players not bidding at the node.
    rows: Vec<Vec<Vec<Row>>>,
    epsilon: f64,
    bids: usize,
}

impl StrategyTable {
    /// Every participant bids the grid point `pick(node, player, type)`.
    pub fn from_fn(game: &DiscreteGame, mut pick: impl FnMut(usize, usize, usize) -> Row) -> Self {
        let rows = game
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, node)| {
                (0..game.players())
                    .map(|j| {
                        if node.participants.contains(&j) {
                            (0..game.types(j).len()).map(|t| pick(id, j, t)).collect()
                        } else {
                            Vec::new()
                        }
                    })
                    .collect()
            })
            .collect();
        Self { rows, epsilon: 0.0, bids: game.bids().len() }
    }

    /// Snaps deterministic engine strategies onto the grids: each row is the grid bid
    /// nearest to what `strategies[player]` bids with that type at that history.
    pub fn from_strategies(game: &DiscreteGame, strategies: &[Arc<dyn Strategy>]) -> Result<Self, SolverError> {
        if strategies.len() != game.players() {
            return Err(SolverError::BadRow(format!("{} strategies for {} players", strategies.len(), game.players())));
        }
        for (j, s) in strategies.iter().enumerate() {
            s.check(game.scenario()).map_err(|reason| SolverError::Unsupported(format!("player {j}: {reason}")))?;
        }
        let sc = game.scenario();
        let records: Vec<_> = (0..game.nodes().len()).map(|id| game.records(id)).collect();
        Ok(Self::from_fn(game, |id, j, t| {
            let node = game.node(id);
            let round = RoundDescriptor { index: node.round, items: node.item.into_iter().collect(), participants: node.participants.clone() };
            let values = game.value_row(j, t);
            let ctx = BidContext {
                player: j,
                values: &values,
                history: History::new(&records[id], sc.info),
                round: &round,
                scenario: sc,
            };
            let mut rng = RngStream::new(0);
            let bid = strategies[j].bid(&ctx, &mut rng)[0];
            Row::Pure(game.nearest_bid(bid))
        }))
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self, SolverError> {
        if !(0.0..=1.0 / self.bids as f64).contains(&epsilon) {
            return Err(SolverError::BadRow(format!("perturbation {epsilon} outside [0, 1/{}]", self.bids)));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn row(&self, node: usize, player: usize, t: usize) -> &Row {
        &self.rows[node][player][t]
    }

    pub fn set_row(&mut self, node: usize, player: usize, t: usize, row: Row) {
        self.rows[node][player][t] = row;
    }

    fn keep(&self) -> f64 {
        1.0 - self.epsilon * self.bids as f64
    }

    /// Probability that the row bids grid point `bid`.
    pub fn prob(&self, node: usize, player: usize, t: usize, bid: usize) -> f64 {
        let base = self.rows[node][player][t].base(bid);
        if self.epsilon == 0.0 {
            base
        } else {
            self.epsilon + self.keep() * base
        }
    }

    /// Probability that the row bids strictly below grid point `bid`.
    pub fn below(&self, node: usize, player: usize, t: usize, bid: usize) -> f64 {
        let base = self.rows[node][player][t].base_below(bid);
        if self.epsilon == 0.0 {
            base
        } else {
            self.epsilon * bid as f64 + self.keep() * base
        }
    }

    /// Probability that the row bids at most grid point `bid`.
    pub fn at_most(&self, node: usize, player: usize, t: usize, bid: usize) -> f64 {
        self.below(node, player, t, bid) + self.prob(node, player, t, bid)
    }

    /// Adds `weight` times the unperturbed row to `out`.
    pub(crate) fn add_base(&self, node: usize, player: usize, t: usize, weight: f64, out: &mut [f64]) {
        match &self.rows[node][player][t] {
            Row::Pure(k) => out[*k] += weight,
            Row::Mixed { probs, .. } => out.iter_mut().zip(probs).for_each(|(o, p)| *o += weight * p),
        }
    }

    /// Turns a sum of unperturbed rows with total weight `weight` into the perturbed mixture.
    pub(crate) fn perturb(&self, weight: f64, base: &mut [f64]) {
        if self.epsilon > 0.0 {
            let keep = self.keep();
            base.iter_mut().for_each(|x| *x = self.epsilon * weight + keep * *x);
        }
    }

    /// `player,type,history,bid,prob` rows with the perturbation folded in.
    pub fn to_csv(&self, game: &DiscreteGame) -> String {
        let mut out = String::from("player,type,history,bid,prob\n");
        for (id, node) in game.nodes().iter().enumerate() {
            for &j in &node.participants {
                for t in 0..game.types(j).len() {
                    for (b, &bid) in game.bids().iter().enumerate() {
                        let p = self.prob(id, j, t, b);
                        if p > 0.0 {
                            let _ = writeln!(out, "{j},{},{},{bid},{p}", game.types(j)[t], node.key);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Plays a strategy table exported by [`StrategyTable::to_csv`]: looks up the own type
/// nearest to the player's highest item value and the announcement history, then samples a bid.
/// Histories missing from the table bid 0.
#[derive(Debug, Clone)]
pub struct TableStrategy {
    rows: HashMap<(usize, String), Vec<(f64, f64)>>,
    player_types: Vec<Vec<f64>>,
}

impl TableStrategy {
    pub fn from_csv(text: &str) -> Result<Self, SolverError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| SolverError::BadRow("empty strategy table".into()))?;
        if header.trim() != "player,type,history,bid,prob" {
            return Err(SolverError::BadRow(format!("unexpected header {header:?}")));
        }
        let mut rows: HashMap<(usize, String), Vec<(f64, f64)>> = HashMap::new();
        let mut player_types: Vec<Vec<f64>> = Vec::new();
        for (k, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || SolverError::BadRow(format!("line {}: {line:?}", k + 2));
            if f.len() != 5 {
                return Err(bad());
            }
            let player: usize = f[0].trim().parse().map_err(|_| bad())?;
            let ty: f64 = f[1].trim().parse().map_err(|_| bad())?;
            let bid: f64 = f[3].trim().parse().map_err(|_| bad())?;
            let prob: f64 = f[4].trim().parse().map_err(|_| bad())?;
            if !(bid >= 0.0 && bid.is_finite() && (0.0..=1.0).contains(&prob)) {
                return Err(bad());
            }
            if player_types.len() <= player {
                player_types.resize(player + 1, Vec::new());
            }
            if !player_types[player].contains(&ty) {
                player_types[player].push(ty);
            }
            rows.entry((player, format!("{}#{}", f[2], ty))).or_default().push((bid, prob));
        }
        for ts in &mut player_types {
            ts.sort_by(f64::total_cmp);
        }
        Ok(Self { rows, player_types })
    }

    /// One shared strategy object per player.
    pub fn into_profile(self, players: usize) -> Vec<Arc<dyn Strategy>> {
        let shared = Arc::new(self);
        (0..players).map(|_| shared.clone() as Arc<dyn Strategy>).collect()
    }
}

impl Strategy for TableStrategy {
    fn bid(&self, ctx: &BidContext<'_>, rng: &mut RngStream) -> Vec<f64> {
        let slots = ctx.round.slots();
        let own = ctx.values.iter().copied().fold(0.0, f64::max);
        let grid = match self.player_types.get(ctx.player) {
            Some(g) if !g.is_empty() => g,
            _ => return vec![0.0; slots],
        };
        let ty = grid[nearest(grid, own)];
        let Some(row) = self.rows.get(&(ctx.player, format!("{}#{ty}", ctx.history.key()))) else {
            return vec![0.0; slots];
        };
        let u = rng.uniform();
        let mut acc = 0.0;
        for &(bid, p) in row {
            acc += p;
            if u < acc {
                return vec![bid; slots];
            }
        }
        vec![row.last().map_or(0.0, |r| r.0); slots]
    }

    fn label(&self) -> String {
        "table".into()
    }
}

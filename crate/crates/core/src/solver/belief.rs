use std::fmt::Write as _;

use super::game::{Component, DiscreteGame};
use super::table::StrategyTable;
use super::SolverError;

/// Belief about a player whose announced behaviour has probability zero under every type
/// still considered possible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffPathRule {
    /// Forget what was learned about that player and return to its prior.
    #[default]
    RevertToPrior,
    /// Put all mass on the highest type the player had before the surprise.
    TruncateAtMax,
}

/// Probability that `player` of type `t` produces its part of the announcement
/// `(winner, price)` at node `id`: bidding exactly the price when it won, otherwise
/// losing the tie-break against the winner.
pub(crate) fn likelihood(table: &StrategyTable, id: usize, player: usize, t: usize, winner: usize, price: usize) -> f64 {
    if player == winner {
        table.prob(id, player, t, price)
    } else if player < winner {
        table.below(id, player, t, price)
    } else {
        table.at_most(id, player, t, price)
    }
}

fn normalise(f: &mut [f64]) -> f64 {
    let s: f64 = f.iter().sum();
    if s > 0.0 {
        f.iter_mut().for_each(|x| *x /= s);
    }
    s
}

/// A round outcome made public at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Announcement {
    pub node: usize,
    pub winner: usize,
    pub price: usize,
}

/// Conditions a mixture-of-products belief on an announcement, for the `players` listed
/// (the others are left untouched). Returns the probability of the announcement under the
/// belief; zero means it was off path and `rule` was applied to every player whose
/// behaviour became impossible.
pub(crate) fn update(
    game: &DiscreteGame,
    table: &StrategyTable,
    belief: &mut Vec<Component>,
    players: &[usize],
    ann: Announcement,
    rule: OffPathRule,
) -> f64 {
    let Announcement { node: id, winner, price } = ann;
    let before = belief.clone();
    let mut vanished: Vec<Vec<usize>> = vec![Vec::new(); belief.len()];
    let mut total = 0.0;
    for (c, comp) in belief.iter_mut().enumerate() {
        let mut w = comp.weight;
        for &j in players {
            let f = &mut comp.factors[j];
            for (t, x) in f.iter_mut().enumerate() {
                if *x > 0.0 {
                    *x *= likelihood(table, id, j, t, winner, price);
                }
            }
            let s = normalise(f);
            if s == 0.0 {
                vanished[c].push(j);
            }
            w *= s;
        }
        comp.weight = w;
        total += w;
    }
    if total > 0.0 {
        belief.retain(|c| c.weight > 0.0);
        belief.iter_mut().for_each(|c| c.weight /= total);
        return total;
    }
    // off path: rebuild each component, repairing the players that vanished
    let mut repaired = before;
    let mut mass = 0.0;
    for (c, comp) in repaired.iter_mut().enumerate() {
        let mut w = comp.weight;
        for &j in players {
            let f = &mut comp.factors[j];
            if vanished[c].contains(&j) {
                match rule {
                    OffPathRule::RevertToPrior => *f = game.prior_marginal(j),
                    OffPathRule::TruncateAtMax => {
                        let top = f.iter().rposition(|&x| x > 0.0).unwrap_or(f.len() - 1);
                        f.iter_mut().for_each(|x| *x = 0.0);
                        f[top] = 1.0;
                    }
                }
            } else {
                for (t, x) in f.iter_mut().enumerate() {
                    *x *= likelihood(table, id, j, t, winner, price);
                }
                w *= normalise(f);
            }
        }
        comp.weight = w;
        mass += w;
    }
    if mass > 0.0 {
        repaired.retain(|c| c.weight > 0.0);
        repaired.iter_mut().for_each(|c| c.weight /= mass);
        *belief = repaired;
    } else {
        *belief = game.prior().to_vec();
    }
    0.0
}

/// Marginal of `player` under a mixture-of-products belief.
pub(crate) fn marginal(belief: &[Component], player: usize) -> Vec<f64> {
    let mut m = vec![0.0; belief.first().map_or(0, |c| c.factors[player].len())];
    for c in belief {
        for (t, f) in c.factors[player].iter().enumerate() {
            m[t] += c.weight * f;
        }
    }
    m
}

/// Public posterior after a history: the type-profile mixture and each player's marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefRow {
    pub components: Vec<Component>,
    pub marginals: Vec<Vec<f64>>,
    /// Whether every announcement had positive probability.
    pub on_path: bool,
}

/// Posterior over type profiles, as seen by an outsider, after the `(winner, price index)`
/// announcements in `history`.
pub fn bayes_update(
    game: &DiscreteGame,
    table: &StrategyTable,
    history: &[(usize, usize)],
    rule: OffPathRule,
) -> Result<BeliefRow, SolverError> {
    let mut belief = game.prior().to_vec();
    let mut id = 0;
    let mut on_path = true;
    for (r, &(w, p)) in history.iter().enumerate() {
        let node = game.node(id);
        let pos = node
            .participants
            .iter()
            .position(|&x| x == w)
            .ok_or_else(|| SolverError::BadHistory(format!("round {r}: player {w} did not take part")))?;
        if p >= game.bids().len() {
            return Err(SolverError::BadHistory(format!("round {r}: price index {p} is off the grid")));
        }
        let parts = node.participants.clone();
        if update(game, table, &mut belief, &parts, Announcement { node: id, winner: w, price: p }, rule) == 0.0 {
            on_path = false;
        }
        match node.child(pos, p, game.bids().len()) {
            Some(next) => id = next,
            None if r + 1 == history.len() => {}
            None => return Err(SolverError::BadHistory(format!("the auction ends after round {r}"))),
        }
    }
    let marginals = (0..game.players()).map(|j| marginal(&belief, j)).collect();
    Ok(BeliefRow { components: belief, marginals, on_path })
}

/// Public posteriors at every decision history of the game.
#[derive(Debug, Clone)]
pub struct BeliefTable {
    rows: Vec<BeliefRow>,
}

impl BeliefTable {
    pub fn build(game: &DiscreteGame, table: &StrategyTable, rule: OffPathRule) -> Self {
        let mut rows: Vec<BeliefRow> = Vec::with_capacity(game.nodes().len());
        for node in game.nodes() {
            let row = match node.parent {
                None => {
                    let components = game.prior().to_vec();
                    let marginals = (0..game.players()).map(|j| marginal(&components, j)).collect();
                    BeliefRow { components, marginals, on_path: true }
                }
                Some(parent) => {
                    let (w, p) = *node.history.last().expect("child nodes have history");
                    let mut belief = rows[parent].components.clone();
                    let parts = game.node(parent).participants.clone();
                    let seen = update(game, table, &mut belief, &parts, Announcement { node: parent, winner: w, price: p }, rule);
                    let marginals = (0..game.players()).map(|j| marginal(&belief, j)).collect();
                    BeliefRow { components: belief, marginals, on_path: rows[parent].on_path && seen > 0.0 }
                }
            };
            rows.push(row);
        }
        Self { rows }
    }

    pub fn row(&self, node: usize) -> &BeliefRow {
        &self.rows[node]
    }

    /// `player,history,type,prob` rows of the marginal posteriors.
    pub fn to_csv(&self, game: &DiscreteGame) -> String {
        let mut out = String::from("player,history,type,prob\n");
        for (id, row) in self.rows.iter().enumerate() {
            for (j, m) in row.marginals.iter().enumerate() {
                for (t, &p) in m.iter().enumerate() {
                    if p > 0.0 {
                        let _ = writeln!(out, "{j},{},{},{p}", game.node(id).key, game.types(j)[t]);
                    }
                }
            }
        }
        out
    }
}

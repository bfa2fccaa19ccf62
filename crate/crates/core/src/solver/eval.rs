use rayon::prelude::*;

use super::belief::{update, Announcement, OffPathRule};
use super::game::{Component, DiscreteGame};
use super::table::{Row, StrategyTable};

/// Utility of one player type under the table, and under its best reply to the others.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub player: usize,
    pub own_type: usize,
    pub current: f64,
    pub best: f64,
    /// Best bid index at every node the search visited.
    pub plan: Vec<(usize, usize)>,
}

impl Evaluation {
    pub fn gap(&self) -> f64 {
        (self.best - self.current).max(0.0)
    }
}

struct Walker<'a> {
    game: &'a DiscreteGame,
    table: &'a StrategyTable,
    player: usize,
    own: usize,
    memo: Vec<Option<(f64, f64)>>,
    plan: Vec<Option<usize>>,
}

/// Belief of `player` about everyone else at the start, given its own type.
fn conditioned_prior(game: &DiscreteGame, player: usize, own: usize) -> Vec<Component> {
    let mut comps: Vec<Component> = game
        .prior()
        .iter()
        .filter_map(|c| {
            let w = c.weight * c.factors[player][own];
            (w > 0.0).then(|| {
                let mut c = c.clone();
                c.weight = w;
                c.factors[player].iter_mut().enumerate().for_each(|(t, x)| *x = f64::from(u8::from(t == own)));
                c
            })
        })
        .collect();
    let total: f64 = comps.iter().map(|c| c.weight).sum();
    comps.iter_mut().for_each(|c| c.weight /= total);
    comps
}

impl Walker<'_> {
    /// Expected future utility at node `id` given the belief about opponents there:
    /// `(following the table, best reply)`.
    fn visit(&mut self, id: usize, belief: &[Component]) -> (f64, f64) {
        if let Some(v) = self.memo[id] {
            return v;
        }
        let game = self.game;
        let table = self.table;
        let node = game.node(id);
        let nb = game.bids().len();
        let me = self.player;
        let opp: Vec<usize> = node.participants.iter().copied().filter(|&j| j != me).collect();

        // bid distribution of each opponent under each component: probability and mass below
        let mut q = Vec::with_capacity(belief.len());
        let mut below = Vec::with_capacity(belief.len());
        for c in belief {
            let mut qc = Vec::with_capacity(opp.len());
            let mut bc = Vec::with_capacity(opp.len());
            for &j in &opp {
                let mut dist = vec![0.0; nb];
                let mut total = 0.0;
                for (t, &f) in c.factors[j].iter().enumerate() {
                    if f > 0.0 {
                        table.add_base(id, j, t, f, &mut dist);
                        total += f;
                    }
                }
                table.perturb(total, &mut dist);
                let mut cum = Vec::with_capacity(nb);
                let mut acc = 0.0;
                for &x in &dist {
                    cum.push(acc);
                    acc += x;
                }
                qc.push(dist);
                bc.push(cum);
            }
            q.push(qc);
            below.push(bc);
        }
        // probability that opponent in position k stays below a winner `winner` bidding `price`
        let stays_below = |c: usize, k: usize, winner: usize, price: usize| {
            if opp[k] < winner {
                below[c][k][price]
            } else {
                below[c][k][price] + q[c][k][price]
            }
        };

        // value of every announcement won by an opponent
        let mut lose_cur = vec![vec![0.0; nb]; opp.len()];
        let mut lose_best = vec![vec![0.0; nb]; opp.len()];
        for (kw, &w) in opp.iter().enumerate() {
            let pos = node.participants.iter().position(|&x| x == w).expect("opponent takes part");
            for p in 0..nb {
                let mut prob = 0.0;
                for (c, comp) in belief.iter().enumerate() {
                    let mut x = comp.weight * q[c][kw][p];
                    for k in 0..opp.len() {
                        if k != kw && x > 0.0 {
                            x *= stays_below(c, k, w, p);
                        }
                    }
                    prob += x;
                }
                if prob <= 0.0 {
                    continue;
                }
                let (vc, vb) = self.child_value(id, pos, p, belief, &opp, w);
                lose_cur[kw][p] = prob * vc;
                lose_best[kw][p] = prob * vb;
            }
        }

        let result = match node.participants.iter().position(|&x| x == me) {
            None => {
                let total = |a: &[Vec<f64>]| a.iter().flatten().sum::<f64>();
                (total(&lose_cur), total(&lose_best))
            }
            Some(pos) => {
                let gain = (game.item_value(me, self.own, id) - game.held_value(me, self.own, id)).max(0.0);
                // suffix sums: strict[k][b] over prices above b, weak[k][b] over prices from b
                let suffix = |a: &[f64]| {
                    let mut s = vec![0.0; nb + 1];
                    for p in (0..nb).rev() {
                        s[p] = s[p + 1] + a[p];
                    }
                    s
                };
                let sc: Vec<Vec<f64>> = lose_cur.iter().map(|a| suffix(a)).collect();
                let sb: Vec<Vec<f64>> = lose_best.iter().map(|a| suffix(a)).collect();
                let mut val_cur = vec![0.0; nb];
                let mut val_best = vec![0.0; nb];
                for b in 0..nb {
                    let mut win = 0.0;
                    for (c, comp) in belief.iter().enumerate() {
                        let mut x = comp.weight;
                        for k in 0..opp.len() {
                            x *= stays_below(c, k, me, b);
                        }
                        win += x;
                    }
                    let (mut vc, mut vb) = (0.0, 0.0);
                    if win > 0.0 {
                        let (cc, cb) = self.child_value(id, pos, b, belief, &opp, me);
                        let bid = game.bids()[b];
                        vc = win * (gain - bid + cc);
                        vb = win * (gain - bid + cb);
                    }
                    for (k, &w) in opp.iter().enumerate() {
                        let from = if me < w { b + 1 } else { b };
                        vc += sc[k][from];
                        vb += sb[k][from];
                    }
                    val_cur[b] = vc;
                    val_best[b] = vb;
                }
                let mut current = 0.0;
                for b in 0..nb {
                    let p = table.prob(id, me, self.own, b);
                    if p > 0.0 {
                        current += p * val_cur[b];
                    }
                }
                let mut arg = match table.row(id, me, self.own) {
                    Row::Pure(k) => *k,
                    Row::Mixed { .. } => 0,
                };
                for b in 0..nb {
                    if val_best[b] > val_best[arg] {
                        arg = b;
                    }
                }
                self.plan[id] = Some(arg);
                (current, val_best[arg])
            }
        };
        self.memo[id] = Some(result);
        result
    }

    /// Value of the node after `winner` (at position `pos`) takes the item at price index
    /// `price`; zero when the auction ends there.
    fn child_value(&mut self, id: usize, pos: usize, price: usize, belief: &[Component], opp: &[usize], winner: usize) -> (f64, f64) {
        let Some(child) = self.game.node(id).child(pos, price, self.game.bids().len()) else {
            return (0.0, 0.0);
        };
        if let Some(v) = self.memo[child] {
            return v;
        }
        let mut next = belief.to_vec();
        update(self.game, self.table, &mut next, opp, Announcement { node: id, winner, price }, OffPathRule::RevertToPrior);
        self.visit(child, &next)
    }
}

/// Exact evaluation of one player type: expected utility under the table and under the best
/// reply, found by backward induction over the public histories. Ties keep the table's bid.
pub fn evaluate(game: &DiscreteGame, table: &StrategyTable, player: usize, own_type: usize) -> Evaluation {
    let n = game.nodes().len();
    let mut walker = Walker { game, table, player, own: own_type, memo: vec![None; n], plan: vec![None; n] };
    let belief = conditioned_prior(game, player, own_type);
    let (current, best) = walker.visit(0, &belief);
    let plan = walker.plan.iter().enumerate().filter_map(|(id, b)| b.map(|b| (id, b))).collect();
    Evaluation { player, own_type, current, best, plan }
}

/// Expected utility of a player type following the table, averaging exactly over the
/// opponents' types and every randomisation.
pub fn ex_interim_utility(game: &DiscreteGame, table: &StrategyTable, player: usize, own_type: usize) -> f64 {
    evaluate(game, table, player, own_type).current
}

/// Largest gain any player type can get by deviating from the table.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub gap: f64,
    /// Gain per player and type.
    pub per_type: Vec<Vec<f64>>,
    pub worst: (usize, usize),
}

pub fn epsilon_bne_gap(game: &DiscreteGame, table: &StrategyTable) -> GapReport {
    let evals = evaluate_all(game, table);
    let mut per_type: Vec<Vec<f64>> = (0..game.players()).map(|j| vec![0.0; game.types(j).len()]).collect();
    let mut gap = 0.0;
    let mut worst = (0, 0);
    for e in &evals {
        per_type[e.player][e.own_type] = e.gap();
        if e.gap() > gap {
            gap = e.gap();
            worst = (e.player, e.own_type);
        }
    }
    GapReport { gap, per_type, worst }
}

fn evaluate_all(game: &DiscreteGame, table: &StrategyTable) -> Vec<Evaluation> {
    let pairs: Vec<(usize, usize)> = (0..game.players()).flat_map(|j| (0..game.types(j).len()).map(move |t| (j, t))).collect();
    pairs.par_iter().map(|&(j, t)| evaluate(game, table, j, t)).collect()
}

/// Replaces a type's rows by its best-reply plan.
pub fn apply_plan(table: &mut StrategyTable, eval: &Evaluation) {
    for &(id, b) in &eval.plan {
        table.set_row(id, eval.player, eval.own_type, Row::Pure(b));
    }
}

/// Outcome of iterated best replies.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub table: StrategyTable,
    pub converged: bool,
    pub sweeps: usize,
    /// Largest gain found in the last sweep.
    pub gap: f64,
}

/// Round-robin best replies: each sweep visits the players in order and replaces every
/// type whose gain exceeds `tol`. Converged when a whole sweep changes nothing, which
/// makes the returned table a `tol`-equilibrium of the discretised game.
pub fn best_response_dynamics(game: &DiscreteGame, start: StrategyTable, tol: f64, max_sweeps: usize) -> Dynamics {
    let mut table = start;
    let mut gap = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        let mut changed = false;
        gap = 0.0;
        for j in 0..game.players() {
            let evals: Vec<Evaluation> = (0..game.types(j).len()).into_par_iter().map(|t| evaluate(game, &table, j, t)).collect();
            for e in &evals {
                gap = f64::max(gap, e.gap());
                if e.gap() > tol {
                    apply_plan(&mut table, e);
                    changed = true;
                }
            }
        }
        if !changed {
            return Dynamics { table, converged: true, sweeps: sweep, gap };
        }
    }
    Dynamics { table, converged: false, sweeps: max_sweeps, gap }
}

use std::collections::HashMap;

use crate::combinat::{cospan_cut, validate_cut, CutError};
use crate::engine::{CutPolicy, InfoPolicy, Market, RoundRecord, Scenario};
use crate::model::{Marginal, ScalarDist, TypeDistribution};

use super::SolverError;

/// Grid resolution for discretising a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Points per continuous type marginal (discrete marginals keep their own points).
    pub types: usize,
    /// Uniform bid points on `[0, highest value]`.
    pub bids: usize,
    /// Add the landmark bids `v/2` and `(1 - 1/e) v` for every grid type `v`.
    pub landmarks: bool,
    /// Maximum number of decision histories.
    pub history_cap: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { types: 101, bids: 101, landmarks: true, history_cap: 1_000_000 }
    }
}

/// One term of a prior or posterior written as a mixture of product measures:
/// `weight * prod_j factors[j][t_j]`, each factor summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub factors: Vec<Vec<f64>>,
}

/// A public decision point: the announcements so far and the round about to be played.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub round: usize,
    /// Item on sale (matching) or `None` (matroid slot).
    pub item: Option<usize>,
    pub participants: Vec<usize>,
    /// `(winner, price index)` for every earlier round.
    pub history: Vec<(usize, usize)>,
    pub parent: Option<usize>,
    /// Child node per outcome `(position of winner in participants) * bids + price`;
    /// `None` where the auction ends after that outcome.
    pub children: Vec<Option<usize>>,
    pub key: String,
}

impl Node {
    pub fn child(&self, winner_pos: usize, price: usize, bids: usize) -> Option<usize> {
        self.children.get(winner_pos * bids + price).copied().flatten()
    }
}

/// Finite version of a scenario: type grids with prior masses, one bid grid used in every
/// round, and the tree of public histories under winner-and-price announcements.
#[derive(Debug, Clone)]
pub struct DiscreteGame {
    scenario: Scenario,
    types: Vec<Vec<f64>>,
    interest: Vec<Vec<f64>>,
    prior: Vec<Component>,
    bids: Vec<f64>,
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
}

/// Grid points and cell masses of a scalar marginal: equally spaced points on the
/// support, each carrying the prior mass of the cell between neighbouring midpoints.
pub fn type_grid(dist: &ScalarDist, points: usize) -> (Vec<f64>, Vec<f64>) {
    match dist {
        ScalarDist::Discrete(t) => (t.points().to_vec(), t.probs().to_vec()),
        ScalarDist::Continuous(_) => {
            let (lo, hi) = dist.support();
            let n = points.max(2);
            let xs: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
            let mut edges = vec![lo];
            edges.extend(xs.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            edges.push(hi);
            let masses: Vec<f64> = edges.windows(2).map(|e| dist.cdf(e[1]) - dist.cdf(e[0])).collect();
            let total: f64 = masses.iter().sum();
            (xs, masses.iter().map(|m| m / total).collect())
        }
    }
}

fn dedup_sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    xs
}

impl DiscreteGame {
    pub fn from_scenario(scenario: &Scenario, spec: GridSpec) -> Result<Self, SolverError> {
        if scenario.info != InfoPolicy::WinnerPrice {
            return Err(SolverError::Unsupported("only winner-and-price announcements are supported".into()));
        }
        if let Market::Matching { groups, .. } = &scenario.market {
            if groups.iter().any(|g| g.len() != 1) {
                return Err(SolverError::Unsupported("simultaneous item groups are not supported".into()));
            }
        }
        let n = scenario.players();
        let (types, interest, prior) = match &scenario.dist {
            TypeDistribution::Independent(ms) => {
                let mut types = Vec::with_capacity(n);
                let mut interest = Vec::with_capacity(n);
                let mut factors = Vec::with_capacity(n);
                for m in ms {
                    let Marginal::Scalar { dist, interest: pat } = m else {
                        return Err(SolverError::Unsupported("per-item value marginals are not supported".into()));
                    };
                    let (xs, ps) = type_grid(dist, spec.types);
                    types.push(xs);
                    interest.push(pat.clone());
                    factors.push(ps);
                }
                (types, interest, vec![Component { weight: 1.0, factors }])
            }
            TypeDistribution::Joint(t) => {
                let types: Vec<Vec<f64>> =
                    (0..n).map(|i| dedup_sorted(t.outcomes().iter().map(|o| o[i]).collect())).collect();
                let mut prior = Vec::new();
                for (o, &p) in t.outcomes().iter().zip(t.probs()) {
                    if p <= 0.0 {
                        continue;
                    }
                    let factors = (0..n)
                        .map(|i| {
                            let mut f = vec![0.0; types[i].len()];
                            let k = types[i].iter().position(|&x| (x - o[i]).abs() <= 1e-12).expect("value is on the grid");
                            f[k] = 1.0;
                            f
                        })
                        .collect();
                    prior.push(Component { weight: p, factors });
                }
                (types, t.interest().to_vec(), prior)
            }
        };

        let top_interest = interest.iter().flatten().copied().fold(0.0, f64::max).max(1.0);
        let vmax = types.iter().flatten().copied().fold(0.0, f64::max) * top_interest;
        let mut bids: Vec<f64> = (0..spec.bids.max(2)).map(|k| vmax * k as f64 / (spec.bids.max(2) - 1) as f64).collect();
        if spec.landmarks {
            let shade = 1.0 - (-1.0f64).exp();
            for &v in types.iter().flatten() {
                bids.push(0.5 * v);
                bids.push(shade * v);
            }
        }
        let bids = dedup_sorted(bids);

        let mut game = Self { scenario: scenario.clone(), types, interest, prior, bids, nodes: Vec::new(), index: HashMap::new() };
        game.build_tree(spec.history_cap)?;
        Ok(game)
    }

    /// Round `r` after the given winners: the item and participant set, or `None` when
    /// the auction is over.
    fn next_round(&self, r: usize, winners: &[usize]) -> Result<Option<(Option<usize>, Vec<usize>)>, SolverError> {
        match &self.scenario.market {
            Market::Matching { groups, .. } => {
                let Some(g) = groups.get(r) else { return Ok(None) };
                let item = g[0];
                let parts: Vec<usize> =
                    (0..self.players()).filter(|&i| self.scenario.dist.eligible(i, item)).collect();
                if parts.is_empty() {
                    return Err(SolverError::Unsupported(format!("item {item} has no eligible bidder")));
                }
                Ok(Some((Some(item), parts)))
            }
            Market::MatroidCut { matroid, cuts } => {
                let explicit = match cuts {
                    CutPolicy::Explicit(seq) => seq.get(r),
                    CutPolicy::Cospan => None,
                };
                let cut = match explicit {
                    Some(c) => validate_cut(matroid.as_ref(), winners, c).map(|()| c.clone()),
                    None => cospan_cut(matroid.as_ref(), winners),
                };
                match cut {
                    Ok(c) => Ok(Some((None, c))),
                    Err(CutError::Spanning) => Ok(None),
                    Err(e) => Err(SolverError::Unsupported(e.to_string())),
                }
            }
        }
    }

    fn build_tree(&mut self, cap: usize) -> Result<(), SolverError> {
        let (item, participants) = self.next_round(0, &[])?.ok_or(SolverError::Unsupported("the auction has no rounds".into()))?;
        self.push_node(Node { round: 0, item, participants, history: Vec::new(), parent: None, children: Vec::new(), key: String::new() });
        let b = self.bids.len();
        let mut k = 0;
        while k < self.nodes.len() {
            let node = self.nodes[k].clone();
            let mut children = Vec::with_capacity(node.participants.len() * b);
            for &w in &node.participants {
                let mut winners: Vec<usize> = node.history.iter().map(|&(w, _)| w).collect();
                winners.push(w);
                let next = self.next_round(node.round + 1, &winners)?;
                for p in 0..b {
                    match &next {
                        None => children.push(None),
                        Some((item, parts)) => {
                            if self.nodes.len() >= cap {
                                return Err(SolverError::TooLarge { cap });
                            }
                            let mut history = node.history.clone();
                            history.push((w, p));
                            let key = self.key_of(&history);
                            let id = self.push_node(Node {
                                round: node.round + 1,
                                item: *item,
                                participants: parts.clone(),
                                history,
                                parent: Some(k),
                                children: Vec::new(),
                                key,
                            });
                            children.push(Some(id));
                        }
                    }
                }
            }
            self.nodes[k].children = children;
            k += 1;
        }
        Ok(())
    }

    fn push_node(&mut self, node: Node) -> usize {
        let id = self.nodes.len();
        self.index.insert(node.key.clone(), id);
        self.nodes.push(node);
        id
    }

    /// Public history key in the same format as the engine's announcement history.
    pub fn key_of(&self, history: &[(usize, usize)]) -> String {
        history.iter().map(|&(w, p)| format!("{w}:{}", self.bids[p])).collect::<Vec<_>>().join("|")
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn players(&self) -> usize {
        self.types.len()
    }

    pub fn types(&self, player: usize) -> &[f64] {
        &self.types[player]
    }

    pub fn prior(&self) -> &[Component] {
        &self.prior
    }

    /// Prior marginal of one player over its type grid.
    pub fn prior_marginal(&self, player: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.types[player].len()];
        for c in &self.prior {
            for (t, f) in c.factors[player].iter().enumerate() {
                m[t] += c.weight * f;
            }
        }
        m
    }

    pub fn bids(&self) -> &[f64] {
        &self.bids
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn node_by_key(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Node reached by a sequence of `(winner, price index)` announcements.
    pub fn node_by_history(&self, history: &[(usize, usize)]) -> Option<usize> {
        let mut id = 0;
        for &(w, p) in history {
            let node = &self.nodes[id];
            let pos = node.participants.iter().position(|&x| x == w)?;
            id = node.child(pos, p, self.bids.len())?;
        }
        Some(id)
    }

    /// Value to `player` of type index `t` for what node `id` sells.
    pub fn item_value(&self, player: usize, t: usize, id: usize) -> f64 {
        let v = self.types[player][t];
        match self.nodes[id].item {
            Some(j) => v * self.interest[player][j],
            None => v,
        }
    }

    /// Valuation row of a type, as the engine sees it.
    pub fn value_row(&self, player: usize, t: usize) -> Vec<f64> {
        let v = self.types[player][t];
        self.interest[player].iter().map(|w| v * w).collect()
    }

    /// Value held by `player` after the announcements leading to node `id`.
    pub fn held_value(&self, player: usize, t: usize, id: usize) -> f64 {
        let mut held = 0.0f64;
        let mut cur = id;
        while let Some(parent) = self.nodes[cur].parent {
            let (w, _) = *self.nodes[cur].history.last().expect("child nodes have history");
            if w == player {
                held = held.max(self.item_value(player, t, parent));
            }
            cur = parent;
        }
        held
    }

    /// Engine round records for the history of node `id` (bids are not public and are
    /// filled with zeros).
    pub fn records(&self, id: usize) -> Vec<RoundRecord> {
        let mut path = Vec::new();
        let mut cur = id;
        while let Some(parent) = self.nodes[cur].parent {
            path.push((parent, *self.nodes[cur].history.last().expect("child nodes have history")));
            cur = parent;
        }
        path.reverse();
        path.into_iter()
            .map(|(pid, (w, p))| {
                let n = &self.nodes[pid];
                RoundRecord {
                    index: n.round,
                    items: n.item.into_iter().collect(),
                    participants: n.participants.clone(),
                    bids: vec![vec![0.0]; n.participants.len()],
                    winners: vec![Some(w)],
                    prices: vec![self.bids[p]],
                }
            })
            .collect()
    }

    /// Index of the grid bid nearest to `x` (the lower one on ties).
    pub fn nearest_bid(&self, x: f64) -> usize {
        nearest(&self.bids, x)
    }

    /// Index of the grid type of `player` nearest to `v`.
    pub fn nearest_type(&self, player: usize, v: f64) -> usize {
        nearest(&self.types[player], v)
    }
}

pub(crate) fn nearest(grid: &[f64], x: f64) -> usize {
    let k = grid.partition_point(|&g| g < x);
    if k == 0 {
        0
    } else if k == grid.len() {
        grid.len() - 1
    } else if x - grid[k - 1] <= grid[k] - x {
        k - 1
    } else {
        k
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::combinat::{AnyMatroid, GraphicMatroid};
    use crate::engine::TieRule;

    pub(crate) fn three_bidder() -> Scenario {
        let dist = TypeDistribution::uniform_scalars(0.0, 1.0, vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let market = Market::Matching { items: 2, groups: vec![vec![0], vec![1]], single_value: true };
        Scenario::new("m", market, dist, InfoPolicy::WinnerPrice, TieRule::LowestIndex).unwrap()
    }

    #[test]
    fn grid_masses() {
        let (xs, ps) = type_grid(&ScalarDist::uniform(0.0, 1.0).unwrap(), 5);
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!((ps[0] - 0.125).abs() < 1e-15 && (ps[2] - 0.25).abs() < 1e-15);
        assert!((ps.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tree_of_two_round_game() {
        let spec = GridSpec { types: 5, bids: 5, landmarks: false, history_cap: 1000 };
        let g = DiscreteGame::from_scenario(&three_bidder(), spec).unwrap();
        assert_eq!(g.bids(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        // root plus 2 winners x 5 prices
        assert_eq!(g.nodes().len(), 11);
        assert_eq!(g.node(0).participants, vec![0, 1]);
        let id = g.node_by_history(&[(1, 2)]).unwrap();
        assert_eq!(g.node(id).participants, vec![0, 1, 2]);
        assert_eq!(g.node(id).key, "1:0.5");
        assert_eq!(g.node_by_key("1:0.5"), Some(id));
        assert!(g.node(id).children.iter().all(Option::is_none));
        assert_eq!(g.held_value(1, 4, id), 1.0);
        assert_eq!(g.held_value(0, 4, id), 0.0);
        assert_eq!(g.records(id)[0].prices, vec![0.5]);
    }

    #[test]
    fn size_cap_enforced() {
        let spec = GridSpec { types: 5, bids: 5, landmarks: false, history_cap: 5 };
        assert!(matches!(DiscreteGame::from_scenario(&three_bidder(), spec), Err(SolverError::TooLarge { .. })));
    }

    #[test]
    fn landmarks_and_matroid_tree() {
        let dist = TypeDistribution::uniform_scalars(0.0, 1.0, vec![vec![1.0]; 3]).unwrap();
        let market = Market::MatroidCut {
            matroid: Arc::new(AnyMatroid::Graphic(GraphicMatroid::triangle())),
            cuts: CutPolicy::Explicit(vec![vec![0, 1]]),
        };
        let sc = Scenario::new("t", market, dist, InfoPolicy::WinnerPrice, TieRule::LowestIndex).unwrap();
        let g = DiscreteGame::from_scenario(&sc, GridSpec { types: 3, bids: 3, landmarks: true, history_cap: 100 }).unwrap();
        assert!(g.bids().iter().any(|&b| (b - 0.25).abs() < 1e-15));
        assert!(g.bids().iter().any(|&b| (b - (1.0 - (-1.0f64).exp())).abs() < 1e-15));
        let id = g.node_by_history(&[(0, 1)]).unwrap();
        assert_eq!(g.node(id).participants, vec![1, 2]);
        assert_eq!(g.nearest_bid(0.26), g.bids().iter().position(|&b| (b - 0.25).abs() < 1e-15).unwrap());
    }
}

#![allow(dead_code)]

use std::sync::Arc;

use seqauction::combinat::{AnyMatroid, GraphicMatroid, Matroid, TransversalMatroid, UniformMatroid};
use seqauction::engine::{CutPolicy, InfoPolicy, Market, Scenario, TieRule};
use seqauction::model::{RngStream, TypeDistribution};

/// A random graphic, transversal or uniform matroid on `n` elements, picked by `kind % 3`.
pub fn random_matroid(rng: &mut RngStream, n: usize, kind: usize) -> AnyMatroid {
    match kind % 3 {
        0 => {
            let vertices = 2 + rng.index(n.max(2));
            let edges = (0..n).map(|_| (rng.index(vertices), rng.index(vertices))).collect();
            AnyMatroid::Graphic(GraphicMatroid::with_vertices(vertices, edges).unwrap())
        }
        1 => {
            let right = 1 + rng.index(n);
            let mut edges = Vec::new();
            for e in 0..n {
                for r in 0..right {
                    if rng.uniform() < 0.4 {
                        edges.push((e, r));
                    }
                }
            }
            AnyMatroid::Transversal(TransversalMatroid::new(n, right, &edges).unwrap())
        }
        _ => AnyMatroid::Uniform(UniformMatroid::new(n, rng.index(n + 1)).unwrap()),
    }
}

pub fn subset(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask & (1 << b) != 0).collect()
}

/// Every basis, found by enumerating all subsets.
pub fn all_bases<M: Matroid + ?Sized>(m: &M) -> Vec<Vec<usize>> {
    let n = m.ground_size();
    let indep: Vec<u32> = (0..1u32 << n).filter(|&mask| m.is_independent(&subset(mask))).collect();
    let top = indep.iter().map(|mask| mask.count_ones()).max().unwrap_or(0);
    indep.into_iter().filter(|mask| mask.count_ones() == top).map(subset).collect()
}

/// Largest total weight over all bases.
pub fn exhaustive_max_weight<M: Matroid + ?Sized>(m: &M, weights: &[f64]) -> f64 {
    all_bases(m).iter().map(|b| b.iter().map(|&e| weights[e]).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max)
}

/// Best welfare over all injective maps from the smaller side to the larger.
pub fn brute_force_assignment(values: &[Vec<f64>]) -> f64 {
    let rows = values.len();
    let cols = values.first().map_or(0, Vec::len);
    fn go(values: &[Vec<f64>], row: usize, used: &mut Vec<bool>, transposed: bool) -> f64 {
        let rows = if transposed { values[0].len() } else { values.len() };
        if row == rows {
            return 0.0;
        }
        let mut best = go(values, row + 1, used, transposed);
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                let v = if transposed { values[c][row] } else { values[row][c] };
                best = best.max(v + go(values, row + 1, used, transposed));
                used[c] = false;
            }
        }
        best
    }
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    if rows <= cols {
        go(values, 0, &mut vec![false; cols], false)
    } else {
        go(values, 0, &mut vec![false; rows], true)
    }
}

pub fn matroid_scenario(m: AnyMatroid, cuts: CutPolicy, info: InfoPolicy) -> Scenario {
    let n = m.ground_size();
    let dist = TypeDistribution::uniform_scalars(0.0, 1.0, vec![vec![1.0]; n]).unwrap();
    Scenario::new("random-matroid", Market::MatroidCut { matroid: Arc::new(m), cuts }, dist, info, TieRule::LowestIndex).unwrap()
}

/// Three bidders, two items sold one after the other; the third bidder wants only the
/// second item.
pub fn three_bidder() -> Scenario {
    let dist = TypeDistribution::uniform_scalars(0.0, 1.0, vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
    let market = Market::Matching { items: 2, groups: vec![vec![0], vec![1]], single_value: true };
    Scenario::new("three-bidder", market, dist, InfoPolicy::WinnerPrice, TieRule::LowestIndex).unwrap()
}

pub fn triangle() -> Scenario {
    matroid_scenario(AnyMatroid::Graphic(GraphicMatroid::triangle()), CutPolicy::Explicit(vec![vec![0, 1]]), InfoPolicy::WinnerPrice)
}

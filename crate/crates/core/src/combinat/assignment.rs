//! Maximum-weight bipartite assignment (players to items) with deterministic tie-breaking.

/// A matching of players to items. Pairs with zero value are never reported.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    item_of: Vec<Option<usize>>,
    welfare: f64,
}

impl Assignment {
    pub fn item_of(&self, player: usize) -> Option<usize> {
        self.item_of[player]
    }

    pub fn player_of(&self, item: usize) -> Option<usize> {
        self.item_of.iter().position(|&j| j == Some(item))
    }

    pub fn welfare(&self) -> f64 {
        self.welfare
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.item_of.iter().enumerate().filter_map(|(i, j)| j.map(|j| (i, j))).collect()
    }
}

/// O(N^3) Hungarian algorithm (shortest augmenting paths with potentials) on a square
/// cost matrix; returns the minimum total cost.
fn hungarian_min(cost: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| cost[(p[j] - 1) * n + (j - 1)]).sum()
}

/// Optimal welfare of the sub-problem restricted to the given rows and columns.
fn best_value(values: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> f64 {
    let n = rows.len().max(cols.len());
    if rows.is_empty() || cols.is_empty() {
        return 0.0;
    }
    let mut cost = vec![0.0; n * n];
    for (a, &r) in rows.iter().enumerate() {
        for (b, &c) in cols.iter().enumerate() {
            cost[a * n + b] = -values[r][c];
        }
    }
    -hungarian_min(&cost, n)
}

/// Maximum-weight matching of players (rows) to items (columns).
///
/// Among optimal matchings the lexicographically smallest is returned: player 0 takes
/// the lowest-index item compatible with optimality, then player 1, and so on, with
/// "unmatched" ranked after every item. Zero-value pairs are dropped.
pub fn optimal_assignment(values: &[Vec<f64>]) -> Assignment {
    let players = values.len();
    let items = values.first().map_or(0, Vec::len);
    assert!(values.iter().all(|r| r.len() == items), "ragged value matrix");
    assert!(values.iter().flatten().all(|v| v.is_finite() && *v >= 0.0), "values must be finite and non-negative");

    let mut rows: Vec<usize> = (0..players).collect();
    let mut cols: Vec<usize> = (0..items).collect();
    let mut target = best_value(values, &rows, &cols);
    let optimum = target;
    let mut item_of = vec![None; players];

    for i in 0..players {
        rows.retain(|&r| r != i);
        let tol = 1e-9 * target.abs().max(1.0);
        let mut chosen = None;
        for (pos, &j) in cols.iter().enumerate() {
            let v = values[i][j];
            if v <= 0.0 {
                continue;
            }
            let mut rest = cols.clone();
            rest.remove(pos);
            let total = v + best_value(values, &rows, &rest);
            if (total - target).abs() <= tol {
                chosen = Some((pos, j, v));
                break;
            }
        }
        if let Some((pos, j, v)) = chosen {
            item_of[i] = Some(j);
            cols.remove(pos);
            target -= v;
        }
    }
    Assignment { item_of, welfare: optimum }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(values: &[Vec<f64>]) -> f64 {
        fn go(values: &[Vec<f64>], i: usize, used: &mut Vec<bool>) -> f64 {
            if i == values.len() {
                return 0.0;
            }
            let mut best = go(values, i + 1, used);
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(values[i][j] + go(values, i + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        let m = values.first().map_or(0, Vec::len);
        go(values, 0, &mut vec![false; m])
    }

    #[test]
    fn diagonal_two_by_two() {
        let a = optimal_assignment(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert_eq!(a.pairs(), vec![(0, 0), (1, 1)]);
        assert_eq!(a.welfare(), 4.0);
        assert_eq!(brute(&[vec![2.0, 1.0], vec![1.0, 2.0]]), 4.0);
    }

    #[test]
    fn single_positive_row() {
        let a = optimal_assignment(&[vec![0.0, 0.0], vec![0.0, 0.7], vec![0.0, 0.0]]);
        assert_eq!(a.pairs(), vec![(1, 1)]);
    }

    #[test]
    fn three_bidder_shape() {
        let v = vec![vec![0.9, 0.9], vec![0.5, 0.5], vec![0.0, 0.7]];
        let a = optimal_assignment(&v);
        assert!((a.welfare() - 1.6).abs() < 1e-12);
        assert!((brute(&v) - 1.6).abs() < 1e-12);
        assert_eq!(a.item_of(0), Some(0));
        assert_eq!(a.item_of(2), Some(1));
        assert_eq!(a.item_of(1), None);
    }

    #[test]
    fn rectangular_shapes() {
        let wide = vec![vec![0.1, 0.5, 0.3]];
        assert_eq!(optimal_assignment(&wide).pairs(), vec![(0, 1)]);
        let tall = vec![vec![0.2], vec![0.6], vec![0.6]];
        let a = optimal_assignment(&tall);
        assert_eq!(a.pairs(), vec![(1, 0)]);
        assert_eq!(a.player_of(0), Some(1));
    }

    #[test]
    fn ties_prefer_low_items_for_low_players() {
        let v = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(optimal_assignment(&v).pairs(), vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(optimal_assignment(&[]).welfare(), 0.0);
        assert_eq!(optimal_assignment(&[vec![], vec![]]).pairs(), vec![]);
    }
}

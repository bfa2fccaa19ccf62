use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParticipationError {
    #[error("basis has {basis} elements but {rounds} rounds were held")]
    SizeMismatch { basis: usize, rounds: usize },
    /// Impossible for a completed cut auction, which always admits a perfect matching.
    #[error("no perfect matching: basis element {0} cannot be placed")]
    NoPerfectMatching(usize),
}

/// Bipartite graph between the elements of a basis and the rounds of a completed cut
/// auction; an edge joins an element to every round it took part in.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationGraph {
    basis: Vec<usize>,
    adj: Vec<Vec<usize>>,
    rounds: usize,
}

impl ParticipationGraph {
    pub fn new(rounds: &[Vec<usize>], basis: &[usize]) -> Self {
        let adj = basis
            .iter()
            .map(|e| (0..rounds.len()).filter(|&r| rounds[r].contains(e)).collect())
            .collect();
        Self { basis: basis.to_vec(), adj, rounds: rounds.len() }
    }

    pub fn rounds_of(&self, k: usize) -> &[usize] {
        &self.adj[k]
    }

    /// Perfect matching by augmenting paths, scanning elements and rounds in order.
    pub fn perfect_matching(&self) -> Result<Vec<(usize, usize)>, ParticipationError> {
        if self.basis.len() != self.rounds {
            return Err(ParticipationError::SizeMismatch { basis: self.basis.len(), rounds: self.rounds });
        }
        let mut owner: Vec<Option<usize>> = vec![None; self.rounds];
        for k in 0..self.basis.len() {
            let mut seen = vec![false; self.rounds];
            if !self.augment(k, &mut seen, &mut owner) {
                return Err(ParticipationError::NoPerfectMatching(self.basis[k]));
            }
        }
        let mut pairs: Vec<(usize, usize)> = owner
            .iter()
            .enumerate()
            .map(|(r, k)| (self.basis[k.expect("perfect matching covers every round")], r))
            .collect();
        pairs.sort_unstable();
        Ok(pairs)
    }

    fn augment(&self, k: usize, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &r in &self.adj[k] {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            if owner[r].map_or(true, |w| self.augment(w, seen, owner)) {
                owner[r] = Some(k);
                return true;
            }
        }
        false
    }
}

/// Matches each basis element to a distinct round it participated in, returning
/// `(element, round)` pairs sorted by element.
pub fn participation_matching(rounds: &[Vec<usize>], basis: &[usize]) -> Result<Vec<(usize, usize)>, ParticipationError> {
    ParticipationGraph::new(rounds, basis).perfect_matching()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_trace() {
        // round 0 = {a, b}, a wins; round 1 = {b, c}
        let rounds = vec![vec![0, 1], vec![1, 2]];
        assert_eq!(participation_matching(&rounds, &[0, 2]).unwrap(), vec![(0, 0), (2, 1)]);
    }

    #[test]
    fn winners_map_to_their_rounds() {
        let rounds = vec![vec![0, 1, 2], vec![1, 2], vec![2, 3]];
        let winners = [0, 1, 3];
        assert_eq!(participation_matching(&rounds, &winners).unwrap(), vec![(0, 0), (1, 1), (3, 2)]);
    }

    #[test]
    fn failure_is_reported() {
        let rounds = vec![vec![0], vec![0]];
        assert_eq!(participation_matching(&rounds, &[0, 1]), Err(ParticipationError::NoPerfectMatching(1)));
        assert!(matches!(participation_matching(&rounds, &[0]), Err(ParticipationError::SizeMismatch { .. })));
    }
}

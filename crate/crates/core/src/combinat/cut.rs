use thiserror::Error;

use super::matroid::{full_rank, rank, Matroid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CutError {
    /// Winners already span the matroid: the cut auction is complete.
    #[error("winners span the matroid; no cut remains")]
    Spanning,
    #[error("winners {0:?} are not independent")]
    DependentWinners(Vec<usize>),
    #[error("cut element {0} is a previous winner")]
    HitsWinner(usize),
    #[error("cut element {0} is spanned by the winners and could never be served")]
    Spanned(usize),
    #[error("cut {0:?} misses a basis of the remaining matroid")]
    NotACut(Vec<usize>),
    #[error("cut element {0} is outside the ground set")]
    OutOfRange(usize),
}

/// Elements that can still be added to `winners` without breaking independence. This
/// set meets every basis of the matroid contracted by the winners, so it is a valid
/// next cut.
pub fn cospan_cut<M: Matroid + ?Sized>(m: &M, winners: &[usize]) -> Result<Vec<usize>, CutError> {
    if !m.is_independent(winners) {
        return Err(CutError::DependentWinners(winners.to_vec()));
    }
    let mut probe = winners.to_vec();
    let mut cut = Vec::new();
    for e in 0..m.ground_size() {
        if winners.contains(&e) {
            continue;
        }
        probe.push(e);
        if m.is_independent(&probe) {
            cut.push(e);
        }
        probe.pop();
    }
    if cut.is_empty() {
        Err(CutError::Spanning)
    } else {
        Ok(cut)
    }
}

/// Checks a caller-supplied cut: disjoint from the winners, every element still
/// servable, and every basis of the contracted matroid touched.
pub fn validate_cut<M: Matroid + ?Sized>(m: &M, winners: &[usize], cut: &[usize]) -> Result<(), CutError> {
    let open = cospan_cut(m, winners)?;
    for &e in cut {
        if e >= m.ground_size() {
            return Err(CutError::OutOfRange(e));
        }
        if winners.contains(&e) {
            return Err(CutError::HitsWinner(e));
        }
        if !open.contains(&e) {
            return Err(CutError::Spanned(e));
        }
    }
    // A basis avoiding the cut exists iff winners plus the open elements outside the cut
    // still have full rank.
    let mut rest: Vec<usize> = winners.to_vec();
    rest.extend(open.iter().copied().filter(|e| !cut.contains(e)));
    if rank(m, &rest) == full_rank(m) {
        return Err(CutError::NotACut(cut.to_vec()));
    }
    Ok(())
}

//! Combinatorial oracles: matroids and their greedy bases, cuts for the cut auction,
//! optimal assignment for matching markets, and the participation-graph matching.

mod assignment;
mod cut;
mod matroid;
mod participation;

pub use assignment::{optimal_assignment, Assignment};
pub use cut::{cospan_cut, validate_cut, CutError};
pub use matroid::{
    check_axioms, full_rank, greedy_max_basis, rank, AnyMatroid, ExplicitMatroid, GraphicMatroid, Matroid, MatroidError, TransversalMatroid,
    UniformMatroid,
};
pub use participation::{participation_matching, ParticipationError, ParticipationGraph};

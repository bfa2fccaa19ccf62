//! Value types shared by every other module: valuation profiles, priors, allocations and
//! the seeded random stream.

mod distribution;
mod profile;
mod rng;
mod welfare;

pub use distribution::{DiscreteTable, DistError, JointTable, Marginal, PiecewisePolynomial, ScalarDist, TypeDistribution};
pub use profile::{ProfileError, ValuationProfile};
pub use rng::RngStream;
pub use welfare::{accounting_residual, social_welfare, utility, Allocation};

/// Draws a valuation profile; independent players use independent sub-streams of `rng`.
pub fn sample_profile(dist: &TypeDistribution, rng: &RngStream) -> ValuationProfile {
    dist.sample(rng)
}

//! Simulation and verification toolkit for sequential first-price auctions with
//! Bayesian bidders: matching-market item auctions, matroid cut auctions, a solved
//! two-item equilibrium, deviation harnesses and price-of-anarchy estimation.

pub mod analytic;
pub mod combinat;
pub mod engine;
pub mod metrics;
pub mod model;
pub mod solver;
pub mod stats;

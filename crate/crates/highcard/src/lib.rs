//! Exact analysis and seeded Monte Carlo verification of higher-number
//! guessing games.

pub mod alice;
pub mod analysis;
pub mod bob;
pub mod engine;
pub mod numerics;

pub use engine::{
    CoverageFlags, CoverageFunction, CoverageKind, EngineError, NumberPair, PairSampler,
    Probability, RngStream, RoundOutcome, Trilean,
};

//! Shared domain types and the single-round game engine.
//!
//! A guesser strategy is a coverage function `F: R -> [0, 1]`: on seeing the
//! number `x`, accept it as the larger one with probability `F(x)`. A writer
//! strategy is anything that can produce a tie-free `(shown, hidden)` pair.
//! [`play_round`] wires one of each together with an explicit, reproducible
//! randomness stream.

use crate::alice::{LatticeRandomSet, PoissonIntensity, ThresholdDistribution};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("probability out of range: {0}")]
    ProbabilityRange(f64),
    #[error("tied pair: shown == hidden == {0}")]
    Tie(f64),
    #[error("number pair must be finite, got ({0}, {1})")]
    NonFinitePair(f64, f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A probability value, guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const HALF: Probability = Probability(0.5);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self, EngineError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(EngineError::ProbabilityRange(value))
        }
    }

    /// Clamp a value that is within floating-point noise of `[0, 1]`.
    /// Panics when the value is materially outside the interval; results of
    /// probability algebra must never be, so a violation is a logic error.
    pub fn saturating(value: f64) -> Self {
        assert!(
            value.is_finite() && value > -1e-9 && value < 1.0 + 1e-9,
            "value {value} is not a probability up to rounding"
        );
        Self(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One dealt pair: the number the guesser sees and the one kept hidden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumberPair {
    pub shown: f64,
    pub hidden: f64,
}

impl NumberPair {
    pub fn new(shown: f64, hidden: f64) -> Result<Self, EngineError> {
        if !shown.is_finite() || !hidden.is_finite() {
            return Err(EngineError::NonFinitePair(shown, hidden));
        }
        if shown == hidden {
            return Err(EngineError::Tie(shown));
        }
        Ok(Self { shown, hidden })
    }
}

/// Result of one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundOutcome {
    pub shown: f64,
    pub hidden: f64,
    pub accepted: bool,
    pub correct: bool,
}

/// A named, reproducible randomness stream.
///
/// Identical `(seed, stream_id)` pairs reproduce identical draw sequences;
/// distinct stream ids give statistically independent streams, which is what
/// makes sharded Monte Carlo deterministic regardless of scheduling.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw in `[0, 1)`.
    pub fn u01(&mut self) -> f64 {
        rand::Rng::random(&mut self.rng)
    }

    /// Uniform draw in the open interval `(0, 1)`.
    pub fn u01_open(&mut self) -> f64 {
        loop {
            let u = self.u01();
            if u > 0.0 {
                return u;
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// Three-valued certainty for classification flags: grid evidence can refute
/// monotonicity of an arbitrary function but never certify it, so flags carry
/// an explicit `Unknown` alongside `Yes`/`No`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trilean {
    Yes,
    No,
    Unknown,
}

impl Trilean {
    pub fn and(self, other: Trilean) -> Trilean {
        use Trilean::*;
        match (self, other) {
            (No, _) | (_, No) => No,
            (Yes, Yes) => Yes,
            _ => Unknown,
        }
    }

    pub fn from_bool(b: bool) -> Trilean {
        if b {
            Trilean::Yes
        } else {
            Trilean::No
        }
    }
}

/// Structural classification flags of a coverage function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoverageFlags {
    pub nondecreasing: Trilean,
    pub strictly_increasing: Trilean,
    pub proper: Trilean,
}

/// A single knot of a piecewise-linear coverage function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Knot {
    pub x: f64,
    pub y: f64,
}

/// The supported coverage-function shapes.
///
/// Values outside `[0, 1]` are impossible by construction; evaluation is
/// cadlag (right-continuous with left limits) for every variant.
#[derive(Debug, Clone)]
pub enum CoverageKind {
    /// Accept with a fixed probability regardless of the shown number.
    Constant(f64),
    /// Deterministic threshold: accept iff `x >= t`.
    StepThreshold(f64),
    /// The scaled CDF of a random threshold.
    DistributionCdf(ThresholdDistribution),
    /// Linear interpolation between knots, clamped to the end values outside.
    PiecewiseLinear(Vec<Knot>),
    /// Pointwise complement `1 - F` of the inner function.
    DualOf(Box<CoverageFunction>),
    /// Convex combination `gamma * first + (1 - gamma) * second`.
    Mixture {
        gamma: f64,
        first: Box<CoverageFunction>,
        second: Box<CoverageFunction>,
    },
    /// Coverage of a unit-interval dilation of a Poisson point process.
    PoissonCoverage(PoissonIntensity),
    /// Per-integer-site acceptance table, clamped to the window endpoints.
    LatticeTable(LatticeRandomSet),
}

/// A guesser strategy: an accept-probability function with its flags.
#[derive(Debug, Clone)]
pub struct CoverageFunction {
    kind: CoverageKind,
    flags: CoverageFlags,
}

fn piecewise_eval(knots: &[Knot], x: f64) -> f64 {
    let first = knots.first().expect("knots are non-empty by construction");
    let last = knots.last().unwrap();
    if x <= first.x {
        return first.y;
    }
    if x >= last.x {
        return last.y;
    }
    let idx = knots.partition_point(|k| k.x <= x);
    let (a, b) = (&knots[idx - 1], &knots[idx]);
    let t = (x - a.x) / (b.x - a.x);
    (a.y + t * (b.y - a.y)).clamp(0.0, 1.0)
}

impl CoverageFunction {
    /// Wrap a kind, deriving exact classification flags where the family
    /// admits them and `Unknown` where only grid evidence could speak.
    pub fn new(kind: CoverageKind) -> Self {
        let flags = flags_for(&kind);
        Self { kind, flags }
    }

    /// Constructor for builders that know sharper flags than the generic
    /// derivation can prove (e.g. algebraic identities of special mixtures).
    pub(crate) fn with_flags(kind: CoverageKind, flags: CoverageFlags) -> Self {
        Self { kind, flags }
    }

    pub fn kind(&self) -> &CoverageKind {
        &self.kind
    }

    pub fn flags(&self) -> CoverageFlags {
        self.flags
    }

    /// If the function is constant, its value.
    pub fn constant_value(&self) -> Option<f64> {
        match &self.kind {
            CoverageKind::Constant(p) => Some(*p),
            CoverageKind::StepThreshold(_) | CoverageKind::DistributionCdf(_) => None,
            CoverageKind::PiecewiseLinear(knots) => {
                let y0 = knots[0].y;
                knots.iter().all(|k| k.y == y0).then_some(y0)
            }
            CoverageKind::DualOf(inner) => inner.constant_value().map(|p| 1.0 - p),
            CoverageKind::Mixture { gamma, first, second } => {
                match (first.constant_value(), second.constant_value()) {
                    (Some(p), Some(q)) => Some(gamma * p + (1.0 - gamma) * q),
                    (Some(p), None) if *gamma == 1.0 => Some(p),
                    (None, Some(q)) if *gamma == 0.0 => Some(q),
                    _ => None,
                }
            }
            CoverageKind::PoissonCoverage(intensity) => match intensity {
                PoissonIntensity::Homogeneous { lambda } => Some(1.0 - (-lambda).exp()),
                PoissonIntensity::ExponentialIntensity => None,
            },
            CoverageKind::LatticeTable(set) => {
                let v0 = set.values()[0];
                set.values().iter().all(|&v| v == v0).then_some(v0)
            }
        }
    }

    /// Evaluate the accept probability at `x`. Total on the reals; always in
    /// `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let v = match &self.kind {
            CoverageKind::Constant(p) => *p,
            CoverageKind::StepThreshold(t) => {
                if x >= *t {
                    1.0
                } else {
                    0.0
                }
            }
            CoverageKind::DistributionCdf(d) => d.coverage(x),
            CoverageKind::PiecewiseLinear(knots) => piecewise_eval(knots, x),
            CoverageKind::DualOf(inner) => 1.0 - inner.eval(x),
            CoverageKind::Mixture { gamma, first, second } => {
                gamma * first.eval(x) + (1.0 - gamma) * second.eval(x)
            }
            CoverageKind::PoissonCoverage(intensity) => intensity.coverage(x),
            CoverageKind::LatticeTable(set) => set.coverage_at_real(x),
        };
        v.clamp(0.0, 1.0)
    }
}

fn flags_for(kind: &CoverageKind) -> CoverageFlags {
    use Trilean::*;
    match kind {
        CoverageKind::Constant(_) => CoverageFlags {
            nondecreasing: Yes,
            strictly_increasing: No,
            proper: No,
        },
        CoverageKind::StepThreshold(_) => CoverageFlags {
            nondecreasing: Yes,
            strictly_increasing: No,
            proper: Yes,
        },
        CoverageKind::DistributionCdf(d) => CoverageFlags {
            nondecreasing: Yes,
            strictly_increasing: Trilean::from_bool(d.fully_supported() && d.atom_total() < 1.0),
            proper: Trilean::from_bool(d.atom_total() == 0.0),
        },
        CoverageKind::PiecewiseLinear(knots) => {
            let ys: Vec<f64> = knots.iter().map(|k| k.y).collect();
            let nondec = ys.windows(2).all(|w| w[0] <= w[1]);
            CoverageFlags {
                nondecreasing: Trilean::from_bool(nondec),
                // Clamping outside the knot range always leaves flat tails.
                strictly_increasing: No,
                proper: Trilean::from_bool(ys[0] == 0.0 && *ys.last().unwrap() == 1.0),
            }
        }
        CoverageKind::DualOf(inner) => {
            if inner.constant_value().is_some() {
                CoverageFlags { nondecreasing: Yes, strictly_increasing: No, proper: No }
            } else {
                let f = inner.flags();
                CoverageFlags {
                    // The complement of a non-constant nondecreasing function
                    // has an inversion; otherwise nothing is certain.
                    nondecreasing: if f.nondecreasing == Yes { No } else { Unknown },
                    strictly_increasing: if f.nondecreasing == Yes { No } else { Unknown },
                    proper: if f.proper == Yes { No } else { Unknown },
                }
            }
        }
        CoverageKind::Mixture { gamma, first, second } => {
            let g = *gamma;
            if g == 0.0 {
                return second.flags();
            }
            if g == 1.0 {
                return first.flags();
            }
            let (ff, sf) = (first.flags(), second.flags());
            // A mix of an increasing and a decreasing component can go either
            // way, so a `No` component downgrades to Unknown rather than No.
            let nondecreasing = match (ff.nondecreasing, sf.nondecreasing) {
                (Yes, Yes) => Yes,
                _ => Unknown,
            };
            // Nondecreasing plus one strictly increasing summand is strict;
            // two non-strict components can still mix to strict (disjoint
            // flats), so the negative case stays Unknown.
            let strictly_increasing = if nondecreasing == Yes
                && (ff.strictly_increasing == Yes || sf.strictly_increasing == Yes)
            {
                Yes
            } else {
                Unknown
            };
            // Tail limits of a strict convex mix vanish/saturate only when
            // both components' do, so properness is the exact conjunction.
            let proper = match (ff.proper, sf.proper) {
                (Yes, Yes) => Yes,
                (No, _) | (_, No) => No,
                _ => Unknown,
            };
            CoverageFlags { nondecreasing, strictly_increasing, proper }
        }
        CoverageKind::PoissonCoverage(intensity) => match intensity {
            PoissonIntensity::Homogeneous { .. } => CoverageFlags {
                nondecreasing: Yes,
                strictly_increasing: No,
                proper: No,
            },
            PoissonIntensity::ExponentialIntensity => CoverageFlags {
                nondecreasing: Yes,
                strictly_increasing: Yes,
                proper: Yes,
            },
        },
        CoverageKind::LatticeTable(set) => {
            let vs = set.values();
            let nondec = vs.windows(2).all(|w| w[0] <= w[1]);
            CoverageFlags {
                nondecreasing: Trilean::from_bool(nondec),
                // A step function over integer sites is flat on every cell.
                strictly_increasing: No,
                proper: Trilean::from_bool(vs[0] == 0.0 && *vs.last().unwrap() == 1.0),
            }
        }
    }
}

/// Anything that can deal one `(shown, hidden)` pair.
pub trait PairSampler {
    fn sample_pair(&self, rng: &mut RngStream) -> NumberPair;

    /// Whether `(shown, hidden)` and `(hidden, shown)` have the same joint
    /// distribution. Strategies that break this are admitted for the
    /// unconstrained-game demonstrations only and are skipped by the
    /// exchangeability test suite.
    fn exchangeable(&self) -> bool {
        true
    }

    fn describe(&self) -> String;
}

/// Make the accept/reject decision for shown number `x` under coverage `f`.
///
/// A pure step threshold decides deterministically (accept iff `x >= t`,
/// consuming no randomness); every other shape accepts with probability
/// `f(x)`.
pub fn decide(f: &CoverageFunction, x: f64, rng: &mut RngStream) -> bool {
    match f.kind() {
        CoverageKind::StepThreshold(t) => x >= *t,
        _ => rng.u01() < f.eval(x),
    }
}

/// Play one round: deal a pair from `bob`, decide via `alice`, and record
/// whether the guess was correct. A tied pair is an invalid writer strategy.
pub fn play_round<B: PairSampler + ?Sized>(
    bob: &B,
    alice: &CoverageFunction,
    rng: &mut RngStream,
) -> Result<RoundOutcome, EngineError> {
    let pair = bob.sample_pair(rng);
    if pair.shown == pair.hidden {
        return Err(EngineError::Tie(pair.shown));
    }
    let accepted = decide(alice, pair.shown, rng);
    let correct = (accepted && pair.shown > pair.hidden) || (!accepted && pair.shown < pair.hidden);
    Ok(RoundOutcome {
        shown: pair.shown,
        hidden: pair.hidden,
        accepted,
        correct,
    })
}

//! Exact evaluation of win probabilities, best responses, and the
//! brute-force finite-game oracle.
//!
//! Everything here is deterministic. Discrete strategies are evaluated by
//! exact summation (floating point, or arbitrary-precision rationals via the
//! `Exact*` twins); continuous strategies by adaptive quadrature split at the
//! analytic kinks of the integrands.

use crate::alice::ThresholdDistribution;
use crate::bob::{ContinuousBobStrategy, DiscreteBobStrategy};
use crate::engine::{CoverageFunction, CoverageKind, Probability};
use crate::numerics::{self, NumericsError};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Arbitrary-precision rational, the currency of every exact result.
pub type Rational = num_rational::BigRational;

/// `n / d` as a reduced rational.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).expect("rational within f64 range")
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("pair needs a < b, got ({0}, {1})")]
    InvalidPair(f64, f64),
    #[error("point {0} carries no shown-value mass")]
    UnsupportedPoint(f64),
    #[error("conditioning event X >= T has probability zero")]
    ConditioningOnNull,
    #[error("exhaustive enumeration is capped at m = {limit}, got m = {m}")]
    ExhaustionLimit { m: u32, limit: u32 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("internal cross-check failed: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Quadrature(#[from] NumericsError),
}

fn bad(msg: impl Into<String>) -> AnalysisError {
    AnalysisError::InvalidInput(msg.into())
}

// ---------------------------------------------------------------------------
// Pure-pair payoffs and mixture win probabilities
// ---------------------------------------------------------------------------

/// Payoff of a fixed decision set against the pure pair `a < b`: 1/2 when the
/// set does not separate the pair, 1 when only `b` is accepted, 0 on an
/// inversion (only `a` accepted).
pub fn payoff_pure(
    decision_set: impl Fn(f64) -> bool,
    a: f64,
    b: f64,
) -> Result<Rational, AnalysisError> {
    if !(a < b) {
        return Err(AnalysisError::InvalidPair(a, b));
    }
    let (in_a, in_b) = (decision_set(a), decision_set(b));
    Ok(match (in_a, in_b) {
        (false, true) => Rational::one(),
        (true, false) => Rational::zero(),
        _ => rat(1, 2),
    })
}

/// Win probability of coverage `f` against the pure pair `a < b`:
/// `1/2 + (f(b) - f(a)) / 2`.
pub fn win_prob_vs_pair(
    f: &CoverageFunction,
    a: f64,
    b: f64,
) -> Result<Probability, AnalysisError> {
    if !(a < b) {
        return Err(AnalysisError::InvalidPair(a, b));
    }
    Ok(Probability::saturating(0.5 + 0.5 * (f.eval(b) - f.eval(a))))
}

/// Win probability of coverage `f` against a discrete mixture, summed over
/// the joint `(shown, hidden)` atoms. For exchangeable strategies this equals
/// the average of the pairwise formula; forced arrangements are handled by
/// the same sum.
pub fn win_prob_vs_discrete(f: &CoverageFunction, bob: &DiscreteBobStrategy) -> Probability {
    let mut w = 0.0;
    for r in bob.realizations() {
        let accept = f.eval(r.shown);
        w += r.prob * if r.shown > r.hidden { accept } else { 1.0 - accept };
    }
    Probability::saturating(w)
}

/// Win probability of the random-threshold strategy `T ~ d` against a
/// discrete mixture, by exact summation over the pair support and the CDF of
/// `T`. For exchangeable mixtures this is `1/2 + P(Y < T <= X)`.
pub fn threshold_win_exact(d: &ThresholdDistribution, bob: &DiscreteBobStrategy) -> Probability {
    let mut w = 0.0;
    for r in bob.realizations() {
        let accept = d.coverage(r.shown);
        w += r.prob * if r.shown > r.hidden { accept } else { 1.0 - accept };
    }
    Probability::saturating(w)
}

// ---------------------------------------------------------------------------
// Best response and the median rule
// ---------------------------------------------------------------------------

/// The guesser's best reply to a known discrete mixture.
#[derive(Debug, Clone)]
pub struct BestResponseReport {
    /// `1/2 + sum_x P(X = x) |pi(x) - 1/2|`.
    pub value: Probability,
    /// Shown values accepted by the best reply (`pi(x) >= 1/2`; ties accept).
    pub decision_set: Vec<f64>,
    /// `(x, pi(x))` over the shown-value support, ascending in `x`.
    pub pi_table: Vec<(f64, f64)>,
}

impl fmt::Display for BestResponseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "value {} accepting {{", self.value)?;
        for (i, x) in self.decision_set.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

struct ShownStats {
    mass: f64,
    below: f64,
}

fn shown_stats(bob: &DiscreteBobStrategy) -> BTreeMap<u64, (f64, ShownStats)> {
    // Keyed by the total-order bit pattern of the shown value so f64 support
    // points can live in a BTreeMap; finite values keep their natural order.
    let mut map: BTreeMap<u64, (f64, ShownStats)> = BTreeMap::new();
    for r in bob.realizations() {
        let key = order_key(r.shown);
        let entry = map
            .entry(key)
            .or_insert((r.shown, ShownStats { mass: 0.0, below: 0.0 }));
        entry.1.mass += r.prob;
        if r.hidden < r.shown {
            entry.1.below += r.prob;
        }
    }
    map
}

fn order_key(x: f64) -> u64 {
    let bits = x.to_bits();
    if x >= 0.0 {
        bits ^ (1 << 63)
    } else {
        !bits
    }
}

/// Exact best reply: accept iff `pi(x) >= 1/2`, value per the conditional
/// decomposition.
pub fn best_response(bob: &DiscreteBobStrategy) -> BestResponseReport {
    let stats = shown_stats(bob);
    let mut value = 0.5;
    let mut decision_set = Vec::new();
    let mut pi_table = Vec::new();
    for (x, s) in stats.values() {
        let pi = s.below / s.mass;
        pi_table.push((*x, pi));
        if pi >= 0.5 {
            decision_set.push(*x);
        }
        value += s.mass * (pi - 0.5).abs();
    }
    BestResponseReport {
        value: Probability::saturating(value),
        decision_set,
        pi_table,
    }
}

/// Median of the conditional hidden-value distribution at shown value `x`:
/// `inf { y : P(Y <= y | X = x) >= 1/2 }`. The best reply accepts iff
/// `x >= conditional_median(x)`.
pub fn conditional_median(bob: &DiscreteBobStrategy, x: f64) -> Result<f64, AnalysisError> {
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let mut mass = 0.0;
    for r in bob.realizations() {
        if r.shown == x {
            atoms.push((r.hidden, r.prob));
            mass += r.prob;
        }
    }
    if mass <= 0.0 {
        return Err(AnalysisError::UnsupportedPoint(x));
    }
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut acc = 0.0;
    for (y, p) in atoms {
        acc += p;
        if acc >= 0.5 * mass - 1e-15 * mass {
            return Ok(y);
        }
    }
    unreachable!("conditional masses sum to the marginal");
}

// ---------------------------------------------------------------------------
// Conditional inequality (the two-envelope style bound)
// ---------------------------------------------------------------------------

/// Evidence that conditioning on clearing the threshold tilts the guess:
/// `P(X > Y | X >= T) = 1/2 + P(Y < T <= X) / (2 P(X >= T)) >= 1/2`.
#[derive(Debug, Clone)]
pub struct InequalityCertificate {
    /// `P(X > Y | X >= T)`.
    pub lhs: Probability,
    /// `P(X >= T)`, the conditioning mass.
    pub p_x_ge_t: f64,
    /// `P(Y < T <= X)`, the separation mass; positive iff the bound is strict.
    pub p_y_lt_t_le_x: f64,
    /// `lhs - (1/2 + separation / (2 mass))`; zero for exchangeable mixtures.
    pub identity_gap: f64,
}

/// Compute the conditional inequality pieces for a discrete mixture and a
/// random threshold. The identity in the certificate holds exactly for
/// exchangeable mixtures; the gap field reports the residual either way.
pub fn conditional_inequality(
    bob: &DiscreteBobStrategy,
    d: &ThresholdDistribution,
) -> Result<InequalityCertificate, AnalysisError> {
    let mut p_ge = 0.0;
    let mut p_win_and_ge = 0.0;
    let mut p_sep = 0.0;
    for r in bob.realizations() {
        let c_shown = d.coverage(r.shown);
        p_ge += r.prob * c_shown;
        if r.shown > r.hidden {
            p_win_and_ge += r.prob * c_shown;
            p_sep += r.prob * (c_shown - d.coverage(r.hidden));
        }
    }
    if p_ge <= 0.0 {
        return Err(AnalysisError::ConditioningOnNull);
    }
    let lhs = p_win_and_ge / p_ge;
    let rhs = 0.5 + p_sep / (2.0 * p_ge);
    Ok(InequalityCertificate {
        lhs: Probability::saturating(lhs),
        p_x_ge_t: p_ge,
        p_y_lt_t_le_x: p_sep,
        identity_gap: lhs - rhs,
    })
}

// ---------------------------------------------------------------------------
// Dominance over a grid
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DominanceVerdict {
    /// First is at least as good against every grid pair and better on some.
    Dominates,
    Dominated,
    Equal,
    Incomparable,
}

/// Compare two coverage functions by their increments over every grid pair
/// `a < b`; the pairwise win difference is half the increment difference.
pub fn dominance_check(
    f1: &CoverageFunction,
    f2: &CoverageFunction,
    grid: &[f64],
) -> Result<DominanceVerdict, AnalysisError> {
    if grid.len() < 2 {
        return Err(bad("dominance grid needs at least 2 points"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("dominance grid must be strictly increasing"));
    }
    const EPS: f64 = 1e-12;
    let (mut some_pos, mut some_neg) = (false, false);
    for i in 0..grid.len() {
        for j in (i + 1)..grid.len() {
            let (a, b) = (grid[i], grid[j]);
            let d = (f1.eval(b) - f1.eval(a)) - (f2.eval(b) - f2.eval(a));
            if d > EPS {
                some_pos = true;
            } else if d < -EPS {
                some_neg = true;
            }
        }
    }
    Ok(match (some_pos, some_neg) {
        (false, false) => DominanceVerdict::Equal,
        (true, false) => DominanceVerdict::Dominates,
        (false, true) => DominanceVerdict::Dominated,
        (true, true) => DominanceVerdict::Incomparable,
    })
}

// ---------------------------------------------------------------------------
// Exact rational twins for integer-supported mixtures
// ---------------------------------------------------------------------------

/// A discrete exchangeable mixture with integer pair support and exact
/// rational weights; the substrate for every zero-tolerance identity.
#[derive(Debug, Clone)]
pub struct ExactPairMixture {
    entries: Vec<(i64, i64, Rational)>,
}

impl ExactPairMixture {
    pub fn new(entries: Vec<(i64, i64, Rational)>) -> Result<Self, AnalysisError> {
        if entries.is_empty() {
            return Err(bad("exact mixture needs at least one pair"));
        }
        let mut total = Rational::zero();
        for (lo, hi, w) in &entries {
            if lo >= hi {
                return Err(bad(format!("pair needs lo < hi, got ({lo}, {hi})")));
            }
            if !w.is_positive() {
                return Err(bad(format!("pair weight must be positive, got {w}")));
            }
            total += w;
        }
        if !total.is_one() {
            return Err(bad(format!("pair weights must sum to exactly 1, got {total}")));
        }
        Ok(Self { entries })
    }

    /// Uniform consecutive pairs `(b, b+1)`, `b = 1..m`, with exact `1/m`
    /// weights.
    pub fn consecutive_uniform(m: u32) -> Result<Self, AnalysisError> {
        Self::scaled_consecutive(m, 1)
    }

    /// Uniform dilated consecutive pairs `(b*k, (b+1)*k)`.
    pub fn scaled_consecutive(m: u32, k: u64) -> Result<Self, AnalysisError> {
        if m < 1 || k < 1 {
            return Err(bad("scaled consecutive mixture needs m, k >= 1"));
        }
        if (m as u64 + 1).checked_mul(k).is_none_or(|v| v > i64::MAX as u64) {
            return Err(bad("support endpoint overflows"));
        }
        let w = rat(1, m as i64);
        Ok(Self {
            entries: (1..=m as i64)
                .map(|b| (b * k as i64, (b + 1) * k as i64, w.clone()))
                .collect(),
        })
    }

    pub fn entries(&self) -> &[(i64, i64, Rational)] {
        &self.entries
    }

    /// Joint `(shown, hidden, probability)` atoms under the fair-coin
    /// arrangement.
    pub fn realizations(&self) -> impl Iterator<Item = (i64, i64, Rational)> + '_ {
        self.entries.iter().flat_map(|(lo, hi, w)| {
            let half = w / rat(2, 1);
            [(*hi, *lo, half.clone()), (*lo, *hi, half)]
        })
    }

    /// Exact best-reply value and accepted shown values.
    pub fn best_response_exact(&self) -> (Rational, Vec<i64>) {
        let mut per_shown: BTreeMap<i64, (Rational, Rational)> = BTreeMap::new();
        for (shown, hidden, p) in self.realizations() {
            let e = per_shown
                .entry(shown)
                .or_insert((Rational::zero(), Rational::zero()));
            e.0 += &p;
            if hidden < shown {
                e.1 += &p;
            }
        }
        let half = rat(1, 2);
        let mut value = half.clone();
        let mut accepted = Vec::new();
        for (x, (mass, below)) in &per_shown {
            // mass * |pi - 1/2| with pi = below / mass.
            value += (below - &(&half * mass)).abs();
            if below * rat(2, 1) >= *mass {
                accepted.push(*x);
            }
        }
        (value, accepted)
    }

    /// Same mixture with f64 weights, for Monte Carlo cross-checks.
    pub fn to_f64_strategy(&self) -> DiscreteBobStrategy {
        let entries = self
            .entries
            .iter()
            .map(|(lo, hi, w)| crate::bob::PairEntry {
                lo: *lo as f64,
                hi: *hi as f64,
                weight: rational_to_f64(w),
                arrangement: crate::bob::Arrangement::Random,
            })
            .collect();
        DiscreteBobStrategy::new(entries, "exact mixture (f64 view)".to_string())
            .expect("validated rational entries stay valid in f64")
    }
}

/// Integer-valued random thresholds admitting exact CDF evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactThreshold {
    PointMass(i64),
    /// Uniform on the integer range `lo..=hi`.
    DiscreteUniform(i64, i64),
}

impl ExactThreshold {
    /// `P(T <= x)` as an exact rational.
    pub fn cdf(&self, x: i64) -> Rational {
        match *self {
            ExactThreshold::PointMass(t) => {
                if x >= t {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            ExactThreshold::DiscreteUniform(lo, hi) => {
                if x < lo {
                    Rational::zero()
                } else if x >= hi {
                    Rational::one()
                } else {
                    rat(x - lo + 1, hi - lo + 1)
                }
            }
        }
    }

    pub fn to_distribution(&self) -> ThresholdDistribution {
        match *self {
            ExactThreshold::PointMass(t) => {
                ThresholdDistribution::point_mass(t as f64).expect("finite")
            }
            ExactThreshold::DiscreteUniform(lo, hi) => {
                ThresholdDistribution::discrete_uniform(lo, hi).expect("validated range")
            }
        }
    }
}

/// Exact win probability of threshold `t` against the mixture:
/// `1/2 + P(Y < T <= X)` in rational arithmetic.
pub fn threshold_win_rational(bob: &ExactPairMixture, t: &ExactThreshold) -> Rational {
    let mut sep = Rational::zero();
    for (lo, hi, w) in bob.entries() {
        // P(lo < T <= hi), the chance the threshold separates the pair.
        sep += w * (t.cdf(*hi) - t.cdf(*lo));
    }
    rat(1, 2) + sep / rat(2, 1)
}

/// Exact certificate of the conditional inequality.
#[derive(Debug, Clone)]
pub struct ExactInequalityCertificate {
    /// `P(X > Y | X >= T)`.
    pub lhs: Rational,
    /// `1/2 + P(Y < T <= X) / (2 P(X >= T))`; equals `lhs` identically.
    pub rhs: Rational,
    pub p_x_ge_t: Rational,
    pub p_y_lt_t_le_x: Rational,
    /// Whether the bound `lhs > 1/2` is strict.
    pub strict: bool,
}

/// Exact-rational form of [`conditional_inequality`], restricted to
/// exchangeable integer mixtures where the identity is a theorem.
pub fn conditional_inequality_exact(
    bob: &ExactPairMixture,
    t: &ExactThreshold,
) -> Result<ExactInequalityCertificate, AnalysisError> {
    let mut p_ge = Rational::zero();
    let mut p_win_and_ge = Rational::zero();
    let mut p_sep = Rational::zero();
    for (shown, hidden, p) in bob.realizations() {
        let c = t.cdf(shown);
        p_ge += &p * &c;
        if shown > hidden {
            p_win_and_ge += &p * &c;
            p_sep += &p * &(c - t.cdf(hidden));
        }
    }
    if p_ge.is_zero() {
        return Err(AnalysisError::ConditioningOnNull);
    }
    let lhs = &p_win_and_ge / &p_ge;
    let rhs = rat(1, 2) + &p_sep / (rat(2, 1) * &p_ge);
    let strict = p_sep.is_positive();
    Ok(ExactInequalityCertificate { lhs, rhs, p_x_ge_t: p_ge, p_y_lt_t_le_x: p_sep, strict })
}

// ---------------------------------------------------------------------------
// The finite consecutive-pair game, certified from both sides
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiniteGameMode {
    /// Enumerate all `2^(m+1)` pure decision sets; requires `m <= 20`.
    Exhaustive,
    /// Exhaustive up to `m = 20`, best-response certification above.
    Auto,
}

pub const EXHAUSTIVE_LIMIT: u32 = 20;

#[derive(Debug, Clone)]
pub struct FiniteGameReport {
    pub m: u32,
    /// The common value `1/2 + 1/(2m)`, certified from both sides.
    pub value: Rational,
    /// Min over all pairs `1 <= a < b <= m+1` of the uniform-threshold win.
    pub alice_guarantee: Rational,
    /// Max over pure decision sets of the win against the uniform mixture.
    pub bob_cap: Rational,
    /// Whether the cap came from full decision-set enumeration.
    pub exhaustive: bool,
}

/// Certify the value of the consecutive-pair game on `{1, ..., m+1}` by
/// exhibiting matching guarantees for both players.
pub fn finite_game_oracle(m: u32, mode: FiniteGameMode) -> Result<FiniteGameReport, AnalysisError> {
    if m < 1 {
        return Err(bad("finite game needs m >= 1"));
    }
    let exhaustive = match mode {
        FiniteGameMode::Exhaustive => {
            if m > EXHAUSTIVE_LIMIT {
                return Err(AnalysisError::ExhaustionLimit { m, limit: EXHAUSTIVE_LIMIT });
            }
            true
        }
        FiniteGameMode::Auto => m <= EXHAUSTIVE_LIMIT,
    };

    // Guesser side: uniform threshold on {2..m+1} vs every pure pair.
    // win(a, b) = 1/2 + |{a < t <= b, 2 <= t <= m+1}| / (2m).
    let n = m as i64 + 1;
    let mut min_count = i64::MAX;
    for a in 1..n {
        for b in (a + 1)..=n {
            let count = b.min(n) - a.max(1);
            min_count = min_count.min(count);
        }
    }
    let alice_guarantee = rat(1, 2) + rat(min_count, 2 * m as i64);

    // Writer side: cap over the guesser's replies.
    let bob_cap = if exhaustive {
        // Score every decision set in doubled-payoff units: rises pay 2,
        // inversions 0, unseparated pairs 1.
        let masks = 1u64 << (m + 1);
        let best = (0..masks)
            .into_par_iter()
            .map(|d| {
                let mut score = 0i64;
                for beta in 0..m as u64 {
                    let lo = (d >> beta) & 1;
                    let hi = (d >> (beta + 1)) & 1;
                    score += match (lo, hi) {
                        (0, 1) => 2,
                        (1, 0) => 0,
                        _ => 1,
                    };
                }
                score
            })
            .max()
            .expect("at least one decision set");
        rat(best, 2 * m as i64)
    } else {
        ExactPairMixture::consecutive_uniform(m)?.best_response_exact().0
    };

    let expected = rat(1, 2) + rat(1, 2 * m as i64);
    if alice_guarantee != expected || bob_cap != expected {
        return Err(AnalysisError::Inconsistent(format!(
            "guarantees disagree at m = {m}: alice {alice_guarantee}, bob {bob_cap}, expected {expected}"
        )));
    }
    Ok(FiniteGameReport { m, value: expected, alice_guarantee, bob_cap, exhaustive })
}

/// Value of guessing with one training observation: the threshold `T` is an
/// independent copy, and enumerating the six equally likely orderings of
/// `(T, X, Y)` gives exactly `2/3`.
pub fn training_sample_value() -> Rational {
    // Ranks of (t, x, y) over all 3! orderings of three distinct values.
    const ORDERINGS: [(u8, u8, u8); 6] =
        [(1, 2, 3), (1, 3, 2), (2, 1, 3), (2, 3, 1), (3, 1, 2), (3, 2, 1)];
    let mut wins = 0i64;
    for (t, x, y) in ORDERINGS {
        let accept = x > t;
        let correct = if accept { x > y } else { x < y };
        if correct {
            wins += 1;
        }
    }
    rat(wins, ORDERINGS.len() as i64)
}

// ---------------------------------------------------------------------------
// Rank-after-threshold distribution (iid uniforms, independent uniform T)
// ---------------------------------------------------------------------------

fn factorial(n: u32) -> BigInt {
    (1..=n as u64).map(BigInt::from).fold(BigInt::one(), |a, b| a * b)
}

fn binomial(n: u32, k: u32) -> BigInt {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `P(R = r | X_1 >= T)` for `r = 1..n`, where `R` is the rank of `X_1`
/// among `n` iid uniforms and `T` an independent uniform:
/// `2 C(n-1, r-1) r! (n-r)! / (n+1)!` exactly.
pub fn rank_conditional_distribution(n: u32) -> Result<Vec<Rational>, AnalysisError> {
    if n < 1 {
        return Err(bad("rank experiment needs n >= 1"));
    }
    let denom = factorial(n + 1);
    Ok((1..=n)
        .map(|r| {
            let num = BigInt::from(2) * binomial(n - 1, r - 1) * factorial(r) * factorial(n - r);
            Rational::new(num, denom.clone())
        })
        .collect())
}

/// `P(R >= k | X_1 >= T)`, the exact tail of the conditional rank law.
pub fn rank_at_least_conditional(n: u32, k: u32) -> Result<Rational, AnalysisError> {
    if !(1 <= k && k <= n) {
        return Err(bad(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    Ok(rank_conditional_distribution(n)?[(k - 1) as usize..]
        .iter()
        .sum())
}

// ---------------------------------------------------------------------------
// Quadrature paths for continuous writer strategies
// ---------------------------------------------------------------------------

/// Points in `(lo, hi)` where the coverage function changes analytic form;
/// quadrature against a density must split here.
pub fn coverage_breakpoints(f: &CoverageFunction, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    collect_breakpoints(f, lo, hi, &mut out);
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

fn collect_breakpoints(f: &CoverageFunction, lo: f64, hi: f64, out: &mut Vec<f64>) {
    let mut push = |x: f64| {
        if x > lo && x < hi {
            out.push(x);
        }
    };
    match f.kind() {
        CoverageKind::Constant(_) => {}
        CoverageKind::StepThreshold(t) => push(*t),
        CoverageKind::DistributionCdf(d) => match d.family() {
            crate::alice::ThresholdFamily::PointMass { at } => push(*at),
            crate::alice::ThresholdFamily::DiscreteUniform { lo: a, hi: b } => {
                push_integer_range(*a, *b, lo, hi, out);
            }
            crate::alice::ThresholdFamily::ContinuousUniform { lo: a, hi: b } => {
                push(*a);
                push(*b);
            }
            crate::alice::ThresholdFamily::Logistic { .. }
            | crate::alice::ThresholdFamily::Normal { .. } => {}
        },
        CoverageKind::PiecewiseLinear(knots) => {
            for k in knots {
                push(k.x);
            }
        }
        CoverageKind::DualOf(inner) => collect_breakpoints(inner, lo, hi, out),
        CoverageKind::Mixture { first, second, .. } => {
            collect_breakpoints(first, lo, hi, out);
            collect_breakpoints(second, lo, hi, out);
        }
        CoverageKind::PoissonCoverage(_) => {}
        CoverageKind::LatticeTable(set) => {
            let last = set.start() + set.values().len() as i64 - 1;
            push_integer_range(set.start(), last, lo, hi, out);
        }
    }
}

// Cap on materialized integer jump points; a wider lattice than this inside
// one quadrature window is pathological and left to the adaptive refiner.
const MAX_LATTICE_BREAKPOINTS: i64 = 20_000;

fn push_integer_range(a: i64, b: i64, lo: f64, hi: f64, out: &mut Vec<f64>) {
    let from = (lo.floor() as i64).max(a);
    let to = (hi.ceil() as i64).min(b);
    if to - from > MAX_LATTICE_BREAKPOINTS {
        return;
    }
    for t in from..=to {
        let x = t as f64;
        if x > lo && x < hi {
            out.push(x);
        }
    }
}

fn integrate_piecewise(
    g: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    mut cuts: Vec<f64>,
    rel_tol: f64,
) -> Result<f64, NumericsError> {
    cuts.retain(|&c| c > lo && c < hi);
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += numerics::integrate(&g, w[0], w[1], rel_tol).map(|q| q.value)?;
    }
    Ok(total)
}

/// Best-reply value against a continuous strategy with analytic `pi`:
/// `1/2 + integral of |pi(x) - 1/2| * density(x)`.
pub fn best_response_value_continuous(
    bob: &ContinuousBobStrategy,
    rel_tol: f64,
) -> Result<f64, AnalysisError> {
    let (lo, hi) = bob.support();
    let pi = |x: f64| {
        bob.analytic_pi(x)
            .expect("builtin continuous strategies expose analytic pi")
    };
    let dens = |x: f64| bob.shown_density(x).expect("builtin density");
    let mut cuts = bob.kink_points();
    cuts.extend(bob.pi_half_crossings());
    let adv = integrate_piecewise(|x| (pi(x) - 0.5).abs() * dens(x), lo, hi, cuts, rel_tol)?;
    Ok(0.5 + adv)
}

/// Win probability of an arbitrary coverage function against a continuous
/// strategy, by conditioning on the shown value:
/// `integral of [f pi + (1 - f)(1 - pi)] * density`.
pub fn win_prob_vs_continuous(
    f: &CoverageFunction,
    bob: &ContinuousBobStrategy,
    rel_tol: f64,
) -> Result<f64, AnalysisError> {
    let (lo, hi) = bob.support();
    let mut cuts = bob.kink_points();
    cuts.extend(coverage_breakpoints(f, lo, hi));
    let w = integrate_piecewise(
        |x| {
            let pi = bob.analytic_pi(x).expect("builtin pi");
            let acc = f.eval(x);
            (acc * pi + (1.0 - acc) * (1.0 - pi)) * bob.shown_density(x).expect("builtin density")
        },
        lo,
        hi,
        cuts,
        rel_tol,
    )?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alice;
    use crate::bob;

    const LOGISTIC_PAIR_WIN: f64 = 0.6155292893150024;
    const GAMMA_MIX_LOGISTIC_WIN: f64 = 0.5577646446575012;
    const SCALE_BR_L1: f64 = 0.6903985389889412;
    const SCALE_BR_L3: f64 = 0.5829212294738942;
    const SCALE_BR_L10: f64 = 0.5249999998969423;
    const LOC_STEP0_M10: f64 = 0.5083333333333333;

    #[test]
    fn payoff_pure_four_cases() {
        let step = |t: f64| move |x: f64| x >= t;
        assert_eq!(payoff_pure(step(1.5), 1.0, 2.0).unwrap(), rat(1, 1));
        assert_eq!(payoff_pure(|_| true, 1.0, 2.0).unwrap(), rat(1, 2));
        assert_eq!(payoff_pure(|_| false, 1.0, 2.0).unwrap(), rat(1, 2));
        // Inversion: only the smaller number accepted.
        assert_eq!(payoff_pure(|x: f64| x < 1.5, 1.0, 2.0).unwrap(), rat(0, 1));
        assert!(payoff_pure(|_| true, 2.0, 2.0).is_err());
    }

    #[test]
    fn pair_win_matches_reference() {
        let f = alice::random_threshold(ThresholdDistribution::logistic(0.0, 1.0).unwrap());
        let w = win_prob_vs_pair(&f, 0.0, 1.0).unwrap().value();
        assert!((w - LOGISTIC_PAIR_WIN).abs() < 1e-15, "{w}");

        let g = alice::gamma_mixture(0.75, &f).unwrap();
        let wg = win_prob_vs_pair(&g, 0.0, 1.0).unwrap().value();
        assert!((wg - GAMMA_MIX_LOGISTIC_WIN).abs() < 1e-15, "{wg}");

        let blind = alice::blind(Probability::new(0.37).unwrap());
        assert_eq!(win_prob_vs_pair(&blind, 1.0, 4.0).unwrap().value(), 0.5);

        let step = alice::step_threshold(5.0);
        assert_eq!(win_prob_vs_pair(&step, 1.0, 2.0).unwrap().value(), 0.5);
        assert_eq!(win_prob_vs_pair(&step, 1.0, 8.0).unwrap().value(), 1.0);
        assert!(win_prob_vs_pair(&step, 2.0, 1.0).is_err());
    }

    #[test]
    fn minimax_threshold_vs_consecutive_mixture() {
        for m in [1u32, 4, 10] {
            let f = alice::finite_minimax(m).unwrap();
            let bobm = bob::consecutive_uniform(m).unwrap();
            let w = win_prob_vs_discrete(&f, &bobm).value();
            let expect = 0.5 + 0.5 / m as f64;
            assert!((w - expect).abs() < 1e-12, "m={m}: {w}");
        }
    }

    #[test]
    fn step_vs_consecutive_three() {
        let f = alice::step_threshold(1.5);
        let bob3 = bob::consecutive_uniform(3).unwrap();
        let w = win_prob_vs_discrete(&f, &bob3).value();
        // Only the pair (1, 2) is separated; the others sit above the cut.
        assert!((w - 2.0 / 3.0).abs() < 1e-12, "{w}");
    }

    #[test]
    fn forced_arrangement_neutralizes_every_coverage() {
        let b = bob::zero_pm_one();
        for f in [
            alice::step_threshold(0.0),
            alice::blind(Probability::ONE),
            alice::blind(Probability::ZERO),
            alice::random_threshold(ThresholdDistribution::logistic(0.3, 2.0).unwrap()),
        ] {
            assert_eq!(win_prob_vs_discrete(&f, &b).value(), 0.5);
        }
    }

    #[test]
    fn best_response_examples() {
        let br = best_response(&bob::consecutive_uniform(3).unwrap());
        assert!((br.value.value() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(br.decision_set, vec![2.0, 3.0, 4.0]);
        let pi: std::collections::BTreeMap<i64, f64> =
            br.pi_table.iter().map(|&(x, p)| (x as i64, p)).collect();
        assert_eq!(pi[&1], 0.0);
        assert_eq!(pi[&4], 1.0);
        assert!((pi[&2] - 0.5).abs() < 1e-15);

        let sure = best_response(&bob::modular_three(&[(0, 0.5), (2, 0.5)]).unwrap());
        assert_eq!(sure.value.value(), 1.0);

        let pair = best_response(&bob::pure_pair(3.0, 7.0).unwrap());
        assert_eq!(pair.value.value(), 1.0);
        assert_eq!(pair.decision_set, vec![7.0]);
    }

    #[test]
    fn best_response_dominates_specific_strategies() {
        let strategies = [
            bob::consecutive_uniform(5).unwrap(),
            bob::modular_three(&[(0, 0.25), (1, 0.75)]).unwrap(),
            bob::zero_pm_one(),
        ];
        let replies = [
            alice::step_threshold(2.0),
            alice::blind(Probability::HALF),
            alice::finite_minimax(5).unwrap(),
        ];
        for b in &strategies {
            let v = best_response(b).value.value();
            for f in &replies {
                assert!(v >= win_prob_vs_discrete(f, b).value() - 1e-12);
            }
        }
    }

    #[test]
    fn conditional_median_examples() {
        let pair = bob::pure_pair(1.0, 2.0).unwrap();
        assert_eq!(conditional_median(&pair, 1.0).unwrap(), 2.0);
        assert_eq!(conditional_median(&pair, 2.0).unwrap(), 1.0);
        assert!(matches!(
            conditional_median(&pair, 5.0),
            Err(AnalysisError::UnsupportedPoint(_))
        ));

        let b3 = bob::consecutive_uniform(3).unwrap();
        assert_eq!(conditional_median(&b3, 2.0).unwrap(), 1.0);
        assert_eq!(conditional_median(&b3, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn median_rule_matches_pi_rule() {
        // Accepting iff x >= mu(x) is the same as accepting iff pi(x) >= 1/2.
        for b in [
            bob::consecutive_uniform(6).unwrap(),
            bob::modular_three(&[(-1, 0.3), (0, 0.3), (4, 0.4)]).unwrap(),
            bob::scaled_consecutive(5, 3).unwrap(),
        ] {
            let br = best_response(&b);
            for &(x, pi) in &br.pi_table {
                let mu = conditional_median(&b, x).unwrap();
                assert_eq!(x >= mu, pi >= 0.5, "x = {x}, mu = {mu}, pi = {pi}");
            }
        }
    }

    #[test]
    fn threshold_win_equals_coverage_win() {
        let ds = [
            ThresholdDistribution::point_mass(2.5).unwrap(),
            ThresholdDistribution::discrete_uniform(2, 5).unwrap(),
            ThresholdDistribution::logistic(2.0, 1.5).unwrap(),
            ThresholdDistribution::normal(3.0, 2.0).unwrap(),
        ];
        let bobs = [
            bob::consecutive_uniform(4).unwrap(),
            bob::pure_pair(1.0, 6.0).unwrap(),
            bob::zero_pm_one(),
        ];
        for d in &ds {
            for b in &bobs {
                let lhs = threshold_win_exact(d, b).value();
                let rhs = win_prob_vs_discrete(&alice::random_threshold(d.clone()), b).value();
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn threshold_missing_the_gap_wins_half() {
        let b = DiscreteBobStrategy::new(
            vec![
                bob::PairEntry { lo: 1.0, hi: 2.0, weight: 0.5, arrangement: bob::Arrangement::Random },
                bob::PairEntry { lo: 7.0, hi: 8.0, weight: 0.5, arrangement: bob::Arrangement::Random },
            ],
            "two islands",
        )
        .unwrap();
        let d = ThresholdDistribution::point_mass(5.0).unwrap();
        assert_eq!(threshold_win_exact(&d, &b).value(), 0.5);

        // A fully supported threshold separates something in every mixture.
        let full = ThresholdDistribution::logistic(4.0, 3.0).unwrap();
        assert!(threshold_win_exact(&full, &b).value() > 0.5);
    }

    #[test]
    fn conditional_inequality_examples() {
        let pair = bob::pure_pair(1.0, 2.0).unwrap();
        let at2 = conditional_inequality(&pair, &ThresholdDistribution::point_mass(2.0).unwrap())
            .unwrap();
        assert_eq!(at2.lhs.value(), 1.0);
        assert!(at2.identity_gap.abs() < 1e-15);

        let at0 = conditional_inequality(&pair, &ThresholdDistribution::point_mass(0.0).unwrap())
            .unwrap();
        assert_eq!(at0.lhs.value(), 0.5);
        assert_eq!(at0.p_y_lt_t_le_x, 0.0);

        assert!(matches!(
            conditional_inequality(&pair, &ThresholdDistribution::point_mass(5.0).unwrap()),
            Err(AnalysisError::ConditioningOnNull)
        ));
    }

    #[test]
    fn conditional_inequality_exact_enumeration() {
        let b = ExactPairMixture::consecutive_uniform(3).unwrap();
        let t = ExactThreshold::DiscreteUniform(2, 4);
        let cert = conditional_inequality_exact(&b, &t).unwrap();
        assert_eq!(cert.lhs, cert.rhs);
        assert!(cert.lhs >= rat(1, 2));
        assert!(cert.strict);
        // Hand-enumerated: the six equally likely (shown, hidden) atoms give
        // P(X >= T) = 1/2, P(X > Y and X >= T) = 1/3, P(Y < T <= X) = 1/6.
        assert_eq!(cert.p_x_ge_t, rat(1, 2));
        assert_eq!(cert.p_y_lt_t_le_x, rat(1, 6));
        assert_eq!(cert.lhs, rat(2, 3));
    }

    #[test]
    fn dominance_examples() {
        let f = alice::random_threshold(ThresholdDistribution::logistic(0.0, 1.0).unwrap());
        let hedged = alice::gamma_mixture(0.75, &f).unwrap();
        let grid: Vec<f64> = (-5..=5).map(|i| i as f64).collect();
        assert_eq!(dominance_check(&f, &hedged, &grid).unwrap(), DominanceVerdict::Dominates);
        assert_eq!(dominance_check(&hedged, &f, &grid).unwrap(), DominanceVerdict::Dominated);
        assert_eq!(dominance_check(&f, &f, &grid).unwrap(), DominanceVerdict::Equal);
        assert_eq!(
            dominance_check(&f, &alice::dual(&f), &grid).unwrap(),
            DominanceVerdict::Dominates
        );
        let s0 = alice::step_threshold(0.0);
        let s1 = alice::step_threshold(1.0);
        assert_eq!(
            dominance_check(&s0, &s1, &[-1.0, 0.5, 2.0]).unwrap(),
            DominanceVerdict::Incomparable
        );
        assert!(dominance_check(&f, &f, &[1.0]).is_err());
        assert!(dominance_check(&f, &f, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn finite_game_small_values() {
        let g1 = finite_game_oracle(1, FiniteGameMode::Exhaustive).unwrap();
        assert_eq!(g1.value, rat(1, 1));
        let g4 = finite_game_oracle(4, FiniteGameMode::Exhaustive).unwrap();
        assert_eq!(g4.value, rat(5, 8));
        assert!(g4.exhaustive);
        let g10 = finite_game_oracle(10, FiniteGameMode::Exhaustive).unwrap();
        assert_eq!(g10.value, rat(11, 20));
        assert!(matches!(
            finite_game_oracle(21, FiniteGameMode::Exhaustive),
            Err(AnalysisError::ExhaustionLimit { .. })
        ));
        let g25 = finite_game_oracle(25, FiniteGameMode::Auto).unwrap();
        assert_eq!(g25.value, rat(13, 25));
        assert!(!g25.exhaustive);
    }

    #[test]
    fn exact_best_response_values() {
        let (v3, d3) = ExactPairMixture::consecutive_uniform(3).unwrap().best_response_exact();
        assert_eq!(v3, rat(2, 3));
        assert_eq!(d3, vec![2, 3, 4]);
        for m in [1u32, 2, 7, 50] {
            let (v, _) = ExactPairMixture::consecutive_uniform(m).unwrap().best_response_exact();
            assert_eq!(v, rat(1, 2) + rat(1, 2 * m as i64), "m = {m}");
        }
        // Dilation leaves the value unchanged.
        let (vs, _) = ExactPairMixture::scaled_consecutive(100, 5).unwrap().best_response_exact();
        assert_eq!(vs, rat(1, 2) + rat(1, 200));
    }

    #[test]
    fn exact_threshold_win_for_minimax_pairing() {
        let b = ExactPairMixture::consecutive_uniform(4).unwrap();
        let t = ExactThreshold::DiscreteUniform(2, 5);
        assert_eq!(threshold_win_rational(&b, &t), rat(5, 8));
        let miss = ExactThreshold::PointMass(100);
        assert_eq!(threshold_win_rational(&b, &miss), rat(1, 2));
    }

    #[test]
    fn training_sample_enumeration() {
        assert_eq!(training_sample_value(), rat(2, 3));
    }

    #[test]
    fn rank_conditional_tables() {
        let d3 = rank_conditional_distribution(3).unwrap();
        assert_eq!(d3, vec![rat(1, 6), rat(1, 3), rat(1, 2)]);
        assert_eq!(rank_at_least_conditional(3, 3).unwrap(), rat(1, 2));
        assert_eq!(rank_at_least_conditional(3, 2).unwrap(), rat(5, 6));

        let d4 = rank_conditional_distribution(4).unwrap();
        assert_eq!(d4, vec![rat(1, 10), rat(1, 5), rat(3, 10), rat(2, 5)]);

        for n in [1u32, 2, 3, 4, 5, 6, 12] {
            let total: Rational = rank_conditional_distribution(n).unwrap().iter().sum();
            assert!(total.is_one(), "n = {n}");
            // Conditioning tilts every upper tail strictly upward vs k-1..n
            // uniform, except the full-support tail which stays 1.
            for k in 2..=n {
                let cond = rank_at_least_conditional(n, k).unwrap();
                let uncond = rat((n - k + 1) as i64, n as i64);
                assert!(cond > uncond, "n = {n}, k = {k}");
            }
        }
    }

    #[test]
    fn continuous_best_response_values() {
        let iid = best_response_value_continuous(&bob::iid_uniform_pair(), 1e-11).unwrap();
        assert!((iid - 0.75).abs() < 1e-10, "{iid}");

        let eq = best_response_value_continuous(&bob::arrangement_closest_to_half(), 1e-11)
            .unwrap();
        assert!((eq - 0.5).abs() < 1e-12, "{eq}");

        for m in [0.7, 10.0, 50.0] {
            let v = best_response_value_continuous(&bob::location_uniform(m).unwrap(), 1e-11)
                .unwrap();
            let expect = 0.5 + 1.0 / (12.0 * m);
            assert!((v - expect).abs() < 1e-9, "m = {m}: {v}");
        }
        let v50 = best_response_value_continuous(&bob::location_uniform(50.0).unwrap(), 1e-11)
            .unwrap();
        assert!(v50 < 0.51);
    }

    #[test]
    fn scale_mixture_best_response_matches_reference() {
        for (log_m, expect) in [(1.0f64, SCALE_BR_L1), (3.0, SCALE_BR_L3), (10.0, SCALE_BR_L10)] {
            let b = bob::scale_uniform_twocards(log_m.exp()).unwrap();
            let v = best_response_value_continuous(&b, 1e-11).unwrap();
            assert!((v - expect).abs() < 1e-9, "log m = {log_m}: {v} vs {expect}");
        }
    }

    #[test]
    fn win_prob_vs_continuous_examples() {
        let iid = bob::iid_uniform_pair();
        let w = win_prob_vs_continuous(&alice::step_threshold(0.5), &iid, 1e-11).unwrap();
        assert!((w - 0.75).abs() < 1e-10, "{w}");

        let loc = bob::location_uniform(10.0).unwrap();
        let wl = win_prob_vs_continuous(&alice::step_threshold(0.0), &loc, 1e-11).unwrap();
        assert!((wl - LOC_STEP0_M10).abs() < 1e-10, "{wl}");

        let eq = bob::arrangement_closest_to_half();
        for f in [
            alice::step_threshold(0.5),
            alice::random_threshold(ThresholdDistribution::logistic(0.5, 0.2).unwrap()),
        ] {
            let we = win_prob_vs_continuous(&f, &eq, 1e-11).unwrap();
            assert!((we - 0.5).abs() < 1e-10, "{we}");
        }

        // Any constant acceptance rate wins exactly 1/2 vs exchangeable pairs.
        let wb = win_prob_vs_continuous(&alice::blind(Probability::new(0.9).unwrap()), &loc, 1e-11)
            .unwrap();
        assert!((wb - 0.5).abs() < 1e-10, "{wb}");
    }

    #[test]
    fn continuous_best_response_dominates_thresholds() {
        let b = bob::scale_uniform_twocards(7.0).unwrap();
        let v = best_response_value_continuous(&b, 1e-11).unwrap();
        for t in [0.1, 0.5, 1.0, 2.0] {
            let w = win_prob_vs_continuous(&alice::step_threshold(t), &b, 1e-11).unwrap();
            assert!(v >= w - 1e-9, "t = {t}: {v} < {w}");
        }
    }

    #[test]
    fn modular_three_threshold_cap() {
        // Any threshold wins at most 1 - min_weight / 2 against two or more
        // atoms, strictly below the sure-fire value 1.
        let b = bob::modular_three(&[(0, 0.4), (5, 0.6)]).unwrap();
        for t in [-10.0, 0.5, 1.0, 14.0, 15.5, 16.0, 100.0] {
            let w = win_prob_vs_discrete(&alice::step_threshold(t), &b).value();
            assert!(w <= 1.0 - 0.4 / 2.0 + 1e-12, "t = {t}: {w}");
        }
        assert_eq!(best_response(&b).value.value(), 1.0);
    }
}

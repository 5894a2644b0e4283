//! Guesser-side strategy constructors.
//!
//! Every builder returns a [`CoverageFunction`]; the interesting work is in
//! the families themselves (random thresholds, Poisson decision sets,
//! lattice tables) and in deriving honest classification flags for each.

use crate::engine::{
    CoverageFlags, CoverageFunction, CoverageKind, EngineError, Knot, Probability, RngStream,
    Trilean,
};
use rand::Rng;
use rand_distr::Distribution;
use serde::Serialize;
use statrs::distribution::ContinuousCDF;

/// Distribution of a random acceptance threshold `T`, optionally placing
/// atoms at the two infinities (accept-everything / accept-nothing mass).
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdDistribution {
    family: ThresholdFamily,
    p_minus: f64,
    p_plus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdFamily {
    PointMass { at: f64 },
    DiscreteUniform { lo: i64, hi: i64 },
    ContinuousUniform { lo: f64, hi: f64 },
    Logistic { location: f64, scale: f64 },
    Normal { mean: f64, std_dev: f64 },
}

/// A sampled threshold; the infinite values realize the atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSample {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

fn invalid(msg: impl Into<String>) -> EngineError {
    EngineError::InvalidParameter(msg.into())
}

impl ThresholdDistribution {
    pub fn point_mass(at: f64) -> Result<Self, EngineError> {
        if !at.is_finite() {
            return Err(invalid(format!("point mass location must be finite, got {at}")));
        }
        Ok(Self::core(ThresholdFamily::PointMass { at }))
    }

    pub fn discrete_uniform(lo: i64, hi: i64) -> Result<Self, EngineError> {
        if lo > hi {
            return Err(invalid(format!("discrete uniform needs lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(Self::core(ThresholdFamily::DiscreteUniform { lo, hi }))
    }

    pub fn continuous_uniform(lo: f64, hi: f64) -> Result<Self, EngineError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!("continuous uniform needs finite lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self::core(ThresholdFamily::ContinuousUniform { lo, hi }))
    }

    pub fn logistic(location: f64, scale: f64) -> Result<Self, EngineError> {
        if !(location.is_finite() && scale.is_finite() && scale > 0.0) {
            return Err(invalid(format!("logistic needs finite location and scale > 0, got ({location}, {scale})")));
        }
        Ok(Self::core(ThresholdFamily::Logistic { location, scale }))
    }

    pub fn normal(mean: f64, std_dev: f64) -> Result<Self, EngineError> {
        if !(mean.is_finite() && std_dev.is_finite() && std_dev > 0.0) {
            return Err(invalid(format!("normal needs finite mean and std_dev > 0, got ({mean}, {std_dev})")));
        }
        Ok(Self::core(ThresholdFamily::Normal { mean, std_dev }))
    }

    fn core(family: ThresholdFamily) -> Self {
        Self { family, p_minus: 0.0, p_plus: 0.0 }
    }

    /// Replace the atoms at minus/plus infinity.
    pub fn with_atoms(self, p_minus: f64, p_plus: f64) -> Result<Self, EngineError> {
        let ok = p_minus.is_finite()
            && p_plus.is_finite()
            && p_minus >= 0.0
            && p_plus >= 0.0
            && p_minus + p_plus <= 1.0;
        if !ok {
            return Err(invalid(format!("atoms must be nonnegative with sum <= 1, got ({p_minus}, {p_plus})")));
        }
        Ok(Self { p_minus, p_plus, ..self })
    }

    pub fn family(&self) -> &ThresholdFamily {
        &self.family
    }

    pub fn atoms(&self) -> (f64, f64) {
        (self.p_minus, self.p_plus)
    }

    pub fn atom_total(&self) -> f64 {
        self.p_minus + self.p_plus
    }

    /// Whether the finite part has positive density on the whole real line.
    pub fn fully_supported(&self) -> bool {
        matches!(
            self.family,
            ThresholdFamily::Logistic { .. } | ThresholdFamily::Normal { .. }
        )
    }

    /// `P(T <= x)`. The atom at minus infinity counts for every `x`; the one
    /// at plus infinity for none.
    pub fn coverage(&self, x: f64) -> f64 {
        let core = match &self.family {
            ThresholdFamily::PointMass { at } => {
                if x >= *at {
                    1.0
                } else {
                    0.0
                }
            }
            ThresholdFamily::DiscreteUniform { lo, hi } => {
                let k = x.floor();
                if k < *lo as f64 {
                    0.0
                } else if k >= *hi as f64 {
                    1.0
                } else {
                    (k - *lo as f64 + 1.0) / ((*hi - *lo + 1) as f64)
                }
            }
            ThresholdFamily::ContinuousUniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            ThresholdFamily::Logistic { location, scale } => {
                1.0 / (1.0 + (-(x - location) / scale).exp())
            }
            ThresholdFamily::Normal { mean, std_dev } => {
                statrs::distribution::Normal::new(*mean, *std_dev)
                    .expect("validated at construction")
                    .cdf(x)
            }
        };
        (self.p_minus + (1.0 - self.p_minus - self.p_plus) * core).clamp(0.0, 1.0)
    }

    /// Draw one threshold.
    pub fn sample(&self, rng: &mut RngStream) -> ThresholdSample {
        let u = rng.u01();
        if u < self.p_minus {
            return ThresholdSample::NegInfinity;
        }
        if u < self.p_minus + self.p_plus {
            return ThresholdSample::PosInfinity;
        }
        let t = match &self.family {
            ThresholdFamily::PointMass { at } => *at,
            ThresholdFamily::DiscreteUniform { lo, hi } => rng.random_range(*lo..=*hi) as f64,
            ThresholdFamily::ContinuousUniform { lo, hi } => lo + rng.u01() * (hi - lo),
            ThresholdFamily::Logistic { location, scale } => {
                let v = rng.u01_open();
                location + scale * (v / (1.0 - v)).ln()
            }
            ThresholdFamily::Normal { mean, std_dev } => {
                rand_distr::Normal::new(*mean, *std_dev)
                    .expect("validated at construction")
                    .sample(rng)
            }
        };
        ThresholdSample::Finite(t)
    }
}

/// Intensity of the Poisson point process whose unit dilation is the
/// decision set.
#[derive(Debug, Clone, PartialEq)]
pub enum PoissonIntensity {
    /// Constant rate; the resulting coverage does not depend on `x`.
    Homogeneous { lambda: f64 },
    /// Rate `exp(t)`, giving a proper, strictly increasing coverage.
    ExponentialIntensity,
}

impl PoissonIntensity {
    /// `P(x` is within distance 1 to the right of a process point`)`, i.e.
    /// one minus the void probability of `(x - 1, x]`.
    pub fn coverage(&self, x: f64) -> f64 {
        match self {
            PoissonIntensity::Homogeneous { lambda } => 1.0 - (-lambda).exp(),
            PoissonIntensity::ExponentialIntensity => {
                let mass = (1.0 - (-1.0f64).exp()) * x.exp();
                1.0 - (-mass).exp()
            }
        }
    }

    /// Integrated intensity over `[lo, hi]`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        match self {
            PoissonIntensity::Homogeneous { lambda } => lambda * (hi - lo),
            PoissonIntensity::ExponentialIntensity => hi.exp() - lo.exp(),
        }
    }
}

/// One realized decision set `D = U_i [P_i, P_i + 1)`, materialized for
/// membership queries inside a fixed window.
#[derive(Debug, Clone)]
pub struct PoissonDecisionSet {
    points: Vec<f64>,
    query_lo: f64,
    query_hi: f64,
}

impl PoissonDecisionSet {
    /// Process points, sorted ascending.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Whether `x` lies in the decision set. Only valid inside the window
    /// the set was sampled for.
    pub fn contains(&self, x: f64) -> bool {
        assert!(
            x >= self.query_lo && x <= self.query_hi,
            "query {x} outside sampled window [{}, {}]",
            self.query_lo,
            self.query_hi
        );
        // x is covered iff some point lies in (x - 1, x].
        let i = self.points.partition_point(|&p| p <= x - 1.0);
        i < self.points.len() && self.points[i] <= x
    }
}

/// Materialize a decision set usable for queries in `[query_lo, query_hi]`.
pub fn sample_poisson_decision_set(
    intensity: &PoissonIntensity,
    query_lo: f64,
    query_hi: f64,
    rng: &mut RngStream,
) -> Result<PoissonDecisionSet, EngineError> {
    if !(query_lo.is_finite() && query_hi.is_finite() && query_lo <= query_hi) {
        return Err(invalid(format!("bad query window [{query_lo}, {query_hi}]")));
    }
    if let PoissonIntensity::Homogeneous { lambda } = intensity {
        if !(lambda.is_finite() && *lambda >= 0.0) {
            return Err(invalid(format!("poisson rate must be finite and >= 0, got {lambda}")));
        }
    }
    // Points up to one unit left of the window can still cover it.
    let (lo, hi) = (query_lo - 1.0, query_hi);
    let mass = intensity.mass(lo, hi);
    if !mass.is_finite() {
        return Err(invalid(format!("intensity mass over [{lo}, {hi}] overflows")));
    }
    let count = if mass > 0.0 {
        rand_distr::Poisson::new(mass)
            .map_err(|e| invalid(format!("poisson sampling: {e}")))?
            .sample(rng) as u64
    } else {
        0
    };
    let mut points = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let u = rng.u01();
        let p = match intensity {
            PoissonIntensity::Homogeneous { .. } => lo + u * (hi - lo),
            PoissonIntensity::ExponentialIntensity => {
                // Inverse transform under the exponential rate.
                (lo.exp() + u * (hi.exp() - lo.exp())).ln()
            }
        };
        points.push(p);
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(PoissonDecisionSet { points, query_lo, query_hi })
}

/// Acceptance table over consecutive integer sites: site `start + i` is a
/// member of the decision set with probability `values[i]`, and real-valued
/// queries clamp to the nearest covered site.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeRandomSet {
    start: i64,
    values: Vec<f64>,
}

impl LatticeRandomSet {
    pub fn new(start: i64, values: Vec<f64>) -> Result<Self, EngineError> {
        if values.is_empty() {
            return Err(invalid("lattice table needs at least one site"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
            return Err(invalid(format!("lattice probabilities must lie in [0, 1], got {v}")));
        }
        Ok(Self { start, values })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Site membership probability with clamping at the window edges.
    pub fn coverage_at_site(&self, site: i64) -> f64 {
        let last = self.start + self.values.len() as i64 - 1;
        let idx = site.clamp(self.start, last) - self.start;
        self.values[idx as usize]
    }

    pub fn coverage_at_real(&self, x: f64) -> f64 {
        let f = x.floor();
        let last = self.start + self.values.len() as i64 - 1;
        let site = if f <= self.start as f64 {
            self.start
        } else if f >= last as f64 {
            last
        } else {
            f as i64
        };
        self.coverage_at_site(site)
    }

    /// Draw an independent membership indicator for every site.
    pub fn sample_memberships(&self, rng: &mut RngStream) -> Vec<bool> {
        self.values.iter().map(|&q| rng.u01() < q).collect()
    }
}

/// Accept with fixed probability `p`, ignoring the shown number.
pub fn blind(p: Probability) -> CoverageFunction {
    CoverageFunction::new(CoverageKind::Constant(p.value()))
}

/// Deterministic rule: accept iff `x >= t`.
pub fn step_threshold(t: f64) -> CoverageFunction {
    CoverageFunction::new(CoverageKind::StepThreshold(t))
}

/// Accept iff the shown number clears a randomly drawn threshold.
pub fn random_threshold(dist: ThresholdDistribution) -> CoverageFunction {
    CoverageFunction::new(CoverageKind::DistributionCdf(dist))
}

/// Piecewise-linear coverage through the given knots, clamped outside.
pub fn piecewise_linear(knots: Vec<Knot>) -> Result<CoverageFunction, EngineError> {
    if knots.is_empty() {
        return Err(invalid("piecewise linear needs at least one knot"));
    }
    for k in &knots {
        if !k.x.is_finite() || !k.y.is_finite() || !(0.0..=1.0).contains(&k.y) {
            return Err(invalid(format!("bad knot ({}, {})", k.x, k.y)));
        }
    }
    if knots.windows(2).any(|w| w[0].x >= w[1].x) {
        return Err(invalid("knot x coordinates must be strictly increasing"));
    }
    Ok(CoverageFunction::new(CoverageKind::PiecewiseLinear(knots)))
}

/// Pointwise complement `1 - f`. An involution up to flag bookkeeping:
/// duals of duals unwrap, and duals of constants stay constants.
pub fn dual(f: &CoverageFunction) -> CoverageFunction {
    match f.kind() {
        CoverageKind::DualOf(inner) => (**inner).clone(),
        CoverageKind::Constant(p) => CoverageFunction::new(CoverageKind::Constant(1.0 - p)),
        _ => CoverageFunction::new(CoverageKind::DualOf(Box::new(f.clone()))),
    }
}

/// General two-component mixture `gamma * first + (1 - gamma) * second`.
pub fn mixture(
    gamma: f64,
    first: CoverageFunction,
    second: CoverageFunction,
) -> Result<CoverageFunction, EngineError> {
    if !(gamma.is_finite() && (0.0..=1.0).contains(&gamma)) {
        return Err(invalid(format!("mixture weight must lie in [0, 1], got {gamma}")));
    }
    Ok(CoverageFunction::new(CoverageKind::Mixture {
        gamma,
        first: Box::new(first),
        second: Box::new(second),
    }))
}

/// Hedge `f` against its own complement: `gamma * f + (1 - gamma) * (1 - f)`,
/// with `gamma` in `[1/2, 1]`.
///
/// Algebraically this equals `(1 - gamma) + (2 gamma - 1) * f`, a positive
/// affine rescaling, so monotonicity flags carry over from `f` verbatim while
/// properness is lost for every `gamma < 1` (the tails sit at `1 - gamma` and
/// `gamma`).
pub fn gamma_mixture(gamma: f64, f: &CoverageFunction) -> Result<CoverageFunction, EngineError> {
    if !(gamma.is_finite() && (0.5..=1.0).contains(&gamma)) {
        return Err(invalid(format!("hedge weight must lie in [1/2, 1], got {gamma}")));
    }
    if gamma == 1.0 {
        return Ok(f.clone());
    }
    if gamma == 0.5 {
        return Ok(blind(Probability::HALF));
    }
    let base = f.flags();
    let kind = CoverageKind::Mixture {
        gamma,
        first: Box::new(f.clone()),
        second: Box::new(dual(f)),
    };
    let flags = CoverageFlags {
        nondecreasing: base.nondecreasing,
        strictly_increasing: base.strictly_increasing,
        proper: Trilean::No,
    };
    Ok(CoverageFunction::with_flags(kind, flags))
}

/// Coverage of a Poisson decision set with the given intensity.
pub fn poisson_coverage(intensity: PoissonIntensity) -> Result<CoverageFunction, EngineError> {
    if let PoissonIntensity::Homogeneous { lambda } = &intensity {
        if !(lambda.is_finite() && *lambda >= 0.0) {
            return Err(invalid(format!("poisson rate must be finite and >= 0, got {lambda}")));
        }
    }
    Ok(CoverageFunction::new(CoverageKind::PoissonCoverage(intensity)))
}

/// Independent-Bernoulli lattice decision set, queried through its coverage.
pub fn lattice_bernoulli(start: i64, values: Vec<f64>) -> Result<CoverageFunction, EngineError> {
    Ok(CoverageFunction::new(CoverageKind::LatticeTable(
        LatticeRandomSet::new(start, values)?,
    )))
}

/// The minimax guesser for the consecutive-pair game on `{1, ..., m + 1}`:
/// a uniform random threshold on `{2, ..., m + 1}`.
pub fn finite_minimax(m: u32) -> Result<CoverageFunction, EngineError> {
    if m == 0 {
        return Err(invalid("finite game needs m >= 1"));
    }
    Ok(random_threshold(ThresholdDistribution::discrete_uniform(
        2,
        m as i64 + 1,
    )?))
}

/// Game-theoretic classification of a guesser strategy, read off the
/// structural flags of its coverage function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Classification {
    /// Guarantees at least 1/2 against every pair.
    pub minimax: Trilean,
    /// Strictly better than 1/2 against every pair.
    pub strongly_dominant: Trilean,
    /// Strictly better than 1/2 against every pair, with win probability
    /// approaching 1 as the pair spreads out.
    pub superminimax: Trilean,
}

/// Classify via the coverage-function criteria: minimax iff nondecreasing,
/// strongly dominant iff strictly increasing, superminimax iff strictly
/// increasing and proper.
pub fn classify(f: &CoverageFunction) -> Classification {
    let flags = f.flags();
    Classification {
        minimax: flags.nondecreasing,
        strongly_dominant: flags.strictly_increasing,
        superminimax: flags.strictly_increasing.and(flags.proper),
    }
}

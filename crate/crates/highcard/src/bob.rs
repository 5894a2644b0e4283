//! Writer-side strategies: discrete pair mixtures and continuous two-card
//! constructions.
//!
//! Discrete strategies are finite mixtures of ordered pairs with an explicit
//! arrangement rule (random side, or a forced side for the unconstrained-game
//! demonstrations). Continuous strategies are latent-parameter constructions
//! with closed-form shown-value density and conditional win rate.

use crate::engine::{EngineError, NumberPair, PairSampler, RngStream};

fn invalid(msg: impl Into<String>) -> EngineError {
    EngineError::InvalidParameter(msg.into())
}

/// Which card of an ordered pair `(lo, hi)` the guesser is shown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrangement {
    /// Fair coin; keeps the pair exchangeable.
    Random,
    /// Always show the smaller number.
    ShowLo,
    /// Always show the larger number.
    ShowHi,
}

/// One weighted ordered pair in a discrete mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEntry {
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
    pub arrangement: Arrangement,
}

/// A finite mixture of pairs, optionally with forced arrangements.
#[derive(Debug, Clone)]
pub struct DiscreteBobStrategy {
    entries: Vec<PairEntry>,
    cumulative: Vec<f64>,
    description: String,
}

/// One `(shown, hidden, probability)` atom of the joint distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Realization {
    pub shown: f64,
    pub hidden: f64,
    pub prob: f64,
}

impl DiscreteBobStrategy {
    pub fn new(entries: Vec<PairEntry>, description: impl Into<String>) -> Result<Self, EngineError> {
        if entries.is_empty() {
            return Err(invalid("discrete strategy needs at least one pair"));
        }
        let mut total = 0.0;
        for e in &entries {
            if !e.lo.is_finite() || !e.hi.is_finite() {
                return Err(invalid(format!("pair ({}, {}) must be finite", e.lo, e.hi)));
            }
            if e.lo >= e.hi {
                return Err(invalid(format!("pair needs lo < hi, got ({}, {})", e.lo, e.hi)));
            }
            if !e.weight.is_finite() || e.weight <= 0.0 {
                return Err(invalid(format!("pair weight must be positive, got {}", e.weight)));
            }
            total += e.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("pair weights must sum to 1, got {total}")));
        }
        let mut cumulative = Vec::with_capacity(entries.len());
        let mut acc = 0.0;
        for e in &entries {
            acc += e.weight;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self { entries, cumulative, description: description.into() })
    }

    pub fn entries(&self) -> &[PairEntry] {
        &self.entries
    }

    /// The joint `(shown, hidden)` atoms, with probabilities summing to 1.
    pub fn realizations(&self) -> Vec<Realization> {
        let mut out = Vec::with_capacity(self.entries.len() * 2);
        for e in &self.entries {
            match e.arrangement {
                Arrangement::Random => {
                    out.push(Realization { shown: e.lo, hidden: e.hi, prob: e.weight / 2.0 });
                    out.push(Realization { shown: e.hi, hidden: e.lo, prob: e.weight / 2.0 });
                }
                Arrangement::ShowLo => {
                    out.push(Realization { shown: e.lo, hidden: e.hi, prob: e.weight });
                }
                Arrangement::ShowHi => {
                    out.push(Realization { shown: e.hi, hidden: e.lo, prob: e.weight });
                }
            }
        }
        out
    }
}

impl PairSampler for DiscreteBobStrategy {
    fn sample_pair(&self, rng: &mut RngStream) -> NumberPair {
        let u = rng.u01();
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.entries.len() - 1);
        let e = &self.entries[idx];
        let show_hi = match e.arrangement {
            Arrangement::Random => rng.u01() < 0.5,
            Arrangement::ShowLo => false,
            Arrangement::ShowHi => true,
        };
        if show_hi {
            NumberPair { shown: e.hi, hidden: e.lo }
        } else {
            NumberPair { shown: e.lo, hidden: e.hi }
        }
    }

    fn exchangeable(&self) -> bool {
        self.entries.iter().all(|e| e.arrangement == Arrangement::Random)
    }

    fn describe(&self) -> String {
        self.description.clone()
    }
}

/// A single unordered pair `{a, b}`, shown side chosen by a fair coin.
pub fn pure_pair(a: f64, b: f64) -> Result<DiscreteBobStrategy, EngineError> {
    if !a.is_finite() || !b.is_finite() {
        return Err(invalid(format!("pair ({a}, {b}) must be finite")));
    }
    if a == b {
        return Err(invalid(format!("pair numbers must differ, got ({a}, {b})")));
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    DiscreteBobStrategy::new(
        vec![PairEntry { lo, hi, weight: 1.0, arrangement: Arrangement::Random }],
        format!("pure pair ({lo}, {hi})"),
    )
}

/// Uniform mixture of the consecutive pairs `(b, b+1)` for `b = 1..m`.
pub fn consecutive_uniform(m: u32) -> Result<DiscreteBobStrategy, EngineError> {
    scaled_consecutive(m, 1)
}

/// Uniform mixture of the dilated consecutive pairs `(b*k, (b+1)*k)` for
/// `b = 1..m`: every realized gap is exactly `k`, yet the mixture is as hard
/// for the guesser as the unit-gap game of the same length.
pub fn scaled_consecutive(m: u32, k: u64) -> Result<DiscreteBobStrategy, EngineError> {
    if m < 1 {
        return Err(invalid("consecutive mixture needs m >= 1"));
    }
    if k < 1 {
        return Err(invalid("pair gap k must be >= 1"));
    }
    if (m as u64 + 1).checked_mul(k).is_none_or(|v| v > (1u64 << 52)) {
        return Err(invalid(format!("support endpoint (m+1)*k overflows at m={m}, k={k}")));
    }
    let w = 1.0 / m as f64;
    let entries = (1..=m as u64)
        .map(|b| PairEntry {
            lo: (b * k) as f64,
            hi: ((b + 1) * k) as f64,
            weight: w,
            arrangement: Arrangement::Random,
        })
        .collect();
    let description = if k == 1 {
        format!("uniform consecutive pairs, m = {m}")
    } else {
        format!("uniform consecutive pairs, m = {m}, gap k = {k}")
    };
    DiscreteBobStrategy::new(entries, description)
}

/// Mixture of the pairs `(3j, 3j + 1)` with the given weights over `j`.
/// Residues mod 3 leak which side is shown, so a sure-fire response exists.
pub fn modular_three(weights: &[(i64, f64)]) -> Result<DiscreteBobStrategy, EngineError> {
    if weights.is_empty() {
        return Err(invalid("modular mixture needs at least one atom"));
    }
    let mut seen: Vec<i64> = weights.iter().map(|(j, _)| *j).collect();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("modular mixture needs distinct j values"));
    }
    let entries = weights
        .iter()
        .map(|&(j, w)| {
            if j.abs() > (1 << 50) {
                return Err(invalid(format!("j = {j} is too large for exact f64 support")));
            }
            Ok(PairEntry {
                lo: (3 * j) as f64,
                hi: (3 * j + 1) as f64,
                weight: w,
                arrangement: Arrangement::Random,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    DiscreteBobStrategy::new(entries, format!("pairs (3j, 3j+1) over {} atoms", weights.len()))
}

/// Shown number always 0, hidden one of +-1 by a fair coin: the guesser
/// learns nothing. Not exchangeable; admitted for the unconstrained game.
pub fn zero_pm_one() -> DiscreteBobStrategy {
    DiscreteBobStrategy::new(
        vec![
            PairEntry { lo: -1.0, hi: 0.0, weight: 0.5, arrangement: Arrangement::ShowHi },
            PairEntry { lo: 0.0, hi: 1.0, weight: 0.5, arrangement: Arrangement::ShowLo },
        ],
        "show 0, hide +-1".to_string(),
    )
    .expect("static entries are valid")
}

/// The continuous two-card constructions.
#[derive(Debug, Clone, PartialEq)]
pub enum ContinuousKind {
    /// `X = B + U1, Y = B + U2` with `B` uniform on `[-m, m]`.
    LocationUniform { m: f64 },
    /// `X = A*U1, Y = A*U2` with `A` log-uniform on `(1/m, m)`.
    ScaleUniform { m: f64 },
    /// `X, Y` iid uniform on `[0, 1]`.
    IidUniformPair,
    /// Two iid uniforms, showing the one nearer to 1/2. Not exchangeable,
    /// yet perfectly equalizing: every guesser wins exactly 1/2.
    ClosestToHalf,
}

/// A continuous writer strategy with analytic structure exposed for the
/// exact-analysis paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousBobStrategy {
    kind: ContinuousKind,
}

impl ContinuousBobStrategy {
    pub fn kind(&self) -> &ContinuousKind {
        &self.kind
    }

    /// Open interval carrying the shown-value distribution.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            ContinuousKind::LocationUniform { m } => (-m, m + 1.0),
            ContinuousKind::ScaleUniform { m } => (0.0, m),
            ContinuousKind::IidUniformPair | ContinuousKind::ClosestToHalf => (0.0, 1.0),
        }
    }

    /// Conditional win rate of accepting: `pi(x) = P(hidden < x | shown = x)`.
    /// Defined on the support; available in closed form for every kind.
    pub fn analytic_pi(&self, x: f64) -> Option<f64> {
        let pi = match self.kind {
            ContinuousKind::LocationUniform { m } => {
                0.5 * ((x - m).max(0.0) + (x + m).min(1.0))
            }
            ContinuousKind::ScaleUniform { m } => {
                if x >= 1.0 / m {
                    0.5 * (1.0 + x / m)
                } else {
                    0.5 * x * (m + 1.0 / m)
                }
            }
            ContinuousKind::IidUniformPair => x,
            ContinuousKind::ClosestToHalf => 0.5,
        };
        Some(pi.clamp(0.0, 1.0))
    }

    /// Density of the shown value; zero outside the support.
    pub fn shown_density(&self, x: f64) -> Option<f64> {
        let d = match self.kind {
            ContinuousKind::LocationUniform { m } => {
                (x.min(m) - (x - 1.0).max(-m)).max(0.0) / (2.0 * m)
            }
            ContinuousKind::ScaleUniform { m } => {
                if x <= 0.0 || x >= m {
                    0.0
                } else if x >= 1.0 / m {
                    (1.0 / x - 1.0 / m) / (2.0 * m.ln())
                } else {
                    (m - 1.0 / m) / (2.0 * m.ln())
                }
            }
            ContinuousKind::IidUniformPair => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            ContinuousKind::ClosestToHalf => {
                if (0.0..=1.0).contains(&x) {
                    2.0 * (1.0 - 2.0 * (x - 0.5).abs())
                } else {
                    0.0
                }
            }
        };
        Some(d)
    }

    /// Interior points where the density or `pi` changes analytic form;
    /// quadrature splits here.
    pub fn kink_points(&self) -> Vec<f64> {
        match self.kind {
            ContinuousKind::LocationUniform { m } => {
                vec![-m + 1.0, m, 1.0 - m, -m + 2.0]
                    .into_iter()
                    .filter(|&x| x > -m && x < m + 1.0)
                    .collect()
            }
            ContinuousKind::ScaleUniform { m } => vec![1.0 / m, 1.0],
            ContinuousKind::IidUniformPair => vec![],
            ContinuousKind::ClosestToHalf => vec![0.5],
        }
    }

    /// Interior points where `pi` crosses 1/2; together with
    /// [`Self::kink_points`] these cut the support into pieces on which
    /// `|pi - 1/2|` is smooth.
    pub fn pi_half_crossings(&self) -> Vec<f64> {
        match self.kind {
            // pi is 1/2 on the whole interior; the edges are kinks already.
            ContinuousKind::LocationUniform { .. } => vec![],
            ContinuousKind::ScaleUniform { m } => vec![m / (m * m + 1.0)],
            ContinuousKind::IidUniformPair => vec![0.5],
            ContinuousKind::ClosestToHalf => vec![],
        }
    }

    /// Sample a pair along with the latent parameter (`B` or `A`) when the
    /// construction has one; the latent channel feeds oracle tests.
    pub fn sample_with_latent(&self, rng: &mut RngStream) -> (NumberPair, Option<f64>) {
        loop {
            let (pair, latent) = match self.kind {
                ContinuousKind::LocationUniform { m } => {
                    let b = -m + 2.0 * m * rng.u01();
                    let x = b + rng.u01();
                    let y = b + rng.u01();
                    (NumberPair { shown: x, hidden: y }, Some(b))
                }
                ContinuousKind::ScaleUniform { m } => {
                    let a = ((2.0 * rng.u01() - 1.0) * m.ln()).exp();
                    let x = a * rng.u01();
                    let y = a * rng.u01();
                    (NumberPair { shown: x, hidden: y }, Some(a))
                }
                ContinuousKind::IidUniformPair => {
                    let x = rng.u01();
                    let y = rng.u01();
                    (NumberPair { shown: x, hidden: y }, None)
                }
                ContinuousKind::ClosestToHalf => {
                    let u1 = rng.u01();
                    let u2 = rng.u01();
                    let (shown, hidden) = if (u1 - 0.5).abs() <= (u2 - 0.5).abs() {
                        (u1, u2)
                    } else {
                        (u2, u1)
                    };
                    (NumberPair { shown, hidden }, None)
                }
            };
            // Ties have probability zero; redraw on the measure-zero event.
            if pair.shown != pair.hidden {
                return (pair, latent);
            }
        }
    }
}

impl PairSampler for ContinuousBobStrategy {
    fn sample_pair(&self, rng: &mut RngStream) -> NumberPair {
        self.sample_with_latent(rng).0
    }

    fn exchangeable(&self) -> bool {
        !matches!(self.kind, ContinuousKind::ClosestToHalf)
    }

    fn describe(&self) -> String {
        match self.kind {
            ContinuousKind::LocationUniform { m } => format!("location-uniform window m = {m}"),
            ContinuousKind::ScaleUniform { m } => format!("scale-uniform factor m = {m}"),
            ContinuousKind::IidUniformPair => "iid uniform pair".to_string(),
            ContinuousKind::ClosestToHalf => "show the uniform nearer 1/2".to_string(),
        }
    }
}

/// Two cards at unit offset on a uniformly random location in `[-m, m]`.
pub fn location_uniform(m: f64) -> Result<ContinuousBobStrategy, EngineError> {
    if !(m.is_finite() && m > 0.0) {
        return Err(invalid(format!("location window needs m > 0, got {m}")));
    }
    Ok(ContinuousBobStrategy { kind: ContinuousKind::LocationUniform { m } })
}

/// Two uniform cards under a shared log-uniform scale on `(1/m, m)`.
pub fn scale_uniform_twocards(m: f64) -> Result<ContinuousBobStrategy, EngineError> {
    if !(m.is_finite() && m > 1.0) {
        return Err(invalid(format!("scale factor needs m > 1, got {m}")));
    }
    Ok(ContinuousBobStrategy { kind: ContinuousKind::ScaleUniform { m } })
}

/// Two iid uniform cards on `[0, 1]`.
pub fn iid_uniform_pair() -> ContinuousBobStrategy {
    ContinuousBobStrategy { kind: ContinuousKind::IidUniformPair }
}

/// Two iid uniform cards, always showing the one nearer 1/2.
pub fn arrangement_closest_to_half() -> ContinuousBobStrategy {
    ContinuousBobStrategy { kind: ContinuousKind::ClosestToHalf }
}

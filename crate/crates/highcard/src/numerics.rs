//! Numerical utilities: adaptive quadrature, one-dimensional minimization,
//! binomial confidence intervals, and harmonic numbers.
//!
//! The quadrature helpers include change-of-variable wrappers for the two
//! improper shapes that recur in this crate: an integrable power singularity
//! at the left endpoint and a power-law tail on `[x0, inf)`. Both substitutions
//! turn the integrand into a smooth function on a finite interval, so the
//! adaptive rule converges at its nominal rate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("quadrature did not reach the requested tolerance (estimated error {0:.3e})")]
    QuadratureNonconvergence(f64),
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Result of an adaptive quadrature: the integral and an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
}

const MAX_DEPTH: u32 = 60;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    (fa + 4.0 * fm + fb) * h / 6.0
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    err_acc: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || delta.abs() <= 15.0 * tol {
        // Richardson extrapolation; |delta|/15 estimates the remaining error.
        *err_acc += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, err_acc)
        + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, err_acc)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
///
/// `rel_tol` is interpreted relative to a running magnitude estimate of the
/// integral, with a small absolute floor so that integrals near zero still
/// terminate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Quadrature, NumericsError> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(NumericsError::InvalidInterval(a, b));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error_estimate: 0.0 });
    }
    // Coarse pass to scale the absolute tolerance off the integral magnitude.
    let n0 = 64;
    let h = (b - a) / n0 as f64;
    let mut coarse = 0.0;
    for i in 0..n0 {
        let x0 = a + i as f64 * h;
        coarse += simpson(f(x0), f(x0 + 0.5 * h), f(x0 + h), h);
    }
    let scale = coarse.abs().max(1e-12);
    let tol = rel_tol * scale;

    let mut err_acc = 0.0;
    let mut total = 0.0;
    // Integrate panel-by-panel over a modest initial partition so that narrow
    // features away from the midpoint cannot be missed by the first split.
    let panels = 8;
    let ph = (b - a) / panels as f64;
    for i in 0..panels {
        let pa = a + i as f64 * ph;
        let pb = pa + ph;
        let pm = 0.5 * (pa + pb);
        let (fa, fm, fb) = (f(pa), f(pm), f(pb));
        let whole = simpson(fa, fm, fb, pb - pa);
        total += adaptive_step(&f, pa, pb, fa, fm, fb, whole, tol / panels as f64, 0, &mut err_acc);
    }
    let q = Quadrature { value: total, error_estimate: err_acc };
    if err_acc > rel_tol * total.abs().max(scale) * 20.0 {
        return Err(NumericsError::QuadratureNonconvergence(err_acc));
    }
    Ok(q)
}

/// Integrate `x^(delta-1) * psi(x)` over `(0, 1]` where `psi` is bounded.
///
/// Substituting `x = u^(1/delta)` gives `(1/delta) * Int_0^1 psi(u^(1/delta)) du`
/// with a smooth integrand; `psi` must accept `x == 0` (the `u -> 0` image may
/// underflow to zero) and return its limiting value there.
pub fn integrate_left_power<F: Fn(f64) -> f64>(psi: F, delta: f64, rel_tol: f64) -> Result<Quadrature, NumericsError> {
    if !(delta > 0.0) {
        return Err(NumericsError::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let inv = 1.0 / delta;
    let g = |u: f64| psi(u.powf(inv));
    let q = integrate(g, 0.0, 1.0, rel_tol)?;
    Ok(Quadrature { value: q.value / delta, error_estimate: q.error_estimate / delta })
}

/// Integrate `x^(-1-delta) * phi(x)` over `[x0, inf)` where `phi` is bounded,
/// `x0 > 0`. Substituting `w = x^(-delta)` gives
/// `(1/delta) * Int_0^(x0^-delta) phi(w^(-1/delta)) dw`; `phi` is never called
/// at `w == 0` itself but must be bounded as `x -> inf`.
pub fn integrate_tail_power<F: Fn(f64) -> f64>(
    phi: F,
    x0: f64,
    delta: f64,
    rel_tol: f64,
) -> Result<Quadrature, NumericsError> {
    if !(delta > 0.0) || !(x0 > 0.0) {
        return Err(NumericsError::InvalidParameter(format!(
            "tail transform needs x0 > 0 and delta > 0, got x0={x0}, delta={delta}"
        )));
    }
    let inv = 1.0 / delta;
    let upper = x0.powf(-delta);
    let g = |w: f64| {
        if w <= 0.0 {
            // w = 0 corresponds to x = inf; use the bounded limit of phi.
            phi(f64::MAX.sqrt())
        } else {
            phi(w.powf(-inv))
        }
    };
    let q = integrate(g, 0.0, upper, rel_tol)?;
    Ok(Quadrature { value: q.value / delta, error_estimate: q.error_estimate / delta })
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
/// Returns `(argmin, min)` with the argmin located to within `tol`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64), NumericsError> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(NumericsError::InvalidInterval(a, b));
    }
    if !(tol > 0.0) {
        return Err(NumericsError::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    const INVPHI: f64 = 0.618_033_988_749_894_8; // (sqrt(5) - 1) / 2
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)))
}

/// Wilson score interval for a binomial proportion at critical value `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0, "wilson_interval needs at least one trial");
    assert!(successes <= trials, "successes cannot exceed trials");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (((center - half) / denom).max(0.0), ((center + half) / denom).min(1.0))
}

/// The n-th harmonic number `1 + 1/2 + ... + 1/n`.
pub fn harmonic(n: u64) -> f64 {
    // Summing smallest-first keeps the rounding error negligible at this scale.
    (1..=n).rev().map(|i| 1.0 / i as f64).sum()
}

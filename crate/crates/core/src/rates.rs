//! Theoretical linear-rate factors and their empirical counterparts.

use nalgebra::DVector;
use serde::Serialize;

use crate::engine::{distance_floor, step_exact, validate_gamma, CSchedule, GppaConfig, IterationTrace};
use crate::error::{Error, Result};
use crate::linalg::{ensure_dim, ensure_positive};
use crate::operators::{MonotoneOperator, RotationOperator};
use crate::sampling::Sampler;
use crate::scalar::Scalar;

/// Minimum number of usable ratios for an empirical estimate.
pub const MIN_USABLE_RATIOS: usize = 10;

fn relaxation_weight<S: Scalar>(gamma: S) -> S {
    gamma.min(S::lit(2.0) * gamma - gamma * gamma)
}

/// `ϱ = 1 - min(γ, 2γ - γ²) c² / (a² + c²)`, the bound on the squared
/// per-step contraction of the exact scheme.
pub fn theoretical_exact_rate<S: Scalar>(gamma: S, c: S, a: S) -> Result<S> {
    validate_gamma(gamma)?;
    ensure_positive("c", c)?;
    ensure_positive("a", a)?;
    Ok(S::one() - relaxation_weight(gamma) * c * c / (a * a + c * c))
}

/// `θ = (sqrt(ϱ) + γδ) / (1 - γδ)`; `None` when `γδ >= 1` or `θ >= 1`.
pub fn theoretical_inexact_factor<S: Scalar>(gamma: S, c: S, a: S, delta: S) -> Result<Option<S>> {
    let rho = theoretical_exact_rate(gamma, c, a)?;
    if !(delta.is_finite() && delta >= S::zero()) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta.to_f64_lossy(),
            reason: "must be >= 0",
        });
    }
    let gd = gamma * delta;
    if gd >= S::one() {
        return Ok(None);
    }
    let theta = (rho.sqrt() + gd) / (S::one() - gd);
    Ok((theta < S::one()).then_some(theta))
}

// θ without the `< 1` cut-off; still a valid per-step bound while γδ < 1.
fn inexact_bound<S: Scalar>(gamma: S, c: S, a: S, delta: S) -> Option<S> {
    let rho = theoretical_exact_rate(gamma, c, a).ok()?;
    let gd = gamma * delta;
    (gd < S::one()).then(|| (rho.sqrt() + gd) / (S::one() - gd))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Comparison<S: Scalar> {
    /// `|r_k - f_k| <= tol` for every ratio in the window.
    Equality(S),
    /// `r_k <= f_k + tol` for every ratio in the window.
    Bound(S),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FactorSource<S: Scalar> {
    Constant(S),
    /// Per-step `sqrt(ϱ_k)` (exact records) or `θ_k` (inexact records) from
    /// the modulus `a` and each record's `c_k`, `δ_k`.
    Modulus(S),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateExpectation<S: Scalar> {
    pub factor: FactorSource<S>,
    pub comparison: Comparison<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport<S: Scalar> {
    /// Largest per-step theoretical factor over the window.
    pub theoretical_factor: Option<S>,
    pub empirical_tail_ratio_max: S,
    pub empirical_geometric_mean: S,
    pub tight: bool,
    /// Half-open range of ratio indices used.
    pub window: (usize, usize),
    pub usable_ratios: usize,
    /// First ratio index at which the measured ratio is at or below a contractive factor.
    pub first_below_theoretical: Option<usize>,
}

/// Ratios `d_{k+1} / d_k` for the leading run of distances above `floor`.
pub fn usable_ratios<S: Scalar>(distances: &[S], floor: S) -> Vec<S> {
    let mut out = Vec::new();
    for w in distances.windows(2) {
        if !(w[0] > floor && w[1] > floor) {
            break;
        }
        out.push(w[1] / w[0]);
    }
    out
}

/// Builds a [`RateReport`] from a distance sequence. `factor_at(k)` gives the
/// theoretical per-step factor for ratio `k`, if any.
pub fn rate_from_distances<S: Scalar>(
    distances: &[S],
    floor: S,
    window_fraction: f64,
    factor_at: impl Fn(usize) -> Option<S>,
    comparison: Option<Comparison<S>>,
) -> Result<RateReport<S>> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "window_fraction",
            value: window_fraction,
            reason: "must lie in (0, 1]",
        });
    }
    let ratios = usable_ratios(distances, floor);
    if ratios.len() < MIN_USABLE_RATIOS {
        return Err(Error::TooFewRatios {
            found: ratios.len(),
            required: MIN_USABLE_RATIOS,
        });
    }
    let n = ratios.len();
    let width = ((n as f64 * window_fraction).ceil() as usize).clamp(1, n);
    let start = n - width;
    let tail = &ratios[start..];

    let max = tail.iter().copied().fold(tail[0], |a, b| a.max(b));
    let log_sum = tail.iter().fold(S::zero(), |acc, r| acc + r.ln());
    let geo = (log_sum / S::lit(width as f64)).exp();

    let mut theoretical: Option<S> = None;
    let mut tight = comparison.is_some();
    for (i, &r) in tail.iter().enumerate() {
        let Some(f) = factor_at(start + i) else {
            continue;
        };
        theoretical = Some(theoretical.map_or(f, |t| t.max(f)));
        match comparison {
            Some(Comparison::Equality(tol)) => tight &= (r - f).abs() <= tol,
            Some(Comparison::Bound(tol)) => tight &= r <= f + tol,
            None => {}
        }
    }
    if theoretical.is_none() {
        tight = false;
    }
    let first_below = ratios
        .iter()
        .enumerate()
        .find(|&(k, &r)| matches!(factor_at(k), Some(f) if f < S::one() && r <= f))
        .map(|(k, _)| k);

    Ok(RateReport {
        theoretical_factor: theoretical,
        empirical_tail_ratio_max: max,
        empirical_geometric_mean: geo,
        tight,
        window: (start, n),
        usable_ratios: n,
        first_below_theoretical: first_below,
    })
}

/// Q-linear rate of a trace towards `z_star` over the tail `window_fraction`
/// of usable ratios.
pub fn estimate_empirical_rate<S: Scalar>(
    trace: &IterationTrace<S>,
    z_star: &DVector<S>,
    window_fraction: f64,
    expectation: Option<RateExpectation<S>>,
) -> Result<RateReport<S>> {
    let distances = match trace.iterates() {
        Some(its) => {
            for z in &its {
                ensure_dim(z, z_star.len())?;
            }
            its.iter().map(|z| (z - z_star).norm()).collect()
        }
        None => trace
            .distances()
            .ok_or(Error::Config("trace stores neither iterates nor distances".into()))?,
    };
    let floor = distance_floor(z_star);
    let gamma = trace.config.gamma;
    let factor_at = |k: usize| -> Option<S> {
        match expectation?.factor {
            FactorSource::Constant(f) => Some(f),
            FactorSource::Modulus(a) => {
                let rec = trace.records.get(k)?;
                match rec.delta_k {
                    None => theoretical_exact_rate(gamma, rec.c_k, a).ok().map(|r| r.sqrt()),
                    Some(d) => inexact_bound(gamma, rec.c_k, a, d),
                }
            }
        }
    };
    rate_from_distances(
        &distances,
        floor,
        window_fraction,
        factor_at,
        expectation.map(|e| e.comparison),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessReport<S: Scalar> {
    pub a: S,
    pub c: S,
    pub gamma: S,
    pub rho: S,
    pub squared_ratios: Vec<S>,
    /// `max |r_k^2 - ϱ|`.
    pub max_deviation: S,
    /// `max (r_k^2 - ϱ)`.
    pub max_excess: S,
    pub equality_expected: bool,
    pub passed: bool,
    pub rate: RateReport<S>,
}

/// Runs the exact scheme on the rotation operator, where the linear-rate
/// bound is attained: with `γ = 1` every squared ratio equals `ϱ`, otherwise
/// each stays at or below it.
///
/// The zero is exactly the origin, so norms keep full relative precision and
/// no distance floor is applied.
pub fn tightness_check_rotation<S: Scalar>(
    a: S,
    c: S,
    gamma: S,
    z0: &DVector<S>,
    iters: usize,
) -> Result<TightnessReport<S>> {
    let op = RotationOperator::new(a)?;
    ensure_dim(z0, 2)?;
    if z0.norm() == S::zero() {
        return Err(Error::Config("tightness check needs a nonzero starting point".into()));
    }
    let rho = theoretical_exact_rate(gamma, c, a)?;
    let mut z = z0.clone();
    let mut norms = vec![z.norm()];
    for _ in 0..iters {
        let (next, _) = step_exact(&op, c, gamma, &z)?;
        z = next;
        norms.push(z.norm());
    }
    let ratios = usable_ratios(&norms, S::zero());
    let squared: Vec<S> = ratios.iter().map(|r| *r * *r).collect();
    let max_deviation = squared.iter().fold(S::zero(), |m, s| m.max((*s - rho).abs()));
    let max_excess = squared
        .iter()
        .fold(-S::max_value().unwrap(), |m, s| m.max(*s - rho));
    let equality_expected = gamma == S::one();
    let passed = if equality_expected {
        max_deviation <= S::tol(1e-12)
    } else {
        max_excess <= S::tol(1e-10)
    };
    let comparison = if equality_expected {
        Comparison::Equality(S::tol(1e-6))
    } else {
        Comparison::Bound(S::tol(1e-6))
    };
    let rate = rate_from_distances(&norms, S::zero(), 0.5, |_| Some(rho.sqrt()), Some(comparison))?;
    Ok(TightnessReport {
        a,
        c,
        gamma,
        rho,
        squared_ratios: squared,
        max_deviation,
        max_excess,
        equality_expected,
        passed,
        rate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzEstimate<S: Scalar> {
    pub l_hat: S,
    pub radius: S,
    pub samples: usize,
    pub seed: u64,
    /// `a / sqrt(a² + c²)` when the operator declares a modulus.
    pub bound: Option<S>,
    pub within_bound: Option<bool>,
}

/// Largest sampled ratio `|J_{cT}(z) - z*| / |z - z*|` over the ball `B(z*, radius)`.
pub fn estimate_resolvent_lipschitz<S: Scalar, T: MonotoneOperator<S> + ?Sized>(
    op: &T,
    c: S,
    z_star: &DVector<S>,
    radius: S,
    samples: usize,
    seed: u64,
) -> Result<LipschitzEstimate<S>> {
    ensure_positive("c", c)?;
    ensure_positive("radius", radius)?;
    ensure_dim(z_star, op.dim())?;
    if samples < 2 {
        return Err(Error::Config("at least two samples are required".into()));
    }
    let mut sampler = Sampler::new(seed);
    let mut l_hat = S::zero();
    for _ in 0..samples {
        let z = sampler.point_in_ball(z_star, radius);
        let d = (&z - z_star).norm();
        if d == S::zero() {
            continue;
        }
        let jz = op.resolvent(c, &z)?;
        l_hat = l_hat.max((jz - z_star).norm() / d);
    }
    let bound = op.inverse_lipschitz_modulus().map(|a| a / (a * a + c * c).sqrt());
    let within_bound = bound.map(|b| l_hat <= b + S::tol(1e-8));
    Ok(LipschitzEstimate {
        l_hat,
        radius,
        samples,
        seed,
        bound,
        within_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport<S: Scalar> {
    pub a: S,
    pub gamma: S,
    pub c_values: Vec<S>,
    /// Measured `|z^{k+1}| / |z^k|`.
    pub ratios: Vec<S>,
    /// Spectral norm of `(1-γ)I + γ J_{c_k T}`, the exact per-step ratio on this operator.
    pub predicted_ratios: Vec<S>,
    pub final_ratio: S,
    /// Limit of the ratios: `|1 - γ|` for growing `c_k`, the constant ratio otherwise.
    pub expected_limit: S,
    pub monotone_decreasing: bool,
}

/// Exact scheme on the rotation operator with `c_k = c0 * growth^k`.
/// With `γ = 1` and growing `c_k` the ratios go to zero; with `γ ≠ 1` they
/// approach `|1 - γ|`.
pub fn superlinear_probe<S: Scalar>(
    a: S,
    gamma: S,
    c0: S,
    growth: S,
    iters: usize,
    z0: &DVector<S>,
) -> Result<ProbeReport<S>> {
    let op = RotationOperator::new(a)?;
    validate_gamma(gamma)?;
    ensure_dim(z0, 2)?;
    if iters < 10 {
        return Err(Error::Config("superlinear probe needs at least 10 iterations".into()));
    }
    if z0.norm() == S::zero() {
        return Err(Error::Config("superlinear probe needs a nonzero starting point".into()));
    }
    let schedule = CSchedule::Geometric { c0, ratio: growth };
    GppaConfig::new(gamma, schedule.clone()).validate()?;

    let mut z = z0.clone();
    let mut c_values = Vec::with_capacity(iters);
    let mut ratios = Vec::with_capacity(iters);
    let mut predicted = Vec::with_capacity(iters);
    for k in 0..iters {
        let c = schedule.at(k);
        let before = z.norm();
        if !c.is_finite() || before == S::zero() {
            break;
        }
        let (next, _) = step_exact(&op, c, gamma, &z)?;
        let after = next.norm();
        c_values.push(c);
        ratios.push(after / before);
        // (1-γ)I + γJ = αI + βK with J = (I - tK)/(1 + t²), t = c/a
        let t = c / a;
        let s = S::one() / (S::one() + t * t);
        let alpha = S::one() - gamma + gamma * s;
        let beta = gamma * t * s;
        predicted.push((alpha * alpha + beta * beta).sqrt());
        z = next;
    }
    let final_ratio = *ratios.last().ok_or(Error::TooFewRatios { found: 0, required: 1 })?;
    let expected_limit = if growth > S::one() {
        (S::one() - gamma).abs()
    } else {
        predicted[0]
    };
    let monotone_decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    Ok(ProbeReport {
        a,
        gamma,
        c_values,
        ratios,
        predicted_ratios: predicted,
        final_ratio,
        expected_limit,
        monotone_decreasing,
    })
}

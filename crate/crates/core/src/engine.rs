//! Exact and inexact generalized proximal point iterations.
//!
//! Exact step: `z⁺ = z - γ (z - J_{cT}(z))` with `γ ∈ (0, 2)`.
//! Inexact step: `z⁺ = (1 - γ) z + γ z̄` where `|z̄ - J_{cT}(z)| <= δ |z - z⁺|`.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ensure_dim, ensure_finite_vec, ensure_positive, relax};
use crate::operators::MonotoneOperator;
use crate::sampling::Sampler;
use crate::scalar::Scalar;

/// Proximal parameters `c_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CSchedule<S: Scalar> {
    Constant(S),
    /// `c0 * ratio^k` with `ratio >= 1`.
    Geometric { c0: S, ratio: S },
    /// Explicit values; the last one is held once the list is exhausted.
    List(Vec<S>),
}

impl<S: Scalar> CSchedule<S> {
    pub fn at(&self, k: usize) -> S {
        match self {
            CSchedule::Constant(c) => *c,
            CSchedule::Geometric { c0, ratio } => *c0 * ratio.powi(k.min(i32::MAX as usize) as i32),
            CSchedule::List(values) => values[k.min(values.len() - 1)],
        }
    }

    /// Lower bound `κ` with `c_k >= κ` for every `k`.
    pub fn lower_bound(&self) -> S {
        match self {
            CSchedule::Constant(c) => *c,
            CSchedule::Geometric { c0, .. } => *c0,
            CSchedule::List(values) => values.iter().copied().fold(values[0], |a, b| a.min(b)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CSchedule::Constant(c) => ensure_positive("c", *c),
            CSchedule::Geometric { c0, ratio } => {
                ensure_positive("c0", *c0)?;
                if !(ratio.is_finite() && *ratio >= S::one()) {
                    return Err(Error::InvalidParameter {
                        name: "ratio",
                        value: ratio.to_f64_lossy(),
                        reason: "geometric growth factor must be >= 1",
                    });
                }
                Ok(())
            }
            CSchedule::List(values) => {
                if values.is_empty() {
                    return Err(Error::Config("c schedule list is empty".into()));
                }
                values.iter().try_for_each(|&c| ensure_positive("c", c))
            }
        }
    }
}

/// Summable accuracy sequence `δ_k = δ0 * decay^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaSchedule<S: Scalar> {
    pub delta0: S,
    pub decay: S,
}

impl<S: Scalar> DeltaSchedule<S> {
    pub fn new(delta0: S, decay: S) -> Result<Self> {
        let s = Self { delta0, decay };
        s.validate()?;
        Ok(s)
    }

    pub fn at(&self, k: usize) -> S {
        self.delta0 * self.decay.powi(k.min(i32::MAX as usize) as i32)
    }

    /// `Σ δ_k = δ0 / (1 - decay)`.
    pub fn total(&self) -> S {
        self.delta0 / (S::one() - self.decay)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta0.is_finite() && self.delta0 >= S::zero()) {
            return Err(Error::InvalidParameter {
                name: "delta0",
                value: self.delta0.to_f64_lossy(),
                reason: "must be >= 0",
            });
        }
        if !(self.decay > S::zero() && self.decay < S::one()) {
            return Err(Error::InvalidParameter {
                name: "decay",
                value: self.decay.to_f64_lossy(),
                reason: "must lie in the open interval (0, 1)",
            });
        }
        Ok(())
    }
}

pub fn validate_gamma<S: Scalar>(gamma: S) -> Result<()> {
    if gamma > S::zero() && gamma < S::lit(2.0) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "gamma",
            value: gamma.to_f64_lossy(),
            reason: "relaxation factor must lie in the open interval (0, 2)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GppaConfig<S: Scalar> {
    pub gamma: S,
    pub c_schedule: CSchedule<S>,
    /// `None` runs the exact scheme.
    pub delta_schedule: Option<DeltaSchedule<S>>,
    pub max_iter: usize,
    pub residual_tol: S,
    pub seed: u64,
    /// Records keep full vectors only when the dimension is at most this.
    pub max_stored_dim: usize,
}

impl<S: Scalar> GppaConfig<S> {
    pub fn new(gamma: S, c_schedule: CSchedule<S>) -> Self {
        Self {
            gamma,
            c_schedule,
            delta_schedule: None,
            max_iter: 1000,
            residual_tol: S::lit(1e-10),
            seed: 0,
            max_stored_dim: 64,
        }
    }

    pub fn with_delta(mut self, delta: DeltaSchedule<S>) -> Self {
        self.delta_schedule = Some(delta);
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_residual_tol(mut self, tol: S) -> Self {
        self.residual_tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_stored_dim(mut self, dim: usize) -> Self {
        self.max_stored_dim = dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_gamma(self.gamma)?;
        self.c_schedule.validate()?;
        ensure_positive("kappa", self.c_schedule.lower_bound())?;
        if let Some(d) = &self.delta_schedule {
            d.validate()?;
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        ensure_positive("residual_tol", self.residual_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord<S: Scalar> {
    pub k: usize,
    /// `z^k`, when vectors are stored.
    pub z: Option<DVector<S>>,
    /// `J_{c_k T}(z^k)`, when vectors are stored.
    pub z_tilde: Option<DVector<S>>,
    /// Inexact candidate, inexact runs only.
    pub z_bar: Option<DVector<S>>,
    pub z_norm: S,
    pub c_k: S,
    pub delta_k: Option<S>,
    /// `|z^k - z̃^k|`.
    pub residual: S,
    /// `|z̄^k - z̃^k|` for inexact runs.
    pub inexact_error: Option<S>,
    /// `|z^k - z^{k+1}|`; zero on a terminal record.
    pub step_length: S,
    pub dist_to_zero: Option<S>,
    /// `|z^{k+1} - z*| / |z^k - z*|`, above the floating-point floor only.
    pub step_ratio: Option<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Termination {
    Converged,
    MaxIter,
    NumericalFailure(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace<S: Scalar> {
    pub records: Vec<IterationRecord<S>>,
    pub termination: Termination,
    pub config: GppaConfig<S>,
    /// Last iterate produced (the `z` of a converged terminal record, or `z^{max_iter}`).
    pub final_iterate: DVector<S>,
    pub final_dist: Option<S>,
}

impl<S: Scalar> IterationTrace<S> {
    /// `z^0, z^1, ..., final`, when vectors were stored.
    pub fn iterates(&self) -> Option<Vec<DVector<S>>> {
        let mut out: Vec<DVector<S>> = Vec::with_capacity(self.records.len() + 1);
        for r in &self.records {
            out.push(r.z.clone()?);
        }
        if self.termination != Termination::Converged || out.is_empty() {
            out.push(self.final_iterate.clone());
        }
        Some(out)
    }

    /// Distances to the known zero, including the final iterate.
    pub fn distances(&self) -> Option<Vec<S>> {
        let mut out = Vec::with_capacity(self.records.len() + 1);
        for r in &self.records {
            out.push(r.dist_to_zero?);
        }
        if self.termination != Termination::Converged || out.is_empty() {
            out.push(self.final_dist?);
        }
        Some(out)
    }

    /// Running sums of `|z^k - z̃^k|^2`.
    pub fn residual_square_partial_sums(&self) -> Vec<S> {
        let mut acc = S::zero();
        self.records
            .iter()
            .map(|r| {
                acc += r.residual * r.residual;
                acc
            })
            .collect()
    }

    pub fn is_failure(&self) -> bool {
        matches!(self.termination, Termination::NumericalFailure(_))
    }
}

/// Floating-point floor below which distances are not used in ratios.
pub fn distance_floor<S: Scalar>(z_star: &DVector<S>) -> S {
    S::lit(100.0) * S::machine_eps() * (S::one() + z_star.norm())
}

/// `|z^k - z̃^k| / max(c_k, κ) <= tol (1 + |z^k|)`.
pub fn residual_stop<S: Scalar>(record: &IterationRecord<S>, tol: S, kappa: S) -> bool {
    record.residual / record.c_k.max(kappa) <= tol * (S::one() + record.z_norm)
}

/// One exact step; returns `(z_next, z_tilde)`. With `γ = 1` the next iterate
/// is the resolvent output itself.
pub fn step_exact<S: Scalar, T: MonotoneOperator<S> + ?Sized>(
    op: &T,
    c_k: S,
    gamma: S,
    z: &DVector<S>,
) -> Result<(DVector<S>, DVector<S>)> {
    validate_gamma(gamma)?;
    let z_tilde = op.resolvent(c_k, z)?;
    let z_next = relax(gamma, z, &z_tilde);
    ensure_finite_vec(&z_next, "exact step")?;
    Ok((z_next, z_tilde))
}

type Vectors<S> = Vec<DVector<S>>;

/// `iters` exact steps with no stopping test; returns `z^0..=z^iters` and
/// the resolvent outputs `z̃^0..z̃^{iters-1}`.
pub(crate) fn exact_sequence<S: Scalar, T: MonotoneOperator<S> + ?Sized>(
    op: &T,
    c_schedule: &CSchedule<S>,
    gamma: S,
    z0: &DVector<S>,
    iters: usize,
) -> Result<(Vectors<S>, Vectors<S>)> {
    let mut zs = Vec::with_capacity(iters + 1);
    let mut tildes = Vec::with_capacity(iters);
    zs.push(z0.clone());
    for k in 0..iters {
        let (next, tilde) = step_exact(op, c_schedule.at(k), gamma, &zs[k])?;
        zs.push(next);
        tildes.push(tilde);
    }
    Ok((zs, tildes))
}

/// Source of the inexact candidate `z̄` given the exact resolvent value.
///
/// This is the hook for inner solvers; the shipped implementation perturbs the
/// exact value in a controlled way.
pub trait InexactOracle<S: Scalar> {
    fn approximate(&mut self, z: &DVector<S>, z_tilde: &DVector<S>, gamma: S, delta: S) -> DVector<S>;
}

/// `z̄ = z̃ + e` with `e` a seeded random direction of length
/// `η γ δ |z - z̃| / (1 + γ δ)`, which always satisfies the relative criterion.
/// A perturbation too small to survive rounding against `z̃` is dropped;
/// otherwise the rounding error could eat the `1 - η` margin.
#[derive(Debug, Clone)]
pub struct ControlledPerturbation {
    sampler: Sampler,
    eta: f64,
}

impl ControlledPerturbation {
    pub const DEFAULT_ETA: f64 = 0.9;

    pub fn new(seed: u64) -> Self {
        Self {
            sampler: Sampler::new(seed),
            eta: Self::DEFAULT_ETA,
        }
    }

    /// `eta` must lie in `[0, 1)`.
    pub fn with_eta(seed: u64, eta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: eta,
                reason: "must lie in [0, 1)",
            });
        }
        Ok(Self {
            sampler: Sampler::new(seed),
            eta,
        })
    }
}

impl<S: Scalar> InexactOracle<S> for ControlledPerturbation {
    fn approximate(&mut self, z: &DVector<S>, z_tilde: &DVector<S>, gamma: S, delta: S) -> DVector<S> {
        let gd = gamma * delta;
        let size = S::lit(self.eta) * gd * (z - z_tilde).norm() / (S::one() + gd);
        if size <= S::lit(64.0) * S::machine_eps() * z_tilde.norm() || size == S::zero() {
            return z_tilde.clone();
        }
        z_tilde + self.sampler.unit_vector::<S>(z.len()) * size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InexactStep<S: Scalar> {
    pub z_next: DVector<S>,
    pub z_tilde: DVector<S>,
    pub z_bar: DVector<S>,
}

/// One inexact step. The accuracy criterion is checked after the fact using
/// `z - z⁺ = γ (z - z̄)`; a violation is returned as an error.
pub fn step_inexact<S: Scalar, T: MonotoneOperator<S> + ?Sized>(
    op: &T,
    c_k: S,
    gamma: S,
    delta_k: S,
    z: &DVector<S>,
    oracle: &mut dyn InexactOracle<S>,
) -> Result<InexactStep<S>> {
    validate_gamma(gamma)?;
    if !(delta_k.is_finite() && delta_k >= S::zero()) {
        return Err(Error::InvalidParameter {
            name: "delta_k",
            value: delta_k.to_f64_lossy(),
            reason: "must be >= 0",
        });
    }
    let z_tilde = op.resolvent(c_k, z)?;
    let z_bar = oracle.approximate(z, &z_tilde, gamma, delta_k);
    ensure_dim(&z_bar, z.len())?;
    ensure_finite_vec(&z_bar, "inexact candidate")?;
    let z_next = relax(gamma, z, &z_bar);
    ensure_finite_vec(&z_next, "inexact step")?;

    let error = (&z_bar - &z_tilde).norm();
    let bound = delta_k * gamma * (z - &z_bar).norm();
    if error > bound {
        return Err(Error::CriterionViolated {
            k: 0,
            error: error.to_f64_lossy(),
            bound: bound.to_f64_lossy(),
        });
    }
    Ok(InexactStep {
        z_next,
        z_tilde,
        z_bar,
    })
}

struct StepOutput<S: Scalar> {
    z_next: DVector<S>,
    z_tilde: DVector<S>,
    z_bar: Option<DVector<S>>,
}

fn drive<S, T, F>(op: &T, config: &GppaConfig<S>, z0: &DVector<S>, mut step: F) -> Result<IterationTrace<S>>
where
    S: Scalar,
    T: MonotoneOperator<S> + ?Sized,
    F: FnMut(S, Option<S>, &DVector<S>) -> Result<StepOutput<S>>,
{
    config.validate()?;
    ensure_dim(z0, op.dim())?;
    ensure_finite_vec(z0, "initial point")?;

    let store = op.dim() <= config.max_stored_dim;
    let kappa = config.c_schedule.lower_bound();
    let z_star = op.known_zero().cloned();
    let floor = z_star.as_ref().map(distance_floor);
    let dist = |z: &DVector<S>| z_star.as_ref().map(|zs| (z - zs).norm());

    let mut records = Vec::new();
    let mut termination = Termination::MaxIter;
    let mut z = z0.clone();

    for k in 0..config.max_iter {
        let c_k = config.c_schedule.at(k);
        let delta_k = config.delta_schedule.as_ref().map(|d| d.at(k));
        let out = match step(c_k, delta_k, &z) {
            Ok(out) => out,
            Err(Error::CriterionViolated { error, bound, .. }) => {
                termination = Termination::NumericalFailure(
                    Error::CriterionViolated { k, error, bound }.to_string(),
                );
                break;
            }
            Err(e) if e.is_numerical() => {
                termination = Termination::NumericalFailure(format!("iteration {k}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };

        let residual = (&z - &out.z_tilde).norm();
        let dist_k = dist(&z);
        let mut record = IterationRecord {
            k,
            z: store.then(|| z.clone()),
            z_tilde: store.then(|| out.z_tilde.clone()),
            z_bar: if store { out.z_bar.clone() } else { None },
            z_norm: z.norm(),
            c_k,
            delta_k,
            residual,
            inexact_error: out.z_bar.as_ref().map(|zb| (zb - &out.z_tilde).norm()),
            step_length: S::zero(),
            dist_to_zero: dist_k,
            step_ratio: None,
        };

        if residual_stop(&record, config.residual_tol, kappa) {
            records.push(record);
            termination = Termination::Converged;
            break;
        }

        record.step_length = (&z - &out.z_next).norm();
        if let (Some(d), Some(fl), Some(d_next)) = (dist_k, floor, dist(&out.z_next)) {
            if d > fl {
                record.step_ratio = Some(d_next / d);
            }
        }
        records.push(record);
        z = out.z_next;
    }

    let final_dist = dist(&z);
    Ok(IterationTrace {
        records,
        termination,
        config: config.clone(),
        final_iterate: z,
        final_dist,
    })
}

/// Runs the exact scheme until the scaled residual test passes or `max_iter`.
pub fn run_exact_gppa<S: Scalar, T: MonotoneOperator<S> + ?Sized>(
    op: &T,
    config: &GppaConfig<S>,
    z0: &DVector<S>,
) -> Result<IterationTrace<S>> {
    if config.delta_schedule.is_some() {
        return Err(Error::Config(
            "exact run requested with an inexactness schedule".into(),
        ));
    }
    let gamma = config.gamma;
    drive(op, config, z0, |c_k, _, z| {
        let (z_next, z_tilde) = step_exact(op, c_k, gamma, z)?;
        Ok(StepOutput {
            z_next,
            z_tilde,
            z_bar: None,
        })
    })
}

/// Runs the inexact scheme with [`ControlledPerturbation`] seeded from the config.
pub fn run_inexact_gppa<S: Scalar, T: MonotoneOperator<S> + ?Sized>(
    op: &T,
    config: &GppaConfig<S>,
    z0: &DVector<S>,
) -> Result<IterationTrace<S>> {
    let mut oracle = ControlledPerturbation::new(config.seed);
    run_inexact_gppa_with(op, config, z0, &mut oracle)
}

pub fn run_inexact_gppa_with<S: Scalar, T: MonotoneOperator<S> + ?Sized>(
    op: &T,
    config: &GppaConfig<S>,
    z0: &DVector<S>,
    oracle: &mut dyn InexactOracle<S>,
) -> Result<IterationTrace<S>> {
    if config.delta_schedule.is_none() {
        return Err(Error::Config(
            "inexact run requested without an inexactness schedule".into(),
        ));
    }
    let gamma = config.gamma;
    drive(op, config, z0, |c_k, delta_k, z| {
        let delta = delta_k.unwrap_or_else(S::zero);
        let s = step_inexact(op, c_k, gamma, delta, z, oracle)?;
        Ok(StepOutput {
            z_next: s.z_next,
            z_tilde: s.z_tilde,
            z_bar: Some(s.z_bar),
        })
    })
}

/// Dispatches on the presence of an inexactness schedule.
pub fn run_gppa<S: Scalar, T: MonotoneOperator<S> + ?Sized>(
    op: &T,
    config: &GppaConfig<S>,
    z0: &DVector<S>,
) -> Result<IterationTrace<S>> {
    if config.delta_schedule.is_some() {
        run_inexact_gppa(op, config, z0)
    } else {
        run_exact_gppa(op, config, z0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{AffineOperator, RotationOperator};
    use nalgebra::DMatrix;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn rotation() -> RotationOperator<f64> {
        RotationOperator::new(1.0).unwrap()
    }

    #[test]
    fn exact_step_examples() {
        let op = rotation();
        let (next, tilde) = step_exact(&op, 1.0, 1.0, &v(&[1.0, 0.0])).unwrap();
        assert_eq!(next, tilde);
        assert!((next - v(&[0.5, 0.5])).norm() < 1e-15);

        let (next, _) = step_exact(&op, 1.0, 1.5, &v(&[1.0, 0.0])).unwrap();
        assert!((next - v(&[0.25, 0.75])).norm() < 1e-15);

        for &g in &[0.1, 1.0, 1.99] {
            let (next, _) = step_exact(&op, 3.0, g, &v(&[0.0, 0.0])).unwrap();
            assert_eq!(next, v(&[0.0, 0.0]));
        }
    }

    #[test]
    fn gamma_outside_open_interval_rejected() {
        let op = rotation();
        for &g in &[0.0, 2.0, -0.5, 2.5, f64::NAN] {
            assert!(step_exact(&op, 1.0, g, &v(&[1.0, 0.0])).is_err());
            assert!(GppaConfig::new(g, CSchedule::Constant(1.0)).validate().is_err());
        }
    }

    #[test]
    fn schedules() {
        let c = CSchedule::Geometric { c0: 0.5, ratio: 2.0 };
        assert_eq!(c.at(0), 0.5);
        assert_eq!(c.at(3), 4.0);
        assert_eq!(c.lower_bound(), 0.5);
        assert!(CSchedule::Geometric { c0: 1.0, ratio: 0.5 }.validate().is_err());

        let l = CSchedule::List(vec![2.0, 0.5, 3.0]);
        assert_eq!(l.at(1), 0.5);
        assert_eq!(l.at(10), 3.0);
        assert_eq!(l.lower_bound(), 0.5);
        assert!(CSchedule::<f64>::List(vec![]).validate().is_err());
        assert!(CSchedule::List(vec![1.0, 0.0]).validate().is_err());
        assert!(CSchedule::Constant(-1.0).validate().is_err());

        let d = DeltaSchedule::<f64>::new(0.5, 0.9).unwrap();
        assert!((d.total() - 5.0).abs() < 1e-14);
        assert!((d.at(2) - 0.405).abs() < 1e-15);
        assert!(DeltaSchedule::new(0.5, 1.0).is_err());
        assert!(DeltaSchedule::new(-0.1, 0.5).is_err());
    }

    #[test]
    fn rotation_run_decays_geometrically() {
        let op = rotation();
        let cfg = GppaConfig::new(1.0, CSchedule::Constant(1.0))
            .with_max_iter(50)
            .with_residual_tol(1e-300);
        let trace = run_exact_gppa(&op, &cfg, &v(&[1.0, 0.0])).unwrap();
        assert_eq!(trace.termination, Termination::MaxIter);
        assert_eq!(trace.records.len(), 50);
        for r in &trace.records {
            let expected = (0.5f64).sqrt().powi(r.k as i32);
            assert!((r.z_norm - expected).abs() <= 1e-10 * expected);
        }
        let expected = 0.5f64.powi(25);
        assert!((trace.final_iterate.norm() - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn start_at_zero_converges_immediately() {
        let op = rotation();
        let cfg = GppaConfig::new(1.3, CSchedule::Constant(2.0));
        let trace = run_exact_gppa(&op, &cfg, &v(&[0.0, 0.0])).unwrap();
        assert_eq!(trace.termination, Termination::Converged);
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].k, 0);
        assert_eq!(trace.records[0].residual, 0.0);
    }

    #[test]
    fn affine_run_thirds() {
        let op = AffineOperator::new(DMatrix::from_element(1, 1, 2.0), v(&[0.0])).unwrap();
        let cfg = GppaConfig::new(1.0, CSchedule::Constant(1.0))
            .with_max_iter(20)
            .with_residual_tol(1e-300);
        let trace = run_exact_gppa(&op, &cfg, &v(&[1.0])).unwrap();
        for r in &trace.records {
            let expected = (1.0f64 / 3.0).powi(r.k as i32);
            assert!((r.z.as_ref().unwrap()[0] - expected).abs() <= 1e-14 * expected);
        }
    }

    #[test]
    fn residual_stop_thresholds() {
        let op = rotation();
        let cfg = GppaConfig::new(1.0, CSchedule::Constant(1.0));
        let trace = run_exact_gppa(&op, &cfg.clone().with_max_iter(1), &v(&[1.0, 0.0])).unwrap();
        let mut rec = trace.records[0].clone();
        rec.residual = 0.0;
        assert!(residual_stop(&rec, 1e-10, 1.0));
        let tol = 1e-6;
        rec.residual = tol * rec.c_k * (1.0 + rec.z_norm) * 2.0;
        assert!(!residual_stop(&rec, tol, 1.0));

        let trace = run_exact_gppa(&op, &cfg.with_residual_tol(1e-10), &v(&[1.0, 0.0])).unwrap();
        assert_eq!(trace.termination, Termination::Converged);
        assert!(trace.records.len() <= 80, "{}", trace.records.len());
    }

    #[test]
    fn inexact_with_zero_delta_matches_exact() {
        let op = rotation();
        let base = GppaConfig::new(1.4, CSchedule::Constant(0.7))
            .with_max_iter(60)
            .with_residual_tol(1e-300);
        let exact = run_exact_gppa(&op, &base, &v(&[1.0, 2.0])).unwrap();
        for seed in [1, 99] {
            let cfg = base
                .clone()
                .with_seed(seed)
                .with_delta(DeltaSchedule::new(0.0, 0.5).unwrap());
            let inexact = run_inexact_gppa(&op, &cfg, &v(&[1.0, 2.0])).unwrap();
            assert_eq!(exact.records.len(), inexact.records.len());
            for (a, b) in exact.records.iter().zip(&inexact.records) {
                assert_eq!(a.z, b.z);
                assert_eq!(a.z_tilde, b.z_tilde);
            }
            assert_eq!(exact.final_iterate, inexact.final_iterate);
        }
    }

    #[test]
    fn inexact_step_at_zero_is_fixed() {
        let op = rotation();
        let mut oracle = ControlledPerturbation::new(3);
        let s = step_inexact(&op, 1.0, 1.0, 0.4, &v(&[0.0, 0.0]), &mut oracle).unwrap();
        assert_eq!(s.z_next, v(&[0.0, 0.0]));
        assert_eq!(s.z_bar, s.z_tilde);
    }

    #[test]
    fn perturbation_below_rounding_is_dropped() {
        let mut oracle = ControlledPerturbation::new(0);
        let zt = v(&[1.0, -2.0]);
        let z = &zt + v(&[1e-14, 0.0]);
        let out: DVector<f64> = oracle.approximate(&z, &zt, 1.0, 1e-3);
        assert_eq!(out, zt);
        let z = &zt + v(&[1e-3, 0.0]);
        let out: DVector<f64> = oracle.approximate(&z, &zt, 1.0, 0.5);
        assert_ne!(out, zt);
    }

    #[test]
    fn inexact_criterion_violation_is_reported() {
        struct Sloppy;
        impl InexactOracle<f64> for Sloppy {
            fn approximate(&mut self, _z: &DVector<f64>, zt: &DVector<f64>, _g: f64, _d: f64) -> DVector<f64> {
                zt.add_scalar(1.0)
            }
        }
        let op = rotation();
        let err = step_inexact(&op, 1.0, 1.0, 0.01, &v(&[1.0, 0.0]), &mut Sloppy).unwrap_err();
        assert!(matches!(err, Error::CriterionViolated { .. }));

        let cfg = GppaConfig::new(1.0, CSchedule::Constant(1.0)).with_delta(DeltaSchedule::new(0.01, 0.5).unwrap());
        let trace = run_inexact_gppa_with(&op, &cfg, &v(&[1.0, 0.0]), &mut Sloppy).unwrap();
        assert!(trace.is_failure());
    }

    #[test]
    fn mode_mismatch_rejected() {
        let op = rotation();
        let exact = GppaConfig::new(1.0, CSchedule::Constant(1.0));
        let inexact = exact.clone().with_delta(DeltaSchedule::new(0.1, 0.5).unwrap());
        assert!(run_exact_gppa(&op, &inexact, &v(&[1.0, 0.0])).is_err());
        assert!(run_inexact_gppa(&op, &exact, &v(&[1.0, 0.0])).is_err());
        assert!(matches!(
            run_exact_gppa(&op, &exact, &v(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn large_dimension_keeps_norms_only() {
        let n = 70;
        let op = AffineOperator::new(DMatrix::identity(n, n), DVector::zeros(n)).unwrap();
        let cfg = GppaConfig::new(1.0, CSchedule::Constant(1.0)).with_max_iter(5);
        let trace = run_exact_gppa(&op, &cfg, &DVector::from_element(n, 1.0)).unwrap();
        assert!(trace.records.iter().all(|r| r.z.is_none() && r.z_tilde.is_none()));
        assert!(trace.records.iter().all(|r| r.dist_to_zero.is_some()));
        assert!(trace.iterates().is_none());
    }
}

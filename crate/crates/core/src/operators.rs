//! Monotone operators given through their resolvents.
//!
//! Every algorithm in this crate consumes an operator `T` only through its
//! resolvent `J_{cT} = (I + cT)^{-1}`. The forward map, a known zero and the
//! modulus `a` of Lipschitz continuity of `T^{-1}` at zero are optional
//! capabilities used by diagnostics.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_dim, ensure_finite_mat, ensure_finite_vec, ensure_positive, ensure_square, lu_solve,
    min_singular_value, symmetric_part_extremes,
};
use crate::sampling::Sampler;
use crate::scalar::Scalar;

/// A maximal monotone operator on `R^dim`.
///
/// Implementors provide [`MonotoneOperator::eval_resolvent`]; callers should go
/// through [`MonotoneOperator::resolvent`], which validates the inputs and the
/// output.
pub trait MonotoneOperator<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    /// `J_{cT}(z)` without input validation.
    fn eval_resolvent(&self, c: S, z: &DVector<S>) -> Result<DVector<S>>;

    /// `T(z)`, for single-valued operators.
    fn forward(&self, _z: &DVector<S>) -> Option<DVector<S>> {
        None
    }

    /// A point `z*` with `0 ∈ T(z*)`.
    fn known_zero(&self) -> Option<&DVector<S>> {
        None
    }

    /// Modulus `a` with `|z - z*| <= a |w|` for `w ∈ T(z)` near zero.
    fn inverse_lipschitz_modulus(&self) -> Option<S> {
        None
    }

    fn resolvent(&self, c: S, z: &DVector<S>) -> Result<DVector<S>> {
        ensure_positive("c", c)?;
        ensure_dim(z, self.dim())?;
        ensure_finite_vec(z, "resolvent input")?;
        let x = self.eval_resolvent(c, z)?;
        ensure_dim(&x, self.dim())?;
        ensure_finite_vec(&x, "resolvent output")?;
        Ok(x)
    }
}

pub type OperatorHandle<S> = Arc<dyn MonotoneOperator<S>>;

impl<S: Scalar, T: MonotoneOperator<S> + ?Sized> MonotoneOperator<S> for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_resolvent(&self, c: S, z: &DVector<S>) -> Result<DVector<S>> {
        (**self).eval_resolvent(c, z)
    }
    fn forward(&self, z: &DVector<S>) -> Option<DVector<S>> {
        (**self).forward(z)
    }
    fn known_zero(&self) -> Option<&DVector<S>> {
        (**self).known_zero()
    }
    fn inverse_lipschitz_modulus(&self) -> Option<S> {
        (**self).inverse_lipschitz_modulus()
    }
}

/// Checked resolvent evaluation.
pub fn resolvent<S: Scalar, T: MonotoneOperator<S> + ?Sized>(op: &T, c: S, z: &DVector<S>) -> Result<DVector<S>> {
    op.resolvent(c, z)
}

/// The skew operator `T(x1, x2) = (x2, -x1) / a` on `R^2`.
///
/// `T` is monotone but not strongly monotone, `T^{-1}` is Lipschitz at zero with
/// modulus `a`, and the resolvent contracts towards the origin by exactly
/// `a / sqrt(a^2 + c^2)`.
#[derive(Debug, Clone)]
pub struct RotationOperator<S: Scalar> {
    a: S,
    zero: DVector<S>,
}

impl<S: Scalar> RotationOperator<S> {
    pub fn new(a: S) -> Result<Self> {
        ensure_positive("a", a)?;
        Ok(Self {
            a,
            zero: DVector::zeros(2),
        })
    }

    pub fn a(&self) -> S {
        self.a
    }

    /// The matrix of `T`, i.e. `[[0, 1], [-1, 0]] / a`.
    pub fn matrix(&self) -> DMatrix<S> {
        let inv = S::one() / self.a;
        DMatrix::from_row_slice(2, 2, &[S::zero(), inv, -inv, S::zero()])
    }
}

impl<S: Scalar> MonotoneOperator<S> for RotationOperator<S> {
    fn dim(&self) -> usize {
        2
    }

    fn eval_resolvent(&self, c: S, z: &DVector<S>) -> Result<DVector<S>> {
        // (I + tK)^{-1} = (I - tK) / (1 + t^2) with K = [[0, 1], [-1, 0]], t = c / a.
        let t = c / self.a;
        let scale = S::one() / (S::one() + t * t);
        Ok(DVector::from_vec(vec![
            (z[0] - t * z[1]) * scale,
            (z[1] + t * z[0]) * scale,
        ]))
    }

    fn forward(&self, z: &DVector<S>) -> Option<DVector<S>> {
        Some(DVector::from_vec(vec![z[1] / self.a, -z[0] / self.a]))
    }

    fn known_zero(&self) -> Option<&DVector<S>> {
        Some(&self.zero)
    }

    fn inverse_lipschitz_modulus(&self) -> Option<S> {
        Some(self.a)
    }
}

pub fn make_rotation_operator<S: Scalar>(a: S) -> Result<RotationOperator<S>> {
    RotationOperator::new(a)
}

/// Tolerance on the smallest eigenvalue of `(G + Gᵀ)/2` accepted as monotone.
pub const MONOTONICITY_TOL: f64 = -1e-10;

/// The affine map `z ↦ G z + h` with `G + Gᵀ ⪰ 0`.
#[derive(Debug, Clone)]
pub struct AffineOperator<S: Scalar> {
    g: DMatrix<S>,
    h: DVector<S>,
    zero: Option<DVector<S>>,
    modulus: Option<S>,
}

impl<S: Scalar> AffineOperator<S> {
    /// Validates monotonicity eagerly. When `G` is invertible the zero
    /// `-G^{-1} h` and the modulus `1 / σ_min(G)` are filled in.
    pub fn new(g: DMatrix<S>, h: DVector<S>) -> Result<Self> {
        ensure_square(&g)?;
        ensure_dim(&h, g.nrows())?;
        if g.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        ensure_finite_mat(&g, "affine operator matrix")?;
        ensure_finite_vec(&h, "affine operator offset")?;

        let (lo, hi) = symmetric_part_extremes(&g);
        if lo < S::lit(MONOTONICITY_TOL) {
            return Err(Error::NotMonotone {
                min_eigenvalue: lo.to_f64_lossy(),
            });
        }

        let sigma_min = min_singular_value(&g);
        let scale = hi.abs().max(g.norm()).max(S::one());
        let (zero, modulus) = if sigma_min > S::machine_eps() * S::lit(1e4) * scale {
            let z = lu_solve(&g, &(-&h)).ok();
            (z, Some(S::one() / sigma_min))
        } else {
            (None, None)
        };
        Ok(Self { g, h, zero, modulus })
    }

    pub fn with_known_zero(mut self, zero: DVector<S>) -> Result<Self> {
        ensure_dim(&zero, self.g.nrows())?;
        ensure_finite_vec(&zero, "known zero")?;
        self.zero = Some(zero);
        Ok(self)
    }

    pub fn with_inverse_lipschitz_modulus(mut self, a: S) -> Result<Self> {
        ensure_positive("a", a)?;
        self.modulus = Some(a);
        Ok(self)
    }

    pub fn matrix(&self) -> &DMatrix<S> {
        &self.g
    }

    pub fn offset(&self) -> &DVector<S> {
        &self.h
    }
}

impl<S: Scalar> MonotoneOperator<S> for AffineOperator<S> {
    fn dim(&self) -> usize {
        self.g.nrows()
    }

    fn eval_resolvent(&self, c: S, z: &DVector<S>) -> Result<DVector<S>> {
        let n = self.dim();
        let lhs = DMatrix::identity(n, n) + &self.g * c;
        let rhs = z - &self.h * c;
        lu_solve(&lhs, &rhs)
    }

    fn forward(&self, z: &DVector<S>) -> Option<DVector<S>> {
        Some(&self.g * z + &self.h)
    }

    fn known_zero(&self) -> Option<&DVector<S>> {
        self.zero.as_ref()
    }

    fn inverse_lipschitz_modulus(&self) -> Option<S> {
        self.modulus
    }
}

pub fn make_affine_operator<S: Scalar>(g: DMatrix<S>, h: DVector<S>) -> Result<AffineOperator<S>> {
    AffineOperator::new(g, h)
}

/// Splits `z = x + c y` with `x = J_{cT}(z)` and `y = (z - x) / c ∈ T(x)`.
pub fn representation_decompose<S: Scalar, T: MonotoneOperator<S> + ?Sized>(
    op: &T,
    c: S,
    z: &DVector<S>,
) -> Result<(DVector<S>, DVector<S>)> {
    let x = op.resolvent(c, z)?;
    let y = (z - &x) / c;
    if let Some(tx) = op.forward(&x) {
        let gap = (&y - tx).norm();
        if gap > S::tol(1e-9) * (S::one() + y.norm()) {
            return Err(Error::RepresentationMismatch {
                gap: gap.to_f64_lossy(),
            });
        }
    }
    Ok((x, y))
}

/// Margins of the two firm-nonexpansiveness inequalities at one pair:
/// `⟨Jz - Jz', (I-J)z - (I-J)z'⟩` and
/// `|z - z'|^2 - |Jz - Jz'|^2 - |(I-J)z - (I-J)z'|^2`.
pub fn firm_nonexpansive_margins<S: Scalar, T: MonotoneOperator<S> + ?Sized>(
    op: &T,
    c: S,
    z: &DVector<S>,
    z_other: &DVector<S>,
) -> Result<(S, S)> {
    let jz = op.resolvent(c, z)?;
    let jw = op.resolvent(c, z_other)?;
    let dj = &jz - &jw;
    let dr = (z - &jz) - (z_other - &jw);
    let dz = z - z_other;
    let inner = dj.dot(&dr);
    let energy = dz.norm_squared() - dj.norm_squared() - dr.norm_squared();
    Ok((inner, energy))
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport<S: Scalar> {
    pub seed: u64,
    pub samples: usize,
    pub c: S,
    pub worst_inner_margin: S,
    pub worst_energy_margin: S,
    pub worst_nonexpansive_margin: S,
    pub violations: usize,
    pub passed: bool,
}

/// Samples pairs from the ball of radius 10 and checks that `J_{cT}` is firmly
/// nonexpansive up to `1e-10`. Failures are reported, not raised.
pub fn check_firm_nonexpansive<S: Scalar, T: MonotoneOperator<S> + ?Sized>(
    op: &T,
    c: S,
    sample_count: usize,
    seed: u64,
) -> Result<PropertyReport<S>> {
    let mut sampler = Sampler::new(seed);
    let origin = DVector::<S>::zeros(op.dim());
    let radius = S::lit(10.0);
    let eps_floor = S::machine_eps() * S::lit(100.0);
    let big = S::max_value().unwrap();
    let mut report = PropertyReport {
        seed,
        samples: sample_count,
        c,
        worst_inner_margin: big,
        worst_energy_margin: big,
        worst_nonexpansive_margin: big,
        violations: 0,
        passed: true,
    };
    for _ in 0..sample_count {
        let z = sampler.point_in_ball(&origin, radius);
        let w = sampler.point_in_ball(&origin, radius);
        let (inner, energy) = firm_nonexpansive_margins(op, c, &z, &w)?;
        let dz = (&z - &w).norm();
        let nonexp = dz - (op.resolvent(c, &z)? - op.resolvent(c, &w)?).norm();
        // absolute 1e-10, floored at rounding level for low precision scalars
        let tol = S::lit(1e-10).max(eps_floor * (S::one() + dz * dz));
        report.worst_inner_margin = report.worst_inner_margin.min(inner);
        report.worst_energy_margin = report.worst_energy_margin.min(energy);
        report.worst_nonexpansive_margin = report.worst_nonexpansive_margin.min(nonexp);
        if inner < -tol || energy < -tol || nonexp < -tol {
            report.violations += 1;
        }
    }
    report.passed = report.violations == 0;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct RepresentationReport<S: Scalar> {
    pub seed: u64,
    pub samples: usize,
    pub c: S,
    pub worst_reconstruction_error: S,
    pub worst_forward_gap: Option<S>,
    pub violations: usize,
    pub passed: bool,
}

/// Checks `z = x + c y` (relative `1e-12`) and, when a forward map exists,
/// `|y - T(x)| <= 1e-9 (1 + |y|)` on sampled points.
pub fn check_representation_identity<S: Scalar, T: MonotoneOperator<S> + ?Sized>(
    op: &T,
    c: S,
    sample_count: usize,
    seed: u64,
) -> Result<RepresentationReport<S>> {
    let mut sampler = Sampler::new(seed);
    let origin = DVector::<S>::zeros(op.dim());
    let mut report = RepresentationReport {
        seed,
        samples: sample_count,
        c,
        worst_reconstruction_error: S::zero(),
        worst_forward_gap: None,
        violations: 0,
        passed: true,
    };
    for _ in 0..sample_count {
        let z = sampler.point_in_ball(&origin, S::lit(10.0));
        let x = op.resolvent(c, &z)?;
        let y = (&z - &x) / c;
        let rebuilt = &x + &y * c;
        let rel = (&rebuilt - &z).norm() / (S::one() + z.norm());
        report.worst_reconstruction_error = report.worst_reconstruction_error.max(rel);
        let mut bad = rel > S::tol(1e-12);
        if let Some(tx) = op.forward(&x) {
            let gap = (&y - tx).norm() / (S::one() + y.norm());
            let worst = report.worst_forward_gap.map_or(gap, |g| g.max(gap));
            report.worst_forward_gap = Some(worst);
            bad |= gap > S::tol(1e-9);
        }
        if bad {
            report.violations += 1;
        }
    }
    report.passed = report.violations == 0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn rotation_resolvent_closed_form() {
        let op = RotationOperator::new(1.0).unwrap();
        let j = op.resolvent(1.0, &v(&[1.0, 0.0])).unwrap();
        assert!((j - v(&[0.5, 0.5])).norm() < 1e-15);
        let ratio = op.resolvent(1.0, &v(&[1.0, 0.0])).unwrap().norm();
        assert!((ratio - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rotation_fixes_origin_for_any_parameters() {
        for &(a, c) in &[(0.1, 3.0), (2.0, 0.01), (7.0, 7.0)] {
            let op = RotationOperator::new(a).unwrap();
            assert_eq!(op.resolvent(c, &v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
        }
    }

    #[test]
    fn rotation_rejects_bad_modulus() {
        assert!(matches!(RotationOperator::new(0.0), Err(Error::NonPositive { .. })));
        assert!(RotationOperator::new(-1.0).is_err());
        assert!(RotationOperator::new(f64::NAN).is_err());
    }

    #[test]
    fn resolvent_validates_inputs() {
        let op = RotationOperator::new(1.0).unwrap();
        assert!(matches!(
            op.resolvent(1.0, &v(&[1.0, 2.0, 3.0])),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
        assert!(matches!(op.resolvent(0.0, &v(&[1.0, 0.0])), Err(Error::NonPositive { .. })));
        assert!(matches!(op.resolvent(-2.0, &v(&[1.0, 0.0])), Err(Error::NonPositive { .. })));
        assert!(matches!(
            op.resolvent(1.0, &v(&[f64::NAN, 0.0])),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn affine_identity_halves() {
        let op = AffineOperator::new(DMatrix::identity(3, 3), DVector::zeros(3)).unwrap();
        let z = v(&[1.0, -4.0, 2.5]);
        assert_eq!(op.resolvent(1.0, &z).unwrap(), &z / 2.0);
    }

    #[test]
    fn affine_diagonal_zero_and_fixed_point() {
        let op = AffineOperator::new(DMatrix::from_element(1, 1, 2.0), v(&[-2.0])).unwrap();
        assert_eq!(op.known_zero().unwrap(), &v(&[1.0]));
        let j = op.resolvent(0.5, &v(&[1.0])).unwrap();
        assert!((j[0] - 1.0).abs() < 1e-15);
        assert!((op.inverse_lipschitz_modulus().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn affine_rejects_non_monotone() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(
            AffineOperator::new(g, DVector::zeros(2)),
            Err(Error::NotMonotone { .. })
        ));
        let skew = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(AffineOperator::new(skew, DVector::zeros(2)).is_ok());
    }

    #[test]
    fn affine_singular_has_no_zero() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let op = AffineOperator::new(g, DVector::zeros(2)).unwrap();
        assert!(op.known_zero().is_none());
        assert!(op.inverse_lipschitz_modulus().is_none());
        // resolvent still well defined
        let j = op.resolvent(1.0, &v(&[2.0, 3.0])).unwrap();
        assert!((j - v(&[1.0, 3.0])).norm() < 1e-15);
    }

    #[test]
    fn decompose_rotation() {
        let op = RotationOperator::new(1.0).unwrap();
        let (x, y) = representation_decompose(&op, 1.0, &v(&[1.0, 0.0])).unwrap();
        assert!((x - v(&[0.5, 0.5])).norm() < 1e-15);
        assert!((y - v(&[0.5, -0.5])).norm() < 1e-15);
    }

    #[test]
    fn decompose_at_zero_and_affine() {
        let op = RotationOperator::new(3.0).unwrap();
        let (x, y) = representation_decompose(&op, 2.0, &v(&[0.0, 0.0])).unwrap();
        assert_eq!(x, v(&[0.0, 0.0]));
        assert_eq!(y, v(&[0.0, 0.0]));

        let op = AffineOperator::new(DMatrix::from_element(1, 1, 2.0), v(&[0.0])).unwrap();
        let (x, y) = representation_decompose(&op, 1.0, &v(&[3.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);
        assert!((y[0] - 2.0).abs() < 1e-15);
    }

    struct Broken;
    impl MonotoneOperator<f64> for Broken {
        fn dim(&self) -> usize {
            1
        }
        fn eval_resolvent(&self, _c: f64, z: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(z * 0.5)
        }
        fn forward(&self, z: &DVector<f64>) -> Option<DVector<f64>> {
            Some(z * 10.0)
        }
    }

    #[test]
    fn decompose_detects_inconsistent_forward_map() {
        assert!(matches!(
            representation_decompose(&Broken, 1.0, &v(&[1.0])),
            Err(Error::RepresentationMismatch { .. })
        ));
    }

    #[test]
    fn identical_pair_has_zero_margins() {
        let op = RotationOperator::new(1.5).unwrap();
        let z = v(&[0.3, -2.0]);
        let (inner, energy) = firm_nonexpansive_margins(&op, 0.7, &z, &z).unwrap();
        assert_eq!(inner, 0.0);
        assert_eq!(energy, 0.0);
    }

    #[test]
    fn firm_nonexpansive_reports_pass() {
        let op = RotationOperator::new(0.4).unwrap();
        for &c in &[0.01, 1.0, 50.0] {
            let r = check_firm_nonexpansive(&op, c, 500, 7).unwrap();
            assert!(r.passed, "{r:?}");
            assert_eq!(r.seed, 7);
        }
    }

    #[test]
    fn firm_nonexpansive_detects_expansive_map() {
        struct Doubling;
        impl MonotoneOperator<f64> for Doubling {
            fn dim(&self) -> usize {
                2
            }
            fn eval_resolvent(&self, _c: f64, z: &DVector<f64>) -> Result<DVector<f64>> {
                Ok(z * 2.0)
            }
        }
        let r = check_firm_nonexpansive(&Doubling, 1.0, 20, 1).unwrap();
        assert!(!r.passed);
        assert_eq!(r.violations, 20);
    }

    #[test]
    fn single_precision_rotation() {
        let op = RotationOperator::<f32>::new(1.0).unwrap();
        let j = op.resolvent(1.0, &DVector::from_vec(vec![1.0f32, 0.0])).unwrap();
        assert!((j[0] - 0.5).abs() < 1e-7 && (j[1] - 0.5).abs() < 1e-7);
        assert!(check_firm_nonexpansive(&op, 2.0f32, 200, 3).unwrap().passed);
    }
}

//! Small dense linear-algebra helpers shared by the operators and solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) fn ensure_dim<S: Scalar>(v: &DVector<S>, expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

pub(crate) fn ensure_finite_vec<S: Scalar>(v: &DVector<S>, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn ensure_finite_mat<S: Scalar>(m: &DMatrix<S>, what: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn ensure_positive<S: Scalar>(name: &'static str, value: S) -> Result<()> {
    if value.is_finite() && value > S::zero() {
        Ok(())
    } else {
        Err(Error::NonPositive {
            name,
            value: value.to_f64_lossy(),
        })
    }
}

pub(crate) fn ensure_square<S: Scalar>(m: &DMatrix<S>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    Ok(())
}

/// Smallest and largest eigenvalue of `(M + Mᵀ)/2`.
pub fn symmetric_part_extremes<S: Scalar>(m: &DMatrix<S>) -> (S, S) {
    let half = S::lit(0.5);
    let sym = (m + m.transpose()) * half;
    let eig = sym.symmetric_eigen();
    let mut lo = eig.eigenvalues[0];
    let mut hi = eig.eigenvalues[0];
    for &e in eig.eigenvalues.iter() {
        if e < lo {
            lo = e;
        }
        if e > hi {
            hi = e;
        }
    }
    (lo, hi)
}

pub fn min_singular_value<S: Scalar>(m: &DMatrix<S>) -> S {
    let sv = m.clone().singular_values();
    sv.iter().copied().fold(S::max_value().unwrap(), |acc, x| if x < acc { x } else { acc })
}

/// Solves `M x = rhs` for symmetric positive definite `M`.
pub(crate) fn spd_solve<S: Scalar>(m: &DMatrix<S>, rhs: &DVector<S>) -> Result<DVector<S>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or(Error::LinearSolve("Cholesky factorization failed"))?;
    let x = chol.solve(rhs);
    ensure_finite_vec(&x, "Cholesky solve")?;
    Ok(x)
}

pub(crate) fn lu_solve<S: Scalar>(m: &DMatrix<S>, rhs: &DVector<S>) -> Result<DVector<S>> {
    let x = m
        .clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::LinearSolve("LU factorization is singular"))?;
    ensure_finite_vec(&x, "LU solve")?;
    Ok(x)
}

pub(crate) fn sup_norm<S: Scalar>(v: &DVector<S>) -> S {
    v.iter().fold(S::zero(), |acc, x| {
        let a = x.abs();
        if a > acc {
            a
        } else {
            acc
        }
    })
}

/// `current - gamma * (current - target)`; returns `target` verbatim when `gamma == 1`.
pub(crate) fn relax<S: Scalar>(gamma: S, current: &DVector<S>, target: &DVector<S>) -> DVector<S> {
    if gamma == S::one() {
        target.clone()
    } else {
        current - (current - target) * gamma
    }
}

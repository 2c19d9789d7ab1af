//! Generalized augmented Lagrangian method for
//! `min ½xᵀQx + qᵀx  s.t.  Ax = b`.
//!
//! Iteration:
//!
//! ```text
//! x⁺ = argmin_x { f(x) - ⟨p, Ax⟩ + (c/2)|Ax - b|² }
//! p⁺ = p - γ c (Ax⁺ - b)
//! ```
//!
//! which is the exact generalized proximal point iteration on the dual
//! operator `S(p) = A ∇f*(Aᵀp) - b`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::engine::{exact_sequence, validate_gamma, CSchedule};
use crate::equivalence::{EquivalenceReport, EQUIVALENCE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    ensure_dim, ensure_finite_mat, ensure_finite_vec, ensure_square, spd_solve, sup_norm,
    symmetric_part_extremes,
};
use crate::operators::{AffineOperator, MonotoneOperator};
use crate::sampling::Sampler;
use crate::scalar::Scalar;

/// Eigenvalue threshold for positive definiteness and full row rank.
pub const DEFINITENESS_TOL: f64 = 1e-10;

/// Objective plus linear constraint, as seen by the multiplier iteration.
///
/// Implement this to run the generalized ALM on a non-quadratic objective;
/// only the x-subproblem solver is needed.
pub trait AugmentedSubproblem<S: Scalar> {
    fn constraint_matrix(&self) -> &DMatrix<S>;
    fn constraint_rhs(&self) -> &DVector<S>;
    /// `argmin_x { f(x) - ⟨p, Ax⟩ + (c/2)|Ax - b|² }`.
    fn minimize_augmented(&self, p: &DVector<S>, c: S) -> Result<DVector<S>>;
    /// A dual solution, when one is known in closed form.
    fn dual_solution(&self) -> Option<DVector<S>> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearlyConstrainedQp<S: Scalar> {
    q_mat: DMatrix<S>,
    q: DVector<S>,
    a: DMatrix<S>,
    b: DVector<S>,
    lipschitz: S,
    aat_min: S,
}

fn check_symmetric<S: Scalar>(m: &DMatrix<S>, name: &'static str) -> Result<()> {
    let asym = (m - m.transpose()).norm();
    if asym > S::tol(1e-10) * (S::one() + m.norm()) {
        return Err(Error::InvalidParameter {
            name,
            value: asym.to_f64_lossy(),
            reason: "matrix must be symmetric",
        });
    }
    Ok(())
}

pub(crate) fn check_spd<S: Scalar>(m: &DMatrix<S>, name: &'static str) -> Result<(S, S)> {
    ensure_square(m)?;
    ensure_finite_mat(m, name)?;
    check_symmetric(m, name)?;
    let (lo, hi) = symmetric_part_extremes(m);
    if lo <= S::lit(DEFINITENESS_TOL) {
        return Err(Error::NotPositiveDefinite {
            name,
            min_eigenvalue: lo.to_f64_lossy(),
        });
    }
    Ok((lo, hi))
}

impl<S: Scalar> LinearlyConstrainedQp<S> {
    pub fn new(q_mat: DMatrix<S>, q: DVector<S>, a: DMatrix<S>, b: DVector<S>) -> Result<Self> {
        let (_, lipschitz) = check_spd(&q_mat, "Q")?;
        let n = q_mat.nrows();
        ensure_dim(&q, n)?;
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.ncols(),
            });
        }
        ensure_dim(&b, a.nrows())?;
        if a.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        ensure_finite_vec(&q, "q")?;
        ensure_finite_mat(&a, "A")?;
        ensure_finite_vec(&b, "b")?;
        let aat = &a * a.transpose();
        let (aat_min, _) = symmetric_part_extremes(&aat);
        if aat_min <= S::lit(DEFINITENESS_TOL) {
            return Err(Error::RankDeficient {
                name: "A",
                min_eigenvalue: aat_min.to_f64_lossy(),
            });
        }
        Ok(Self {
            q_mat,
            q,
            a,
            b,
            lipschitz,
            aat_min,
        })
    }

    /// Seeded well-conditioned instance with `n` variables and `m` constraints.
    pub fn random(n: usize, m: usize, seed: u64) -> Result<Self> {
        let mut s = Sampler::new(seed);
        let q_mat = s.spd_matrix::<S>(n, 0.5);
        let q = s.uniform_vector::<S>(n, -1.0, 1.0);
        let mut a = s.uniform_matrix::<S>(m, n, -1.0, 1.0);
        for _ in 0..100 {
            let (lo, _) = symmetric_part_extremes(&(&a * a.transpose()));
            if lo > S::lit(1e-2) {
                break;
            }
            a = s.uniform_matrix::<S>(m, n, -1.0, 1.0);
        }
        let b = s.uniform_vector::<S>(m, -1.0, 1.0);
        Self::new(q_mat, q, a, b)
    }

    pub fn n(&self) -> usize {
        self.q_mat.nrows()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn hessian(&self) -> &DMatrix<S> {
        &self.q_mat
    }

    pub fn linear(&self) -> &DVector<S> {
        &self.q
    }

    pub fn a(&self) -> &DMatrix<S> {
        &self.a
    }

    pub fn b(&self) -> &DVector<S> {
        &self.b
    }

    /// `L_f = λ_max(Q)`.
    pub fn gradient_lipschitz(&self) -> S {
        self.lipschitz
    }

    /// `λ_min(AAᵀ)`.
    pub fn aat_min_eigenvalue(&self) -> S {
        self.aat_min
    }

    /// Strong-monotonicity modulus `λ_min(AAᵀ) / L_f` of the dual operator.
    pub fn dual_strong_monotonicity(&self) -> S {
        self.aat_min / self.lipschitz
    }

    pub fn gradient(&self, x: &DVector<S>) -> DVector<S> {
        &self.q_mat * x + &self.q
    }

    /// Dual optimum from `AQ⁻¹Aᵀ p = b + AQ⁻¹q`.
    pub fn dual_optimum(&self) -> Result<DVector<S>> {
        let q_inv_at = self
            .q_mat
            .clone()
            .cholesky()
            .ok_or(Error::LinearSolve("Cholesky of Q failed"))?
            .solve(&self.a.transpose());
        let q_inv_q = spd_solve(&self.q_mat, &self.q)?;
        let schur = &self.a * q_inv_at;
        let schur = (&schur + schur.transpose()) * S::lit(0.5);
        spd_solve(&schur, &(&self.b + &self.a * q_inv_q))
    }

    /// Primal-dual optimum `(x*, p*)` with `x* = Q⁻¹(Aᵀp* - q)`.
    pub fn kkt_point(&self) -> Result<(DVector<S>, DVector<S>)> {
        let p = self.dual_optimum()?;
        let x = spd_solve(&self.q_mat, &(self.a.transpose() * &p - &self.q))?;
        Ok((x, p))
    }
}

impl<S: Scalar> AugmentedSubproblem<S> for LinearlyConstrainedQp<S> {
    fn constraint_matrix(&self) -> &DMatrix<S> {
        &self.a
    }

    fn constraint_rhs(&self) -> &DVector<S> {
        &self.b
    }

    fn minimize_augmented(&self, p: &DVector<S>, c: S) -> Result<DVector<S>> {
        alm_x_subproblem(self, p, c)
    }

    fn dual_solution(&self) -> Option<DVector<S>> {
        self.dual_optimum().ok()
    }
}

/// Solves `(Q + cAᵀA) x = Aᵀp + cAᵀb - q` and checks first-order optimality.
pub fn alm_x_subproblem<S: Scalar>(problem: &LinearlyConstrainedQp<S>, p: &DVector<S>, c: S) -> Result<DVector<S>> {
    ensure_dim(p, problem.m())?;
    crate::linalg::ensure_positive("c", c)?;
    let at = problem.a.transpose();
    let lhs = &problem.q_mat + &at * &problem.a * c;
    let rhs = &at * p + &at * &problem.b * c - &problem.q;
    let x = spd_solve(&lhs, &rhs)?;
    let shifted = p - (&problem.a * &x - &problem.b) * c;
    let residual = (problem.gradient(&x) - &at * shifted).norm();
    if residual > S::tol(1e-8) * (S::one() + p.norm()) {
        return Err(Error::Optimality {
            residual: residual.to_f64_lossy(),
        });
    }
    Ok(x)
}

/// `max(|Qx + q - Aᵀp|_∞, |Ax - b|_∞)`.
pub fn kkt_residual<S: Scalar>(problem: &LinearlyConstrainedQp<S>, x: &DVector<S>, p: &DVector<S>) -> Result<S> {
    ensure_dim(x, problem.n())?;
    ensure_dim(p, problem.m())?;
    let stat = problem.gradient(x) - problem.a.transpose() * p;
    let feas = &problem.a * x - &problem.b;
    Ok(sup_norm(&stat).max(sup_norm(&feas)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlmConfig<S: Scalar> {
    pub gamma: S,
    pub c_schedule: CSchedule<S>,
    pub max_iter: usize,
    /// Stop once `|Ax⁺ - b| <= primal_tol`; zero runs all iterations.
    pub primal_tol: S,
}

impl<S: Scalar> AlmConfig<S> {
    pub fn new(gamma: S, c_schedule: CSchedule<S>, max_iter: usize) -> Self {
        Self {
            gamma,
            c_schedule,
            max_iter,
            primal_tol: S::zero(),
        }
    }

    pub fn with_primal_tol(mut self, tol: S) -> Self {
        self.primal_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_gamma(self.gamma)?;
        self.c_schedule.validate()?;
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !self.primal_tol.is_finite() || self.primal_tol < S::zero() {
            return Err(Error::Config("primal_tol must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlmRecord<S: Scalar> {
    pub k: usize,
    pub c_k: S,
    pub x_next: DVector<S>,
    pub p: DVector<S>,
    /// `p - c(Ax⁺ - b)`, the resolvent of the dual operator at `p`.
    pub p_tilde: DVector<S>,
    pub p_next: DVector<S>,
    pub primal_residual: S,
    pub dual_distance: Option<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlmTrace<S: Scalar> {
    pub records: Vec<AlmRecord<S>>,
    pub dual_optimum: Option<DVector<S>>,
    pub converged: bool,
}

impl<S: Scalar> AlmTrace<S> {
    /// `p^0, ..., p^K`.
    pub fn multipliers(&self) -> Vec<DVector<S>> {
        let mut out: Vec<_> = self.records.iter().map(|r| r.p.clone()).collect();
        if let Some(last) = self.records.last() {
            out.push(last.p_next.clone());
        }
        out
    }

    /// `|p^k - p*|` for `k = 0..=K`.
    pub fn dual_distances(&self) -> Option<Vec<S>> {
        let p_star = self.dual_optimum.as_ref()?;
        Some(self.multipliers().iter().map(|p| (p - p_star).norm()).collect())
    }
}

/// Runs the generalized ALM from `p0`.
pub fn run_generalized_alm<S: Scalar, P: AugmentedSubproblem<S> + ?Sized>(
    problem: &P,
    config: &AlmConfig<S>,
    p0: &DVector<S>,
) -> Result<AlmTrace<S>> {
    config.validate()?;
    let a = problem.constraint_matrix();
    let b = problem.constraint_rhs();
    ensure_dim(p0, a.nrows())?;
    ensure_finite_vec(p0, "initial multiplier")?;
    let dual_optimum = problem.dual_solution();

    let mut records = Vec::with_capacity(config.max_iter);
    let mut p = p0.clone();
    let mut converged = false;
    for k in 0..config.max_iter {
        let c_k = config.c_schedule.at(k);
        let x_next = problem.minimize_augmented(&p, c_k)?;
        let infeasibility = a * &x_next - b;
        let p_tilde = &p - &infeasibility * c_k;
        let p_next = &p - &infeasibility * (config.gamma * c_k);
        ensure_finite_vec(&p_next, "multiplier update")?;
        let primal_residual = infeasibility.norm();
        let dual_distance = dual_optimum.as_ref().map(|ps| (&p - ps).norm());
        records.push(AlmRecord {
            k,
            c_k,
            x_next,
            p,
            p_tilde,
            p_next: p_next.clone(),
            primal_residual,
            dual_distance,
        });
        p = p_next;
        if config.primal_tol > S::zero() && primal_residual <= config.primal_tol {
            converged = true;
            break;
        }
    }
    Ok(AlmTrace {
        records,
        dual_optimum,
        converged,
    })
}

/// The dual operator `S(p) = AQ⁻¹(Aᵀp - q) - b` as an affine operator, with
/// the dual optimum as its zero and modulus `a = L_f / λ_min(AAᵀ)`.
pub fn make_dual_alm_operator<S: Scalar>(problem: &LinearlyConstrainedQp<S>) -> Result<AffineOperator<S>> {
    let chol = problem
        .q_mat
        .clone()
        .cholesky()
        .ok_or(Error::LinearSolve("Cholesky of Q failed"))?;
    let q_inv_at = chol.solve(&problem.a.transpose());
    let q_inv_q = chol.solve(&problem.q);
    let g = &problem.a * q_inv_at;
    let g = (&g + g.transpose()) * S::lit(0.5);
    let h = -(&problem.a * q_inv_q) - &problem.b;
    AffineOperator::new(g, h)?
        .with_known_zero(problem.dual_optimum()?)?
        .with_inverse_lipschitz_modulus(problem.gradient_lipschitz() / problem.aat_min_eigenvalue())
}

/// Runs the generalized ALM and, separately, the exact generalized proximal
/// point iteration on the dual operator from the same `p0`, and compares the
/// multiplier sequences and the resolvent outputs `p̃^k`.
pub fn verify_alm_ppa_equivalence<S: Scalar>(
    problem: &LinearlyConstrainedQp<S>,
    gamma: S,
    c_schedule: &CSchedule<S>,
    p0: &DVector<S>,
    iters: usize,
) -> Result<EquivalenceReport<S>> {
    if iters == 0 {
        return Err(Error::Config("iters must be at least 1".into()));
    }
    let alm = run_generalized_alm(problem, &AlmConfig::new(gamma, c_schedule.clone(), iters), p0)?;

    let op = make_dual_alm_operator(problem)?;
    c_schedule.validate()?;
    let (gppa_ps, gppa_tildes) = exact_sequence(&op, c_schedule, gamma, p0, iters)?;

    let alm_ps = alm.multipliers();
    let compared = alm_ps.len().min(gppa_ps.len());
    let mut max_dev = S::zero();
    for (x, y) in alm_ps.iter().zip(&gppa_ps).take(compared) {
        max_dev = max_dev.max((x - y).norm());
    }
    let mut max_tilde = S::zero();
    for (rec, zt) in alm.records.iter().zip(&gppa_tildes) {
        max_tilde = max_tilde.max((&rec.p_tilde - zt).norm());
        // p̃^k must also be the resolvent at the ALM's own multiplier.
        let direct = op.resolvent(rec.c_k, &rec.p)?;
        max_tilde = max_tilde.max((&rec.p_tilde - direct).norm());
    }
    Ok(EquivalenceReport::new(compared, max_dev, max_tilde, S::tol(EQUIVALENCE_TOL)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn m(r: usize, c: usize, xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, xs)
    }

    #[test]
    fn subproblem_unconstrained_optimum_feasible() {
        let p = LinearlyConstrainedQp::new(DMatrix::identity(2, 2), v(&[0.0, 0.0]), m(1, 2, &[1.0, 0.0]), v(&[0.0]))
            .unwrap();
        let x = alm_x_subproblem(&p, &v(&[0.0]), 1.0).unwrap();
        assert!(x.norm() < 1e-15);
    }

    #[test]
    fn subproblem_by_hand() {
        let p = LinearlyConstrainedQp::new(DMatrix::identity(2, 2), v(&[-1.0, -1.0]), m(1, 2, &[1.0, 1.0]), v(&[0.0]))
            .unwrap();
        let x = alm_x_subproblem(&p, &v(&[0.0]), 1.0).unwrap();
        assert!((x - v(&[1.0 / 3.0, 1.0 / 3.0])).norm() < 1e-15);
    }

    #[test]
    fn subproblem_optimality_on_random_problems() {
        for seed in 0..100 {
            let prob = LinearlyConstrainedQp::<f64>::random(5, 2, seed).unwrap();
            let p = Sampler::new(seed + 1000).uniform_vector::<f64>(2, -3.0, 3.0);
            let c = 0.5 + seed as f64 * 0.05;
            let x = alm_x_subproblem(&prob, &p, c).unwrap();
            let shifted = &p - (prob.a() * &x - prob.b()) * c;
            let res = (prob.gradient(&x) - prob.a().transpose() * shifted).norm();
            assert!(res <= 1e-10, "seed {seed}: {res}");
        }
    }

    #[test]
    fn construction_guards() {
        let not_pd = m(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            LinearlyConstrainedQp::new(not_pd, v(&[0.0, 0.0]), m(1, 2, &[1.0, 0.0]), v(&[0.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let rank_def = m(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert!(matches!(
            LinearlyConstrainedQp::new(DMatrix::identity(2, 2), v(&[0.0, 0.0]), rank_def, v(&[0.0, 0.0])),
            Err(Error::RankDeficient { .. })
        ));
        let asym = m(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(LinearlyConstrainedQp::new(asym, v(&[0.0, 0.0]), m(1, 2, &[1.0, 0.0]), v(&[0.0])).is_err());
    }

    #[test]
    fn dual_operator_by_substitution() {
        let prob =
            LinearlyConstrainedQp::new(DMatrix::identity(2, 2), v(&[0.0, 0.0]), m(1, 2, &[1.0, 0.0]), v(&[1.0]))
                .unwrap();
        let op = make_dual_alm_operator(&prob).unwrap();
        for &p in &[-2.0, 0.0, 1.0, 3.5] {
            let s = op.forward(&v(&[p])).unwrap();
            assert!((s[0] - (p - 1.0)).abs() < 1e-15);
        }
        assert!((op.known_zero().unwrap()[0] - 1.0).abs() < 1e-15);
        let at_zero = op.forward(op.known_zero().unwrap()).unwrap();
        assert!(at_zero.norm() < 1e-15);
    }

    #[test]
    fn dual_operator_strong_monotonicity() {
        let prob = LinearlyConstrainedQp::<f64>::random(6, 3, 11).unwrap();
        let op = make_dual_alm_operator(&prob).unwrap();
        let mu = prob.dual_strong_monotonicity();
        let mut s = Sampler::new(4);
        for _ in 0..1000 {
            let p = s.uniform_vector::<f64>(3, -5.0, 5.0);
            let q = s.uniform_vector::<f64>(3, -5.0, 5.0);
            let lhs = (op.forward(&p).unwrap() - op.forward(&q).unwrap()).dot(&(&p - &q));
            assert!(lhs >= mu * (&p - &q).norm_squared() - 1e-10);
        }
    }

    #[test]
    fn start_at_dual_optimum_is_stationary() {
        let prob = LinearlyConstrainedQp::<f64>::random(6, 3, 2).unwrap();
        let p_star = prob.dual_optimum().unwrap();
        let trace = run_generalized_alm(&prob, &AlmConfig::new(1.3, CSchedule::Constant(1.0), 20), &p_star).unwrap();
        for r in &trace.records {
            assert!((&r.p - &p_star).norm() < 1e-12);
            assert!(r.primal_residual < 1e-12);
        }
        let rep = verify_alm_ppa_equivalence(&prob, 1.0, &CSchedule::Constant(1.0), &p_star, 10).unwrap();
        assert!(rep.max_deviation < 1e-12);
    }

    #[test]
    fn seeded_problem_converges() {
        let prob = LinearlyConstrainedQp::<f64>::random(6, 3, 42).unwrap();
        let cfg = AlmConfig::new(1.0, CSchedule::Constant(1.0), 200).with_primal_tol(1e-8);
        let trace = run_generalized_alm(&prob, &cfg, &DVector::zeros(3)).unwrap();
        assert!(trace.converged);
        assert!(trace.records.last().unwrap().primal_residual < 1e-8);

        let relaxed = run_generalized_alm(
            &prob,
            &AlmConfig::new(1.5, CSchedule::Constant(1.0), 200).with_primal_tol(1e-8),
            &DVector::zeros(3),
        )
        .unwrap();
        assert!(relaxed.converged);
        assert!((&relaxed.records[1].p - &trace.records[1].p).norm() > 1e-6);
    }

    #[test]
    fn equivalence_across_gamma() {
        let prob = LinearlyConstrainedQp::<f64>::random(6, 3, 9).unwrap();
        for &g in &[0.5, 1.0, 1.9] {
            let rep = verify_alm_ppa_equivalence(&prob, g, &CSchedule::Constant(1.0), &DVector::zeros(3), 100).unwrap();
            assert!(rep.passed, "gamma {g}: {rep:?}");
            assert_eq!(rep.iterations_compared, 101);
        }
    }

    #[test]
    fn kkt_residual_examples() {
        let prob = LinearlyConstrainedQp::new(DMatrix::identity(1, 1), v(&[1.0]), m(1, 1, &[1.0]), v(&[1.0])).unwrap();
        assert_eq!(kkt_residual(&prob, &v(&[0.0]), &v(&[0.0])).unwrap(), 1.0);
        let (x, p) = prob.kkt_point().unwrap();
        assert!(kkt_residual(&prob, &x, &p).unwrap() < 1e-10);

        let big = LinearlyConstrainedQp::<f64>::random(6, 3, 5).unwrap();
        let (x, p) = big.kkt_point().unwrap();
        assert!(kkt_residual(&big, &x, &p).unwrap() < 1e-10);
    }
}

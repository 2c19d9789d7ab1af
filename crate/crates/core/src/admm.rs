//! Generalized ADMM for
//! `min ½xᵀQ_f x + q_fᵀx + ½wᵀQ_g w + q_gᵀw  s.t.  Mx = w`
//! and its Douglas-Rachford operator on the dual.
//!
//! One iteration with penalty `λ` and relaxation `γ`:
//!
//! ```text
//! x⁺ = argmin_x { f(x) + ⟨p, Mx⟩ + (λ/2)|Mx - w|² }
//! t  = γ M x⁺ + (1 - γ) w
//! w⁺ = argmin_w { g(w) - ⟨p, w⟩ + (λ/2)|t - w|² }
//! p⁺ = p + λ (t - w⁺)
//! ```
//!
//! With `z = p + λw` this is the relaxed fixed-point iteration on
//! `G = J_{λA}(2J_{λB} - I) + (I - J_{λB})`, where `A = ∂[f*∘(-Mᵀ)]` and
//! `B = ∇g*`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::alm::check_spd;
use crate::engine::{distance_floor, exact_sequence, validate_gamma, CSchedule};
use crate::equivalence::{EquivalenceReport, EQUIVALENCE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{ensure_dim, ensure_finite_mat, ensure_finite_vec, ensure_positive, lu_solve, relax, spd_solve};
use crate::operators::MonotoneOperator;
use crate::sampling::Sampler;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableQp<S: Scalar> {
    qf: DMatrix<S>,
    qf_lin: DVector<S>,
    qg: DMatrix<S>,
    qg_lin: DVector<S>,
    m: DMatrix<S>,
    lambda: S,
    qg_min: S,
    qg_max: S,
}

impl<S: Scalar> SeparableQp<S> {
    pub fn new(
        qf: DMatrix<S>,
        qf_lin: DVector<S>,
        qg: DMatrix<S>,
        qg_lin: DVector<S>,
        m: DMatrix<S>,
        lambda: S,
    ) -> Result<Self> {
        check_spd(&qf, "Q_f")?;
        let (qg_min, qg_max) = check_spd(&qg, "Q_g")?;
        ensure_dim(&qf_lin, qf.nrows())?;
        ensure_dim(&qg_lin, qg.nrows())?;
        if m.nrows() != qg.nrows() || m.ncols() != qf.nrows() {
            return Err(Error::DimensionMismatch {
                expected: qg.nrows() * qf.nrows(),
                found: m.nrows() * m.ncols(),
            });
        }
        ensure_finite_vec(&qf_lin, "q_f")?;
        ensure_finite_vec(&qg_lin, "q_g")?;
        ensure_finite_mat(&m, "M")?;
        ensure_positive("lambda", lambda)?;
        Ok(Self {
            qf,
            qf_lin,
            qg,
            qg_lin,
            m,
            lambda,
            qg_min,
            qg_max,
        })
    }

    /// Seeded instance with `x ∈ R^n`, `w ∈ R^m`.
    pub fn random(n: usize, m: usize, lambda: S, seed: u64) -> Result<Self> {
        let mut s = Sampler::new(seed);
        let qf = s.spd_matrix::<S>(n, 0.5);
        let qf_lin = s.uniform_vector::<S>(n, -1.0, 1.0);
        let qg = s.spd_matrix::<S>(m, 0.5);
        let qg_lin = s.uniform_vector::<S>(m, -1.0, 1.0);
        let mm = s.uniform_matrix::<S>(m, n, -1.0, 1.0);
        Self::new(qf, qf_lin, qg, qg_lin, mm, lambda)
    }

    pub fn n(&self) -> usize {
        self.qf.nrows()
    }

    pub fn m(&self) -> usize {
        self.qg.nrows()
    }

    pub fn f_hessian(&self) -> &DMatrix<S> {
        &self.qf
    }

    pub fn f_linear(&self) -> &DVector<S> {
        &self.qf_lin
    }

    pub fn g_hessian(&self) -> &DMatrix<S> {
        &self.qg
    }

    pub fn g_linear(&self) -> &DVector<S> {
        &self.qg_lin
    }

    pub fn coupling(&self) -> &DMatrix<S> {
        &self.m
    }

    pub fn lambda(&self) -> S {
        self.lambda
    }

    /// Same data with a different penalty.
    pub fn with_lambda(&self, lambda: S) -> Result<Self> {
        ensure_positive("lambda", lambda)?;
        Ok(Self { lambda, ..self.clone() })
    }

    /// Strong-monotonicity modulus of `∇g*`: `1 / λ_max(Q_g)`.
    pub fn alpha(&self) -> S {
        S::one() / self.qg_max
    }

    /// Lipschitz constant of `∇g*`: `1 / λ_min(Q_g)`.
    pub fn beta(&self) -> S {
        S::one() / self.qg_min
    }

    /// `(x*, w*, p*)` from one dense solve of the stacked optimality system
    /// `Q_f x + q_f + Mᵀp = 0`, `Q_g w + q_g - p = 0`, `Mx = w`.
    pub fn kkt_point(&self) -> Result<(DVector<S>, DVector<S>, DVector<S>)> {
        let (n, m) = (self.n(), self.m());
        let size = n + 2 * m;
        let mut k = DMatrix::<S>::zeros(size, size);
        k.view_mut((0, 0), (n, n)).copy_from(&self.qf);
        k.view_mut((0, n + m), (n, m)).copy_from(&self.m.transpose());
        k.view_mut((n, n), (m, m)).copy_from(&self.qg);
        k.view_mut((n + m, 0), (m, n)).copy_from(&self.m);
        for i in 0..m {
            k[(n + i, n + m + i)] = -S::one();
            k[(n + m + i, n + i)] = -S::one();
        }
        let mut rhs = DVector::<S>::zeros(size);
        rhs.rows_mut(0, n).copy_from(&(-&self.qf_lin));
        rhs.rows_mut(n, m).copy_from(&(-&self.qg_lin));
        let sol = lu_solve(&k, &rhs)?;
        Ok((
            sol.rows(0, n).into_owned(),
            sol.rows(n, m).into_owned(),
            sol.rows(n + m, m).into_owned(),
        ))
    }

    /// `z* = p* + λw*`, a fixed point of `G`.
    pub fn dr_fixed_point(&self) -> Result<DVector<S>> {
        let (_, w, p) = self.kkt_point()?;
        Ok(p + w * self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmmConfig<S: Scalar> {
    pub gamma: S,
    pub max_iter: usize,
    /// Stop once `|Mx⁺ - w⁺| <= residual_tol`; zero runs all iterations.
    pub residual_tol: S,
}

impl<S: Scalar> AdmmConfig<S> {
    pub fn new(gamma: S, max_iter: usize) -> Self {
        Self {
            gamma,
            max_iter,
            residual_tol: S::zero(),
        }
    }

    pub fn with_residual_tol(mut self, tol: S) -> Self {
        self.residual_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_gamma(self.gamma)?;
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !self.residual_tol.is_finite() || self.residual_tol < S::zero() {
            return Err(Error::Config("residual_tol must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmmRecord<S: Scalar> {
    pub k: usize,
    pub x_next: DVector<S>,
    pub w: DVector<S>,
    pub w_next: DVector<S>,
    pub p: DVector<S>,
    pub p_next: DVector<S>,
    /// `p^k + λ w^k`.
    pub z: DVector<S>,
    /// `|Mx^{k+1} - w^{k+1}|`.
    pub constraint_residual: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmmTrace<S: Scalar> {
    pub lambda: S,
    pub gamma: S,
    pub records: Vec<AdmmRecord<S>>,
    pub converged: bool,
}

impl<S: Scalar> AdmmTrace<S> {
    /// `z^0, ..., z^K` reconstructed from `(p, w)`.
    pub fn z_sequence(&self) -> Vec<DVector<S>> {
        let mut out: Vec<_> = self.records.iter().map(|r| r.z.clone()).collect();
        if let Some(last) = self.records.last() {
            out.push(&last.p_next + &last.w_next * self.lambda);
        }
        out
    }
}

/// Initial `(w0, p0)` compatible with a given `z0`: `p0 = J_{λB}(z0)`,
/// `w0 = (z0 - p0) / λ`.
pub fn admm_init_from_z<S: Scalar>(problem: &SeparableQp<S>, z0: &DVector<S>) -> Result<(DVector<S>, DVector<S>)> {
    ensure_dim(z0, problem.m())?;
    let p0 = resolvent_b(problem, z0)?;
    let w0 = (z0 - &p0) / problem.lambda;
    Ok((w0, p0))
}

/// Runs the generalized ADMM from `(w0, p0)`.
pub fn run_generalized_admm<S: Scalar>(
    problem: &SeparableQp<S>,
    config: &AdmmConfig<S>,
    w0: &DVector<S>,
    p0: &DVector<S>,
) -> Result<AdmmTrace<S>> {
    config.validate()?;
    ensure_dim(w0, problem.m())?;
    ensure_dim(p0, problem.m())?;
    ensure_finite_vec(w0, "initial w")?;
    ensure_finite_vec(p0, "initial multiplier")?;
    let lambda = problem.lambda;
    let gamma = config.gamma;
    let m = &problem.m;
    let mt = m.transpose();
    let x_lhs = &problem.qf + &mt * m * lambda;
    let x_chol = Cholesky::new(x_lhs).ok_or(Error::LinearSolve("x-step matrix is not positive definite"))?;
    let w_lhs = &problem.qg + DMatrix::identity(problem.m(), problem.m()) * lambda;
    let w_chol = Cholesky::new(w_lhs).ok_or(Error::LinearSolve("w-step matrix is not positive definite"))?;

    let mut records = Vec::with_capacity(config.max_iter);
    let mut w = w0.clone();
    let mut p = p0.clone();
    let mut converged = false;
    for k in 0..config.max_iter {
        let x_next = x_chol.solve(&(-&problem.qf_lin - &mt * &p + &mt * &w * lambda));
        let mx = m * &x_next;
        let target = relax(gamma, &w, &mx);
        let w_next = w_chol.solve(&(-&problem.qg_lin + &p + &target * lambda));
        let p_next = &p + (&target - &w_next) * lambda;
        ensure_finite_vec(&p_next, "multiplier update")?;
        ensure_finite_vec(&w_next, "w update")?;
        let constraint_residual = (&mx - &w_next).norm();
        let z = &p + &w * lambda;
        records.push(AdmmRecord {
            k,
            x_next,
            w,
            w_next: w_next.clone(),
            p,
            p_next: p_next.clone(),
            z,
            constraint_residual,
        });
        w = w_next;
        p = p_next;
        if config.residual_tol > S::zero() && constraint_residual <= config.residual_tol {
            converged = true;
            break;
        }
    }
    Ok(AdmmTrace {
        lambda,
        gamma,
        records,
        converged,
    })
}

/// `J_{λB}(z)` for `B = ∇g*`: solves `(Q_g + λI) u = Q_g z + λ q_g`.
pub fn resolvent_b<S: Scalar>(problem: &SeparableQp<S>, z: &DVector<S>) -> Result<DVector<S>> {
    ensure_dim(z, problem.m())?;
    let lhs = &problem.qg + DMatrix::identity(problem.m(), problem.m()) * problem.lambda;
    spd_solve(&lhs, &(&problem.qg * z + &problem.qg_lin * problem.lambda))
}

/// The Douglas-Rachford operator of the dual, exposed as a monotone operator
/// whose resolvent at `c = 1` is `G`.
#[derive(Debug, Clone)]
pub struct DouglasRachfordOperator<S: Scalar> {
    problem: SeparableQp<S>,
    b_chol: Cholesky<S, Dyn>,
    a_chol: Cholesky<S, Dyn>,
    /// `λ M Q_f⁻¹ q_f`.
    a_shift: DVector<S>,
    zero: DVector<S>,
}

impl<S: Scalar> DouglasRachfordOperator<S> {
    pub fn new(problem: &SeparableQp<S>) -> Result<Self> {
        let m = problem.m();
        let lambda = problem.lambda;
        let b_lhs = &problem.qg + DMatrix::identity(m, m) * lambda;
        let b_chol = Cholesky::new(b_lhs).ok_or(Error::LinearSolve("Q_g + λI is not positive definite"))?;
        let qf_chol = Cholesky::new(problem.qf.clone()).ok_or(Error::LinearSolve("Q_f is not positive definite"))?;
        let qf_inv_mt = qf_chol.solve(&problem.m.transpose());
        let a_lhs = DMatrix::identity(m, m) + &problem.m * qf_inv_mt * lambda;
        let a_lhs = (&a_lhs + a_lhs.transpose()) * S::lit(0.5);
        let a_chol = Cholesky::new(a_lhs).ok_or(Error::LinearSolve("I + λMQ_f⁻¹Mᵀ is not positive definite"))?;
        let a_shift = &problem.m * qf_chol.solve(&problem.qf_lin) * lambda;
        Ok(Self {
            problem: problem.clone(),
            b_chol,
            a_chol,
            a_shift,
            zero: problem.dr_fixed_point()?,
        })
    }

    pub fn problem(&self) -> &SeparableQp<S> {
        &self.problem
    }

    /// `J_{λB}(z)`.
    pub fn resolvent_b(&self, z: &DVector<S>) -> Result<DVector<S>> {
        ensure_dim(z, self.problem.m())?;
        let rhs = &self.problem.qg * z + &self.problem.qg_lin * self.problem.lambda;
        Ok(self.b_chol.solve(&rhs))
    }

    /// `J_{λA}(z)`: solves `(I + λMQ_f⁻¹Mᵀ) u = z - λMQ_f⁻¹q_f`.
    pub fn resolvent_a(&self, z: &DVector<S>) -> Result<DVector<S>> {
        ensure_dim(z, self.problem.m())?;
        Ok(self.a_chol.solve(&(z - &self.a_shift)))
    }

    /// `G(z) = J_{λA}(2J_{λB}(z) - z) + z - J_{λB}(z)`.
    pub fn apply_g(&self, z: &DVector<S>) -> Result<DVector<S>> {
        let jb = self.resolvent_b(z)?;
        let reflected = &jb * S::lit(2.0) - z;
        let ja = self.resolvent_a(&reflected)?;
        Ok(ja + z - jb)
    }

    /// `sqrt(1 - λα / (1 + λβ)²)`, a Lipschitz constant of `G`.
    pub fn contraction_bound(&self) -> S {
        let l = self.problem.lambda;
        let d = S::one() + l * self.problem.beta();
        (S::one() - l * self.problem.alpha() / (d * d)).sqrt()
    }
}

impl<S: Scalar> MonotoneOperator<S> for DouglasRachfordOperator<S> {
    fn dim(&self) -> usize {
        self.problem.m()
    }

    fn eval_resolvent(&self, c: S, z: &DVector<S>) -> Result<DVector<S>> {
        if c != S::one() {
            return Err(Error::Unsupported {
                name: "c",
                value: c.to_f64_lossy(),
                reason: "the splitting operator is only available through its resolvent at c = 1",
            });
        }
        self.apply_g(z)
    }

    fn known_zero(&self) -> Option<&DVector<S>> {
        Some(&self.zero)
    }
}

pub fn make_dr_splitting_operator<S: Scalar>(problem: &SeparableQp<S>) -> Result<DouglasRachfordOperator<S>> {
    DouglasRachfordOperator::new(problem)
}

/// Runs the generalized ADMM and, independently, the relaxed fixed-point
/// iteration on `G` from the same `z0`, and checks `z^k = p^k + λw^k` and
/// `p^k = J_{λB}(z^k)` at every iteration.
pub fn verify_admm_dr_correspondence<S: Scalar>(
    problem: &SeparableQp<S>,
    gamma: S,
    z0: &DVector<S>,
    iters: usize,
) -> Result<EquivalenceReport<S>> {
    if iters == 0 {
        return Err(Error::Config("iters must be at least 1".into()));
    }
    let (w0, p0) = admm_init_from_z(problem, z0)?;
    let admm = run_generalized_admm(problem, &AdmmConfig::new(gamma, iters), &w0, &p0)?;

    let op = make_dr_splitting_operator(problem)?;
    let (zs, _) = exact_sequence(&op, &CSchedule::Constant(S::one()), gamma, z0, iters)?;

    let lambda = problem.lambda;
    let mut ps: Vec<DVector<S>> = admm.records.iter().map(|r| r.p.clone()).collect();
    let mut ws: Vec<DVector<S>> = admm.records.iter().map(|r| r.w.clone()).collect();
    if let Some(last) = admm.records.last() {
        ps.push(last.p_next.clone());
        ws.push(last.w_next.clone());
    }
    let compared = ps.len().min(zs.len());
    let mut max_z = S::zero();
    let mut max_p = S::zero();
    for k in 0..compared {
        let z_admm = &ps[k] + &ws[k] * lambda;
        max_z = max_z.max((&z_admm - &zs[k]).norm());
        max_p = max_p.max((&ps[k] - op.resolvent_b(&zs[k])?).norm());
    }
    Ok(EquivalenceReport::new(compared, max_z, max_p, S::tol(EQUIVALENCE_TOL)))
}

/// Successive-difference ratios `|v^{k+2} - v^{k+1}| / |v^{k+1} - v^k|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRatios<S: Scalar> {
    pub ratios: Vec<S>,
    /// Largest ratio over the last half, if any ratio is defined.
    pub tail_max: Option<S>,
}

impl<S: Scalar> TailRatios<S> {
    pub fn from_sequence(seq: &[DVector<S>]) -> Self {
        let scale = seq.iter().fold(S::zero(), |m, v| m.max(v.norm()));
        let floor = distance_floor(&DVector::from_element(1, scale));
        let diffs: Vec<S> = seq.windows(2).map(|w| (&w[1] - &w[0]).norm()).collect();
        let mut ratios = Vec::new();
        for d in diffs.windows(2) {
            if !(d[0] > floor && d[1] > floor) {
                break;
            }
            ratios.push(d[1] / d[0]);
        }
        let start = ratios.len() / 2;
        let tail_max = ratios[start..].iter().copied().reduce(|a, b| a.max(b));
        Self { ratios, tail_max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimalDualEstimate<S: Scalar> {
    pub x: DVector<S>,
    pub w: DVector<S>,
    pub p: DVector<S>,
    pub p_ratios: TailRatios<S>,
    pub w_ratios: TailRatios<S>,
    pub mx_ratios: TailRatios<S>,
    /// Present when `M` has full column rank.
    pub x_ratios: Option<TailRatios<S>>,
    pub notice: Option<String>,
}

/// Last iterates and R-linear diagnostics of a trace.
pub fn extract_primal_dual<S: Scalar>(trace: &AdmmTrace<S>, problem: &SeparableQp<S>) -> Result<PrimalDualEstimate<S>> {
    let last = trace
        .records
        .last()
        .ok_or(Error::Config("empty ADMM trace".into()))?;
    let ps: Vec<_> = trace.records.iter().map(|r| r.p_next.clone()).collect();
    let ws: Vec<_> = trace.records.iter().map(|r| r.w_next.clone()).collect();
    let mxs: Vec<_> = trace.records.iter().map(|r| &problem.m * &r.x_next).collect();

    let mtm = problem.m.transpose() * &problem.m;
    let full_column_rank = problem.m() >= problem.n() && {
        let (lo, _) = crate::linalg::symmetric_part_extremes(&mtm);
        lo > S::lit(crate::alm::DEFINITENESS_TOL)
    };
    let (x_ratios, notice) = if full_column_rank {
        let mt = problem.m.transpose();
        let xs = mxs
            .iter()
            .map(|mx| spd_solve(&mtm, &(&mt * mx)))
            .collect::<Result<Vec<_>>>()?;
        (Some(TailRatios::from_sequence(&xs)), None)
    } else {
        (
            None,
            Some("M does not have full column rank; x ratios not reported".to_string()),
        )
    };
    Ok(PrimalDualEstimate {
        x: last.x_next.clone(),
        w: last.w_next.clone(),
        p: last.p_next.clone(),
        p_ratios: TailRatios::from_sequence(&ps),
        w_ratios: TailRatios::from_sequence(&ws),
        mx_ratios: TailRatios::from_sequence(&mxs),
        x_ratios,
        notice,
    })
}

//! Checks against independently written reference computations.

use approx::assert_relative_eq;
use gppa_core::admm::{make_dr_splitting_operator, run_generalized_admm, AdmmConfig, SeparableQp};
use gppa_core::alm::{make_dual_alm_operator, run_generalized_alm, AlmConfig, LinearlyConstrainedQp};
use gppa_core::engine::{run_exact_gppa, run_inexact_gppa, step_exact, CSchedule, DeltaSchedule, GppaConfig};
use gppa_core::operators::{AffineOperator, MonotoneOperator, RotationOperator};
use gppa_core::rates::theoretical_exact_rate;
use gppa_core::Sampler;
use nalgebra::{Cholesky, DMatrix, DVector};

/// Plain Gauss-Jordan inverse with partial pivoting on row-major vectors.
#[allow(clippy::needless_range_loop)]
fn gauss_jordan_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        assert!(d.abs() > 1e-14, "singular");
        for x in a[col].iter_mut() {
            *x /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for k in 0..2 * n {
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn monotone_matrix(s: &mut Sampler, n: usize) -> DMatrix<f64> {
    let spd = s.spd_matrix::<f64>(n, 0.1);
    let b = s.uniform_matrix::<f64>(n, n, -1.0, 1.0);
    spd + (&b - b.transpose())
}

#[test]
fn affine_resolvent_matches_dense_inverse() {
    let mut s = Sampler::new(77);
    for n in 1..=8 {
        for _ in 0..5 {
            let g = monotone_matrix(&mut s, n);
            let h = s.uniform_vector::<f64>(n, -2.0, 2.0);
            let c = s.uniform(0.1, 5.0);
            let op = AffineOperator::new(g.clone(), h.clone()).unwrap();
            let lhs = DMatrix::identity(n, n) + &g * c;
            let inv = gauss_jordan_inverse(&to_rows(&lhs));
            for _ in 0..4 {
                let z = s.uniform_vector::<f64>(n, -5.0, 5.0);
                let rhs: Vec<f64> = (0..n).map(|i| z[i] - c * h[i]).collect();
                let expected = mat_vec(&inv, &rhs);
                let got = op.resolvent(c, &z).unwrap();
                for i in 0..n {
                    assert!((got[i] - expected[i]).abs() < 1e-10, "n={n}");
                }
            }
        }
    }
}

#[test]
fn rotation_closed_form_and_affine_agree() {
    let mut s = Sampler::new(5);
    for _ in 0..100 {
        let a = s.uniform(0.1, 10.0);
        let c = s.uniform(0.1, 10.0);
        let z = s.uniform_vector::<f64>(2, -10.0, 10.0);
        let t = c / a;
        let expected = [(z[0] - t * z[1]) / (1.0 + t * t), (z[1] + t * z[0]) / (1.0 + t * t)];
        let rot = RotationOperator::new(a).unwrap();
        let aff = AffineOperator::new(rot.matrix(), DVector::zeros(2)).unwrap();
        let jr = rot.resolvent(c, &z).unwrap();
        let ja = aff.resolvent(c, &z).unwrap();
        for i in 0..2 {
            assert!((jr[i] - expected[i]).abs() < 1e-12);
            assert!((ja[i] - expected[i]).abs() < 1e-12);
        }
        assert_relative_eq!(jr.norm() / z.norm(), a / (a * a + c * c).sqrt(), max_relative = 1e-12);
    }
}

#[test]
fn rotation_geometric_decay() {
    let op = RotationOperator::new(1.0).unwrap();
    let cfg = GppaConfig::new(1.0, CSchedule::Constant(1.0))
        .with_max_iter(50)
        .with_residual_tol(1e-300);
    let trace = run_exact_gppa(&op, &cfg, &DVector::from_row_slice(&[1.0, 0.0])).unwrap();
    for (k, z) in trace.iterates().unwrap().iter().enumerate() {
        let expected = 0.5f64.powf(k as f64 / 2.0);
        assert_relative_eq!(z.norm(), expected, max_relative = 1e-10);
    }
}

#[test]
fn exact_contraction_inequality_on_random_problems() {
    let mut s = Sampler::new(2024);
    for trial in 0..20 {
        let op: Box<dyn MonotoneOperator<f64>> = if trial % 2 == 0 {
            Box::new(RotationOperator::new(s.uniform(0.1, 10.0)).unwrap())
        } else {
            let n = 1 + (trial % 8);
            let g = s.spd_matrix::<f64>(n, 0.2);
            let h = s.uniform_vector::<f64>(n, -1.0, 1.0);
            Box::new(AffineOperator::new(g, h).unwrap())
        };
        let z_star = op.known_zero().cloned().unwrap_or_else(|| DVector::zeros(op.dim()));
        let a = op.inverse_lipschitz_modulus().unwrap();
        for &gamma in &[0.25, 0.75, 1.0, 1.5, 1.9] {
            let c = 1.0;
            let z0 = s.uniform_vector::<f64>(op.dim(), -5.0, 5.0);
            let rho = theoretical_exact_rate(gamma, c, a).unwrap();
            let mut z = z0;
            for _ in 0..60 {
                let (next, tilde) = step_exact(op.as_ref(), c, gamma, &z).unwrap();
                let before = (&z - &z_star).norm_squared();
                let after = (&next - &z_star).norm_squared();
                let res = (&z - &tilde).norm_squared();
                assert!(after <= before - gamma * (2.0 - gamma) * res + 1e-10);
                if before.sqrt() > 1e-12 {
                    assert!(after / before <= rho + 1e-6);
                }
                z = next;
            }
        }
    }
}

#[test]
fn inexact_run_satisfies_criterion_and_reaches_zero() {
    let op = RotationOperator::new(1.0).unwrap();
    let cfg = GppaConfig::new(1.0, CSchedule::Constant(1.0))
        .with_delta(DeltaSchedule::new(0.5, 0.9).unwrap())
        .with_max_iter(200)
        .with_residual_tol(1e-300)
        .with_seed(3);
    let trace = run_inexact_gppa(&op, &cfg, &DVector::from_row_slice(&[1.0, 0.0])).unwrap();
    assert!(!trace.is_failure());
    for r in &trace.records {
        assert!(r.inexact_error.unwrap() <= r.delta_k.unwrap() * r.step_length + 1e-15);
    }
    assert!(trace.final_dist.unwrap() < 1e-8);
}

#[test]
fn dual_alm_operator_matches_explicit_formula() {
    for seed in 0..5 {
        let prob = LinearlyConstrainedQp::<f64>::random(6, 3, seed).unwrap();
        let op = make_dual_alm_operator(&prob).unwrap();
        let q_inv = gauss_jordan_inverse(&to_rows(prob.hessian()));
        let a = to_rows(prob.a());
        let at = to_rows(&prob.a().transpose());
        let p = Sampler::new(seed).uniform_vector::<f64>(3, -2.0, 2.0);
        let atp = mat_vec(&at, p.as_slice());
        let inner: Vec<f64> = atp.iter().zip(prob.linear().iter()).map(|(x, q)| x - q).collect();
        let expected: Vec<f64> = mat_vec(&a, &mat_vec(&q_inv, &inner))
            .iter()
            .zip(prob.b().iter())
            .map(|(x, b)| x - b)
            .collect();
        let got = op.forward(&p).unwrap();
        for i in 0..3 {
            assert!((got[i] - expected[i]).abs() < 1e-10);
        }
    }
}

#[test]
fn gppa_with_unit_gamma_is_plain_proximal_point() {
    let mut s = Sampler::new(8);
    let g = monotone_matrix(&mut s, 4);
    let op = AffineOperator::new(g, s.uniform_vector::<f64>(4, -1.0, 1.0)).unwrap();
    let z0 = s.uniform_vector::<f64>(4, -3.0, 3.0);
    let cfg = GppaConfig::new(1.0, CSchedule::Constant(0.7))
        .with_max_iter(40)
        .with_residual_tol(1e-300);
    let trace = run_exact_gppa(&op, &cfg, &z0).unwrap();
    let mut z = z0;
    for r in &trace.records {
        assert_eq!(r.z.as_ref().unwrap(), &z);
        z = op.resolvent(0.7, &z).unwrap();
    }
}

#[test]
fn alm_with_unit_gamma_is_classical() {
    let prob = LinearlyConstrainedQp::<f64>::random(6, 3, 13).unwrap();
    let trace = run_generalized_alm(&prob, &AlmConfig::new(1.0, CSchedule::Constant(2.0), 50), &DVector::zeros(3))
        .unwrap();
    let mut p = DVector::<f64>::zeros(3);
    for r in &trace.records {
        assert_eq!(r.p, p);
        let x = gppa_core::alm_x_subproblem(&prob, &p, 2.0).unwrap();
        assert_eq!(r.x_next, x);
        p = &p - (prob.a() * &x - prob.b()) * 2.0;
    }
    assert_eq!(trace.records.last().unwrap().p_next, p);
}

#[test]
fn admm_with_unit_gamma_is_classical() {
    let prob = SeparableQp::<f64>::random(5, 4, 0.8, 17).unwrap();
    let trace = run_generalized_admm(&prob, &AdmmConfig::new(1.0, 50), &DVector::zeros(4), &DVector::zeros(4)).unwrap();
    let (m, l) = (prob.coupling(), prob.lambda());
    let mt = m.transpose();
    let xc = Cholesky::new(prob.f_hessian() + &mt * m * l).unwrap();
    let wc = Cholesky::new(prob.g_hessian() + DMatrix::identity(4, 4) * l).unwrap();
    let (mut w, mut p) = (DVector::<f64>::zeros(4), DVector::<f64>::zeros(4));
    for r in &trace.records {
        let x = xc.solve(&(-prob.f_linear() - &mt * &p + &mt * &w * l));
        let mx = m * &x;
        let w_next = wc.solve(&(-prob.g_linear() + &p + &mx * l));
        let p_next = &p + (&mx - &w_next) * l;
        assert_eq!(r.x_next, x);
        assert_eq!(r.w_next, w_next);
        assert_eq!(r.p_next, p_next);
        w = w_next;
        p = p_next;
    }
}

#[test]
fn splitting_resolvents_match_conjugate_formulas() {
    let prob = SeparableQp::<f64>::random(5, 4, 1.5, 40).unwrap();
    let op = make_dr_splitting_operator(&prob).unwrap();
    let l = prob.lambda();
    let qg_inv = gauss_jordan_inverse(&to_rows(prob.g_hessian()));
    let qf_inv = gauss_jordan_inverse(&to_rows(prob.f_hessian()));
    let m = to_rows(prob.coupling());
    let mt = to_rows(&prob.coupling().transpose());
    let mut s = Sampler::new(1);
    for _ in 0..20 {
        let z = s.uniform_vector::<f64>(4, -4.0, 4.0);
        // u + λ ∇g*(u) = z with ∇g*(u) = Q_g⁻¹(u - q_g)
        let u = op.resolvent_b(&z).unwrap();
        let shifted: Vec<f64> = u.iter().zip(prob.g_linear().iter()).map(|(a, b)| a - b).collect();
        let grad = mat_vec(&qg_inv, &shifted);
        for i in 0..4 {
            assert!((u[i] + l * grad[i] - z[i]).abs() < 1e-10);
        }
        // v + λ A(v) = z with A(v) = -M Q_f⁻¹(-Mᵀv - q_f)
        let v = op.resolvent_a(&z).unwrap();
        let y: Vec<f64> = mat_vec(&mt, v.as_slice())
            .iter()
            .zip(prob.f_linear().iter())
            .map(|(a, q)| -a - q)
            .collect();
        let av = mat_vec(&m, &mat_vec(&qf_inv, &y));
        for i in 0..4 {
            assert!((v[i] - l * av[i] - z[i]).abs() < 1e-10);
        }
    }
}

//! Seeded random draws used by property checks, perturbations and problem generators.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn uniform_vector<S: Scalar>(&mut self, dim: usize, lo: f64, hi: f64) -> DVector<S> {
        DVector::from_fn(dim, |_, _| S::lit(self.uniform(lo, hi)))
    }

    pub fn uniform_matrix<S: Scalar>(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<S> {
        DMatrix::from_fn(rows, cols, |_, _| S::lit(self.uniform(lo, hi)))
    }

    /// Uniformly random direction on the unit sphere.
    pub fn unit_vector<S: Scalar>(&mut self, dim: usize) -> DVector<S> {
        loop {
            let v: DVector<f64> = DVector::from_fn(dim, |_, _| self.rng.gen_range(-1.0..1.0));
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                return (v / n).map(S::lit);
            }
        }
    }

    /// Uniform draw from the ball of the given radius around `center`.
    pub fn point_in_ball<S: Scalar>(&mut self, center: &DVector<S>, radius: S) -> DVector<S> {
        let dim = center.len();
        let u: f64 = self.rng.gen_range(0.0..1.0);
        let r = radius * S::lit(u.powf(1.0 / dim as f64));
        center + self.unit_vector::<S>(dim) * r
    }

    /// Random symmetric positive definite matrix with spectrum bounded below by `shift`.
    pub fn spd_matrix<S: Scalar>(&mut self, dim: usize, shift: f64) -> DMatrix<S> {
        let b = self.uniform_matrix::<f64>(dim, dim, -1.0, 1.0);
        let m = b.transpose() * &b / dim as f64 + DMatrix::identity(dim, dim) * shift;
        let m = (&m + m.transpose()) * 0.5;
        m.map(S::lit)
    }
}

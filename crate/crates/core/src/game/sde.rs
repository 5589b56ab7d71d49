use rand::Rng;
use rand_distr::StandardNormal;

use super::philox::PhiloxStream;
use super::GameError;
use crate::linalg::{psd_sqrt, Matrix, Vector, ZERO_VECTOR};
use crate::problem::{Diffusion, Drift, ProblemSpec};

/// Drift `b(x)` and volatility `σ(x) = a(x)^{1/2}` of the state process.
#[derive(Clone, Debug)]
pub struct SdeModel {
    pub dim: usize,
    drift: Drift,
    diffusion: Diffusion,
    u1: Vec<f64>,
    u2: Vec<f64>,
    /// `σ` when `a` does not depend on the state.
    constant_sigma: Option<Matrix>,
}

impl SdeModel {
    pub fn new(dim: usize, drift: Drift, diffusion: Diffusion) -> Self {
        Self::with_controls(dim, drift, diffusion, Vec::new(), Vec::new())
    }

    fn with_controls(dim: usize, drift: Drift, diffusion: Diffusion, u1: Vec<f64>, u2: Vec<f64>) -> Self {
        use crate::problem::DiffusionFamily;
        let constant_sigma = match diffusion.base {
            DiffusionFamily::Zero | DiffusionFamily::Constant(_) | DiffusionFamily::Diagonal(_) => {
                Some(psd_sqrt(&diffusion.eval(&[0.0; 2][..dim], &u1, &u2, dim), dim))
            }
            DiffusionFamily::Quadratic { .. } => None,
        };
        SdeModel {
            dim,
            drift,
            diffusion,
            u1,
            u2,
            constant_sigma,
        }
    }

    /// The state process of an uncontrolled instance.
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self, GameError> {
        if !spec.is_uncontrolled() {
            return Err(GameError::Controlled);
        }
        Ok(Self::with_controls(
            spec.dim,
            spec.coefficients.drift.clone(),
            spec.coefficients.diffusion.clone(),
            spec.controls[0].points()[0].clone(),
            spec.controls[1].points()[0].clone(),
        ))
    }

    #[inline]
    pub fn drift(&self, x: &[f64]) -> Vector {
        self.drift.eval(x, &self.u1, &self.u2, self.dim)
    }

    #[inline]
    pub fn sigma(&self, x: &[f64]) -> Matrix {
        match self.constant_sigma {
            Some(s) => s,
            None => psd_sqrt(&self.diffusion.eval(x, &self.u1, &self.u2, self.dim), self.dim),
        }
    }

    /// One Euler–Maruyama step with the Gaussian increment of
    /// `(seed, noise_path, step)`, negated when `flip` is set.
    #[inline]
    pub fn step(&self, x: &Vector, dt: f64, sqrt_dt: f64, seed: u64, noise_path: u64, step: u32, flip: bool) -> Vector {
        let mut rng = PhiloxStream::new(seed, noise_path, step);
        let mut xi = ZERO_VECTOR;
        for z in xi.iter_mut().take(self.dim) {
            let g: f64 = rng.sample(StandardNormal);
            *z = if flip { -g } else { g };
        }
        let b = self.drift(&x[..self.dim]);
        let s = self.sigma(&x[..self.dim]);
        let mut out = *x;
        for i in 0..self.dim {
            let mut noise = 0.0;
            for (j, z) in xi.iter().enumerate().take(self.dim) {
                noise += s[i][j] * z;
            }
            out[i] += b[i] * dt + sqrt_dt * noise;
        }
        out
    }
}

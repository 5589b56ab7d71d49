//! Parametric coefficient families.
//!
//! Instances are assembled from a small registry of closed-form families
//! rather than a general expression language: constant, affine, cosine,
//! clamped-linear and quadratic scalar fields; zero/constant/affine drifts;
//! zero/constant/diagonal/quadratic diffusions. Control dependence enters
//! through linear gains (drift), a non-negative quadratic scale (diffusion)
//! and linear/bilinear terms (running cost).

use crate::linalg::{dot, mat_vec, norm_sq, scale_matrix, Matrix, Vector, MAX_DIM, ZERO_MATRIX, ZERO_VECTOR};
use crate::solver::manufactured::ProfileField;

/// A scalar function of the state, used for running-cost bases, obstacles
/// and Dirichlet boundary data.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarFamily {
    Constant {
        value: f64,
    },
    /// `offset + slope · x`
    Affine {
        offset: f64,
        slope: Vector,
    },
    /// `offset + amplitude · cos(frequency · x + phase)`
    Trig {
        offset: f64,
        amplitude: f64,
        frequency: Vector,
        phase: f64,
    },
    /// `clamp(offset + slope · x, min, max)`
    ClampedLinear {
        offset: f64,
        slope: Vector,
        min: f64,
        max: f64,
    },
    /// `offset + Σ_k coefficient_k (x_k − center_k)²`
    Quadratic {
        offset: f64,
        coefficient: Vector,
        center: Vector,
    },
    /// One of the fields of a manufactured-solution profile.
    Profile(ProfileField),
}

impl ScalarFamily {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ScalarFamily::Constant { value } => *value,
            ScalarFamily::Affine { offset, slope } => offset + dot(slope, x),
            ScalarFamily::Trig {
                offset,
                amplitude,
                frequency,
                phase,
            } => offset + amplitude * (dot(frequency, x) + phase).cos(),
            ScalarFamily::ClampedLinear {
                offset,
                slope,
                min,
                max,
            } => (offset + dot(slope, x)).clamp(*min, *max),
            ScalarFamily::Quadratic {
                offset,
                coefficient,
                center,
            } => {
                offset
                    + x.iter()
                        .zip(coefficient.iter().zip(center))
                        .map(|(xi, (c, m))| c * (xi - m) * (xi - m))
                        .sum::<f64>()
            }
            ScalarFamily::Profile(field) => field.value(x),
        }
    }

    /// Multiplies every output by `k` (used by scaling tests and the
    /// payoff-linearity property).
    pub fn scaled(&self, k: f64) -> ScalarFamily {
        match self {
            ScalarFamily::Constant { value } => ScalarFamily::Constant { value: k * value },
            ScalarFamily::Affine { offset, slope } => ScalarFamily::Affine {
                offset: k * offset,
                slope: slope.map(|s| k * s),
            },
            ScalarFamily::Trig {
                offset,
                amplitude,
                frequency,
                phase,
            } => ScalarFamily::Trig {
                offset: k * offset,
                amplitude: k * amplitude,
                frequency: *frequency,
                phase: *phase,
            },
            ScalarFamily::ClampedLinear {
                offset,
                slope,
                min,
                max,
            } => {
                let (lo, hi) = if k >= 0.0 { (k * min, k * max) } else { (k * max, k * min) };
                ScalarFamily::ClampedLinear {
                    offset: k * offset,
                    slope: slope.map(|s| k * s),
                    min: lo,
                    max: hi,
                }
            }
            ScalarFamily::Quadratic {
                offset,
                coefficient,
                center,
            } => ScalarFamily::Quadratic {
                offset: k * offset,
                coefficient: coefficient.map(|c| k * c),
                center: *center,
            },
            ScalarFamily::Profile(field) => ScalarFamily::Profile(field.scaled(k)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DriftFamily {
    Zero,
    Constant(Vector),
    /// `matrix · x + offset`
    Affine { matrix: Matrix, offset: Vector },
}

/// `b(x, u₁, u₂) = base(x) + G₁ u₁ + G₂ u₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct Drift {
    pub base: DriftFamily,
    /// Rows indexed by state axis, columns by control component.
    pub gain1: Vec<Vec<f64>>,
    pub gain2: Vec<Vec<f64>>,
}

impl Drift {
    pub fn uncontrolled(base: DriftFamily) -> Self {
        Drift {
            base,
            gain1: Vec::new(),
            gain2: Vec::new(),
        }
    }

    pub fn eval(&self, x: &[f64], u1: &[f64], u2: &[f64], dim: usize) -> Vector {
        let mut out = match &self.base {
            DriftFamily::Zero => ZERO_VECTOR,
            DriftFamily::Constant(c) => *c,
            DriftFamily::Affine { matrix, offset } => {
                let xv = crate::linalg::to_vector(x);
                let mut v = mat_vec(matrix, &xv, dim);
                for k in 0..dim {
                    v[k] += offset[k];
                }
                v
            }
        };
        for (gain, u) in [(&self.gain1, u1), (&self.gain2, u2)] {
            for (k, row) in gain.iter().enumerate().take(dim) {
                out[k] += dot(row, u);
            }
        }
        for v in out.iter_mut().skip(dim) {
            *v = 0.0;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.base, DriftFamily::Zero)
            && self.gain1.iter().flatten().all(|g| *g == 0.0)
            && self.gain2.iter().flatten().all(|g| *g == 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DiffusionFamily {
    Zero,
    Constant(Matrix),
    Diagonal(Vector),
    /// `matrix · (floor + |x − center|²)`
    Quadratic {
        matrix: Matrix,
        center: Vector,
        floor: f64,
    },
}

/// `a(x, u₁, u₂) = base(x) · (s₀ + s₁|u₁|² + s₂|u₂|²)` with `sᵢ ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Diffusion {
    pub base: DiffusionFamily,
    pub control_scale: [f64; 3],
}

impl Diffusion {
    pub fn uncontrolled(base: DiffusionFamily) -> Self {
        Diffusion {
            base,
            control_scale: [1.0, 0.0, 0.0],
        }
    }

    pub fn eval(&self, x: &[f64], u1: &[f64], u2: &[f64], dim: usize) -> Matrix {
        let base = match &self.base {
            DiffusionFamily::Zero => return ZERO_MATRIX,
            DiffusionFamily::Constant(m) => *m,
            DiffusionFamily::Diagonal(d) => {
                let mut m = ZERO_MATRIX;
                for k in 0..dim {
                    m[k][k] = d[k];
                }
                m
            }
            DiffusionFamily::Quadratic { matrix, center, floor } => {
                let mut r2 = *floor;
                for k in 0..dim {
                    r2 += (x[k] - center[k]) * (x[k] - center[k]);
                }
                scale_matrix(matrix, r2)
            }
        };
        let [s0, s1, s2] = self.control_scale;
        let s = s0 + s1 * norm_sq(u1) + s2 * norm_sq(u2);
        if s == 1.0 {
            base
        } else {
            scale_matrix(&base, s)
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.base {
            DiffusionFamily::Zero => true,
            DiffusionFamily::Constant(m) => m.iter().flatten().all(|v| *v == 0.0),
            DiffusionFamily::Diagonal(d) => d.iter().all(|v| *v == 0.0),
            DiffusionFamily::Quadratic { matrix, .. } => matrix.iter().flatten().all(|v| *v == 0.0),
        }
    }
}

/// `r(x, u₁, u₂) = base(x) + c₁·u₁ + c₂·u₂ + u₁ᵀ K u₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cost {
    pub base: ScalarFamily,
    pub linear1: Vec<f64>,
    pub linear2: Vec<f64>,
    pub bilinear: Vec<Vec<f64>>,
}

impl Cost {
    pub fn uncontrolled(base: ScalarFamily) -> Self {
        Cost {
            base,
            linear1: Vec::new(),
            linear2: Vec::new(),
            bilinear: Vec::new(),
        }
    }

    pub fn eval(&self, x: &[f64], u1: &[f64], u2: &[f64]) -> f64 {
        let mut r = self.base.value(x) + dot(&self.linear1, u1) + dot(&self.linear2, u2);
        for (row, a) in self.bilinear.iter().zip(u1) {
            r += a * dot(row, u2);
        }
        r
    }

    pub fn scaled(&self, k: f64) -> Cost {
        Cost {
            base: self.base.scaled(k),
            linear1: self.linear1.iter().map(|v| k * v).collect(),
            linear2: self.linear2.iter().map(|v| k * v).collect(),
            bilinear: self
                .bilinear
                .iter()
                .map(|row| row.iter().map(|v| k * v).collect())
                .collect(),
        }
    }
}

/// Declared sup-norm and Lipschitz metadata. Spot-checked by validation,
/// otherwise trusted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundEstimates {
    pub drift: Option<f64>,
    pub diffusion: Option<f64>,
    pub cost: Option<f64>,
    pub obstacles: Option<f64>,
    pub lipschitz: Option<f64>,
}

/// Drift, diffusion and running cost of an instance.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    pub drift: Drift,
    pub diffusion: Diffusion,
    pub running_cost: Cost,
    pub bounds: BoundEstimates,
}

/// Upper obstacle ψ₁ (paid when the minimizer stops) and lower obstacle ψ₂
/// (paid when the maximizer stops).
#[derive(Clone, Debug, PartialEq)]
pub struct ObstaclePair {
    pub psi_upper: ScalarFamily,
    pub psi_lower: ScalarFamily,
}

pub(crate) fn pad(values: &[f64]) -> Vector {
    let mut out = ZERO_VECTOR;
    for (o, v) in out.iter_mut().zip(values.iter().take(MAX_DIM)) {
        *o = *v;
    }
    out
}

//! Manufactured-solution profiles for convergence testing.
//!
//! Every profile fixes a smooth `w*`, constant diffusion, the mean-reverting
//! drift `b(x) = −(x − m)` towards the box centre `m`, `λ = 1` and singleton
//! controls, and chooses the running cost so that `w*` solves the
//! double-obstacle problem exactly. Coordinates are scaled to the box,
//! `u = (x − m)/L` with `L` the half-width, so a profile can be placed on any
//! box.
//!
//! In the contact profiles one obstacle touches `w*` on the band
//! `|u − c| ≤ ℓ` and separates quadratically outside it; the running cost is
//! shifted by a bump supported in the band so that the inequality holds
//! strictly inside the contact set.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::SolverError;
use crate::grid::{GridFunction, Lattice};
use crate::linalg::{Matrix, Vector, ZERO_VECTOR};
use crate::problem::{
    BoundEstimates, BoundaryCondition, BoxDomain, CoefficientField, ControlSet, Cost, Diffusion, DiffusionFamily,
    Drift, DriftFamily, ObstaclePair, ProblemSpec, ScalarFamily,
};

/// Diffusion coefficient of the one-dimensional profiles.
pub const PROFILE_DIFFUSION_1D: f64 = 0.5;
/// Diffusion matrix of the two-dimensional profile.
pub const PROFILE_DIFFUSION_2D: Matrix = [[0.5, 0.1], [0.1, 0.3]];
pub const PROFILE_DISCOUNT: f64 = 1.0;
/// Distance of a non-touching obstacle from `w*`.
const GAP: f64 = 0.5;
/// Curvature of the obstacle's separation outside the contact band.
const SEPARATION: f64 = 3.0;
/// Height of the running-cost bump inside the contact band.
const BUMP: f64 = 0.5;
const LOWER_BAND_CENTER: f64 = 0.25;
const UPPER_BAND_CENTER: f64 = -0.5;
const BAND_HALF_WIDTH: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProfileId {
    Smooth1dInterior,
    LowerContact1d,
    UpperContact1d,
    DoubleContact1d,
    Smooth2dInterior,
}

impl ProfileId {
    pub const ALL: [ProfileId; 5] = [
        ProfileId::Smooth1dInterior,
        ProfileId::LowerContact1d,
        ProfileId::UpperContact1d,
        ProfileId::DoubleContact1d,
        ProfileId::Smooth2dInterior,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProfileId::Smooth1dInterior => "smooth-1d-interior",
            ProfileId::LowerContact1d => "lower-contact-1d",
            ProfileId::UpperContact1d => "upper-contact-1d",
            ProfileId::DoubleContact1d => "double-contact-1d",
            ProfileId::Smooth2dInterior => "smooth-2d-interior",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ProfileId::Smooth2dInterior => 2,
            _ => 1,
        }
    }

    fn lower_band(self) -> Option<f64> {
        match self {
            ProfileId::LowerContact1d | ProfileId::DoubleContact1d => Some(LOWER_BAND_CENTER),
            _ => None,
        }
    }

    fn upper_band(self) -> Option<f64> {
        match self {
            ProfileId::UpperContact1d | ProfileId::DoubleContact1d => Some(UPPER_BAND_CENTER),
            _ => None,
        }
    }

    /// True when the exact solution touches an obstacle somewhere.
    pub fn has_contact(self) -> bool {
        self.lower_band().is_some() || self.upper_band().is_some()
    }
}

impl fmt::Display for ProfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileId {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProfileId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| SolverError::UnknownProfile(s.to_string()))
    }
}

/// Which field of a profile a [`ProfileField`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileRole {
    Solution,
    RunningCost,
    PsiUpper,
    PsiLower,
}

/// One scalar field of a profile placed on a box, times `scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileField {
    pub profile: ProfileId,
    pub role: ProfileRole,
    pub center: Vector,
    pub half_width: Vector,
    pub scale: f64,
}

/// Value, gradient and Hessian of `w*` in state coordinates.
struct Jet {
    value: f64,
    grad: Vector,
    hess: Matrix,
}

/// `max(0, |s| − ℓ)²`: zero on the band, quadratic outside.
fn separation(s: f64) -> f64 {
    let t = (s.abs() - BAND_HALF_WIDTH).max(0.0);
    t * t
}

/// `max(0, ℓ² − s²)/ℓ²`: positive inside the band only.
fn bump(s: f64) -> f64 {
    (BAND_HALF_WIDTH * BAND_HALF_WIDTH - s * s).max(0.0) / (BAND_HALF_WIDTH * BAND_HALF_WIDTH)
}

impl ProfileField {
    pub fn new(profile: ProfileId, role: ProfileRole, domain: &BoxDomain) -> Self {
        let mut center = ZERO_VECTOR;
        let mut half_width = ZERO_VECTOR;
        for k in 0..domain.dim {
            center[k] = 0.5 * (domain.lower[k] + domain.upper[k]);
            half_width[k] = 0.5 * domain.width(k);
        }
        ProfileField {
            profile,
            role,
            center,
            half_width,
            scale: 1.0,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        ProfileField {
            scale: self.scale * k,
            ..self.clone()
        }
    }

    fn scaled_coords(&self, x: &[f64]) -> Vector {
        let mut u = ZERO_VECTOR;
        for k in 0..self.profile.dim() {
            u[k] = (x[k] - self.center[k]) / self.half_width[k];
        }
        u
    }

    fn jet(&self, x: &[f64]) -> Jet {
        let u = self.scaled_coords(x);
        let l = self.half_width;
        match self.profile.dim() {
            1 => {
                let (s, c) = (PI * u[0]).sin_cos();
                let (sh, ch) = (0.5 * PI * u[0]).sin_cos();
                let value = 0.4 * c + 0.2 * sh;
                let du = -0.4 * PI * s + 0.1 * PI * ch;
                let duu = -0.4 * PI * PI * c - 0.05 * PI * PI * sh;
                Jet {
                    value,
                    grad: [du / l[0], 0.0],
                    hess: [[duu / (l[0] * l[0]), 0.0], [0.0, 0.0]],
                }
            }
            _ => {
                let (su, cu) = (PI * u[0]).sin_cos();
                let (svh, cvh) = (0.5 * PI * u[1]).sin_cos();
                let (sv, cv) = (PI * u[1]).sin_cos();
                let value = 0.4 * cu * cvh + 0.1 * sv;
                let du = -0.4 * PI * su * cvh;
                let dv = -0.2 * PI * cu * svh + 0.1 * PI * cv;
                let duu = -0.4 * PI * PI * cu * cvh;
                let dvv = -0.1 * PI * PI * cu * cvh - 0.1 * PI * PI * sv;
                let duv = 0.2 * PI * PI * su * svh;
                let cross = duv / (l[0] * l[1]);
                Jet {
                    value,
                    grad: [du / l[0], dv / l[1]],
                    hess: [[duu / (l[0] * l[0]), cross], [cross, dvv / (l[1] * l[1])]],
                }
            }
        }
    }

    fn unscaled(&self, x: &[f64]) -> f64 {
        let u = self.scaled_coords(x);
        let w = self.jet(x);
        match self.role {
            ProfileRole::Solution => w.value,
            ProfileRole::PsiLower => match self.profile.lower_band() {
                Some(c) => w.value - SEPARATION * separation(u[0] - c),
                None => w.value - GAP,
            },
            ProfileRole::PsiUpper => match self.profile.upper_band() {
                Some(c) => w.value + SEPARATION * separation(u[0] - c),
                None => w.value + GAP,
            },
            ProfileRole::RunningCost => {
                let dim = self.profile.dim();
                let a = profile_diffusion(dim);
                let mut generator = 0.0;
                for i in 0..dim {
                    // b = −(x − m)
                    generator -= (x[i] - self.center[i]) * w.grad[i];
                    for j in 0..dim {
                        generator += 0.5 * a[i][j] * w.hess[i][j];
                    }
                }
                let mut r = PROFILE_DISCOUNT * w.value - generator;
                if let Some(c) = self.profile.lower_band() {
                    r -= BUMP * bump(u[0] - c);
                }
                if let Some(c) = self.profile.upper_band() {
                    r += BUMP * bump(u[0] - c);
                }
                r
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.scale * self.unscaled(x)
    }
}

fn profile_diffusion(dim: usize) -> Matrix {
    if dim == 1 {
        [[PROFILE_DIFFUSION_1D, 0.0], [0.0, 0.0]]
    } else {
        PROFILE_DIFFUSION_2D
    }
}

/// The profile's instance on `domain`, with Dirichlet data equal to `w*`.
pub fn manufactured_spec(profile: ProfileId, domain: &BoxDomain) -> Result<ProblemSpec, SolverError> {
    if domain.dim != profile.dim() {
        return Err(SolverError::ProfileDimension {
            profile: profile.name(),
            expected: profile.dim(),
            found: domain.dim,
        });
    }
    let dim = profile.dim();
    let field = |role| ScalarFamily::Profile(ProfileField::new(profile, role, domain));
    let mut matrix = [[0.0; 2]; 2];
    let mut offset = ZERO_VECTOR;
    for k in 0..dim {
        matrix[k][k] = -1.0;
        offset[k] = 0.5 * (domain.lower[k] + domain.upper[k]);
    }
    let coefficients = CoefficientField {
        drift: Drift::uncontrolled(DriftFamily::Affine { matrix, offset }),
        diffusion: Diffusion::uncontrolled(DiffusionFamily::Constant(profile_diffusion(dim))),
        running_cost: Cost::uncontrolled(field(ProfileRole::RunningCost)),
        bounds: BoundEstimates::default(),
    };
    let obstacles = ObstaclePair {
        psi_upper: field(ProfileRole::PsiUpper),
        psi_lower: field(ProfileRole::PsiLower),
    };
    Ok(ProblemSpec::new(
        coefficients,
        obstacles,
        [ControlSet::singleton(), ControlSet::singleton()],
        PROFILE_DISCOUNT,
        *domain,
        BoundaryCondition::Dirichlet(Some(field(ProfileRole::Solution))),
    )?)
}

/// Instance and exact solution for the named profile on `lattice`'s box.
pub fn manufactured_instance(profile: &str, lattice: &Lattice) -> Result<(ProblemSpec, GridFunction), SolverError> {
    let id: ProfileId = profile.parse()?;
    let domain = BoxDomain::new(lattice.lower(), lattice.upper())?;
    let spec = manufactured_spec(id, &domain)?;
    let exact = ProfileField::new(id, ProfileRole::Solution, &domain);
    Ok((spec, GridFunction::from_fn(*lattice, |x| exact.value(x))))
}

//! Problem instances: coefficient fields, obstacles, finite control sets and
//! the discount rate, plus validation of the standing assumptions and the
//! stop-symbol extension of the control sets.

pub mod families;
mod validate;

pub use families::{
    BoundEstimates, CoefficientField, Cost, Diffusion, DiffusionFamily, Drift, DriftFamily, ObstaclePair,
    ScalarFamily,
};
pub use validate::{validate_problem, AssumptionCheck, CheckStatus, ValidationReport};

use thiserror::Error;

use crate::linalg::{Matrix, Vector, MAX_DIM, ZERO_MATRIX, ZERO_VECTOR};

/// Largest supported control-vector dimension.
pub const MAX_CONTROL_DIM: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("unsupported state dimension {0} (expected 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("discount must be positive, got {0}")]
    InvalidDiscount(f64),
    #[error("computational box has non-positive extent on axis {axis} ([{lower}, {upper}])")]
    EmptyBox { axis: usize, lower: f64, upper: f64 },
    #[error("control set for player {player} is empty")]
    EmptyControlSet { player: usize },
    #[error("control set for player {player} repeats point {index}")]
    DuplicateControl { player: usize, index: usize },
    #[error("control set for player {player}: point {index} has dimension {found}, expected {expected} (max {MAX_CONTROL_DIM})")]
    ControlDimension {
        player: usize,
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("obstacle order violated at node {node} (x = {x:?}): lower {lower} > upper {upper}")]
    ObstacleOrder {
        node: usize,
        x: Vec<f64>,
        lower: f64,
        upper: f64,
    },
    #[error("diffusion matrix not positive semidefinite at x = {x:?}: smallest eigenvalue {min_eigenvalue}")]
    NotPositiveSemidefinite { x: Vec<f64>, min_eigenvalue: f64 },
    #[error("diffusion matrix not symmetric at x = {x:?}")]
    NotSymmetric { x: Vec<f64> },
}

/// An element of a (possibly extended) control set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Control<'a> {
    Point(&'a [f64]),
    /// The appended stop symbol ω.
    Stop,
}

impl Control<'_> {
    pub fn is_stop(&self) -> bool {
        matches!(self, Control::Stop)
    }
}

/// Finite, ordered list of control points, optionally followed by the stop
/// symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSet {
    points: Vec<Vec<f64>>,
    stop_symbol: bool,
}

impl ControlSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, ProblemError> {
        Self::for_player(points, 1)
    }

    pub(crate) fn for_player(points: Vec<Vec<f64>>, player: usize) -> Result<Self, ProblemError> {
        if points.is_empty() {
            return Err(ProblemError::EmptyControlSet { player });
        }
        let expected = points[0].len();
        for (index, p) in points.iter().enumerate() {
            if p.len() != expected || p.len() > MAX_CONTROL_DIM {
                return Err(ProblemError::ControlDimension {
                    player,
                    index,
                    expected,
                    found: p.len(),
                });
            }
            if points[..index].iter().any(|q| q == p) {
                return Err(ProblemError::DuplicateControl { player, index });
            }
        }
        Ok(ControlSet {
            points,
            stop_symbol: false,
        })
    }

    /// A single zero-dimensional control (uncontrolled problems).
    pub fn singleton() -> Self {
        ControlSet {
            points: vec![Vec::new()],
            stop_symbol: false,
        }
    }

    /// Number of entries, including the stop symbol when present.
    pub fn len(&self) -> usize {
        self.points.len() + usize::from(self.stop_symbol)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn base_len(&self) -> usize {
        self.points.len()
    }

    pub fn has_stop_symbol(&self) -> bool {
        self.stop_symbol
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn get(&self, index: usize) -> Control<'_> {
        if index < self.points.len() {
            Control::Point(&self.points[index])
        } else {
            assert!(self.stop_symbol && index == self.points.len(), "control index out of range");
            Control::Stop
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Control<'_>> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    /// `U ∪ {ω}`; a set that already carries the sentinel is returned as is.
    pub fn extended(&self) -> ControlSet {
        ControlSet {
            points: self.points.clone(),
            stop_symbol: true,
        }
    }
}

/// Rectangular computational domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxDomain {
    pub dim: usize,
    pub lower: Vector,
    pub upper: Vector,
}

impl BoxDomain {
    pub fn new(lower: &[f64], upper: &[f64]) -> Result<Self, ProblemError> {
        let dim = lower.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(ProblemError::UnsupportedDimension(dim));
        }
        if upper.len() != dim {
            return Err(ProblemError::DimensionMismatch {
                expected: dim,
                found: upper.len(),
            });
        }
        for axis in 0..dim {
            if !(upper[axis] > lower[axis]) {
                return Err(ProblemError::EmptyBox {
                    axis,
                    lower: lower[axis],
                    upper: upper[axis],
                });
            }
        }
        Ok(BoxDomain {
            dim,
            lower: families::pad(lower),
            upper: families::pad(upper),
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|k| x[k] >= self.lower[k] && x[k] <= self.upper[k])
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }
}

/// Treatment of the truncation boundary of the computational box.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    /// Pin boundary nodes to the given data. `None` drops the derivative
    /// terms there instead, pinning `v` to `median(H(x, 0, 0), λψ₂, λψ₁)/λ`;
    /// this is exact whenever the solution is locally constant near the
    /// boundary and reduces to `clamp(r/λ, ψ₂, ψ₁)` for singleton controls.
    Dirichlet(Option<ScalarFamily>),
    /// One-sided first differences and shifted second differences. Not
    /// monotone at the boundary.
    OneSided,
}

impl Default for BoundaryCondition {
    fn default() -> Self {
        BoundaryCondition::Dirichlet(None)
    }
}

/// A fully specified instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub dim: usize,
    pub coefficients: CoefficientField,
    pub obstacles: ObstaclePair,
    pub controls: [ControlSet; 2],
    pub discount: f64,
    pub domain: BoxDomain,
    pub boundary: BoundaryCondition,
}

impl ProblemSpec {
    pub fn new(
        coefficients: CoefficientField,
        obstacles: ObstaclePair,
        controls: [ControlSet; 2],
        discount: f64,
        domain: BoxDomain,
        boundary: BoundaryCondition,
    ) -> Result<Self, ProblemError> {
        if !(discount > 0.0) || !discount.is_finite() {
            return Err(ProblemError::InvalidDiscount(discount));
        }
        Ok(ProblemSpec {
            dim: domain.dim,
            coefficients,
            obstacles,
            controls,
            discount,
            domain,
            boundary,
        })
    }

    pub fn is_extended(&self) -> bool {
        self.controls[0].has_stop_symbol() && self.controls[1].has_stop_symbol()
    }

    /// Both players hold a single (non-stop) control.
    pub fn is_uncontrolled(&self) -> bool {
        self.controls[0].base_len() == 1 && self.controls[1].base_len() == 1
    }

    pub fn drift(&self, x: &[f64], u1: Control<'_>, u2: Control<'_>) -> Vector {
        match (u1, u2) {
            (Control::Point(a), Control::Point(b)) => self.coefficients.drift.eval(x, a, b, self.dim),
            _ => ZERO_VECTOR,
        }
    }

    pub fn diffusion(&self, x: &[f64], u1: Control<'_>, u2: Control<'_>) -> Matrix {
        match (u1, u2) {
            (Control::Point(a), Control::Point(b)) => self.coefficients.diffusion.eval(x, a, b, self.dim),
            _ => ZERO_MATRIX,
        }
    }

    /// Running cost; on the extended sets `r̄(x, ·, ω₂) = λψ₂(x)` takes
    /// precedence over `r̄(x, ω₁, u₂) = λψ₁(x)` at the joint pair.
    pub fn running_cost(&self, x: &[f64], u1: Control<'_>, u2: Control<'_>) -> f64 {
        match (u1, u2) {
            (_, Control::Stop) => self.discount * self.psi_lower(x),
            (Control::Stop, Control::Point(_)) => self.discount * self.psi_upper(x),
            (Control::Point(a), Control::Point(b)) => self.coefficients.running_cost.eval(x, a, b),
        }
    }

    pub fn psi_upper(&self, x: &[f64]) -> f64 {
        self.obstacles.psi_upper.value(x)
    }

    pub fn psi_lower(&self, x: &[f64]) -> f64 {
        self.obstacles.psi_lower.value(x)
    }

    /// Running cost at the first control pair.
    pub fn first_pair_cost(&self, x: &[f64]) -> f64 {
        self.running_cost(x, self.controls[0].get(0), self.controls[1].get(0))
    }

    /// `clamp(r/λ, ψ₂, ψ₁)` at the first control pair; the solver's initial
    /// guess.
    pub fn clamped_cost_ratio(&self, x: &[f64]) -> f64 {
        let lo = self.psi_lower(x);
        let hi = self.psi_upper(x);
        (self.first_pair_cost(x) / self.discount).max(lo).min(hi)
    }

    /// Multiplies the running cost and both obstacles by `k > 0`.
    pub fn with_payoffs_scaled(&self, k: f64) -> ProblemSpec {
        let mut out = self.clone();
        out.coefficients.running_cost = self.coefficients.running_cost.scaled(k);
        out.obstacles.psi_upper = self.obstacles.psi_upper.scaled(k);
        out.obstacles.psi_lower = self.obstacles.psi_lower.scaled(k);
        if let BoundaryCondition::Dirichlet(Some(g)) = &self.boundary {
            out.boundary = BoundaryCondition::Dirichlet(Some(g.scaled(k)));
        }
        out
    }
}

/// Returns the instance with `Ūᵢ = Uᵢ ∪ {ωᵢ}`. Drift and diffusion vanish
/// whenever either argument is a stop symbol; the running cost becomes
/// `λψ₁` at `(ω₁, u₂)` and `λψ₂` at `(·, ω₂)`.
pub fn extend_coefficients(spec: &ProblemSpec) -> ProblemSpec {
    let mut out = spec.clone();
    out.controls = [spec.controls[0].extended(), spec.controls[1].extended()];
    out
}

/// The stop-extended sets grow by exactly one element per player.
pub fn extension_sizes(spec: &ProblemSpec) -> [(usize, usize); 2] {
    let ext = extend_coefficients(spec);
    [
        (spec.controls[0].base_len(), ext.controls[0].len()),
        (spec.controls[1].base_len(), ext.controls[1].len()),
    ]
}


#[cfg(test)]
mod tests {
    use super::test_support::constant_1d;
    use super::*;

    #[test]
    fn control_set_rejects_duplicates_and_empty() {
        assert_eq!(
            ControlSet::new(vec![]).unwrap_err(),
            ProblemError::EmptyControlSet { player: 1 }
        );
        assert!(matches!(
            ControlSet::new(vec![vec![1.0], vec![1.0]]),
            Err(ProblemError::DuplicateControl { index: 1, .. })
        ));
        assert!(matches!(
            ControlSet::new(vec![vec![0.0; 4]]),
            Err(ProblemError::ControlDimension { .. })
        ));
    }

    #[test]
    fn extension_appends_one_sentinel_last() {
        let set = ControlSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let ext = set.extended();
        assert_eq!(ext.len(), set.len() + 1);
        assert!(ext.get(2).is_stop());
        assert_eq!(ext.iter().filter(|c| c.is_stop()).count(), 1);
        assert_eq!(ext.extended(), ext);
    }

    #[test]
    fn extended_coefficients_at_stop_symbols() {
        let spec = constant_1d(2.0, 3.0, 5.0, -1.0, 4.0, 0.5);
        let ext = extend_coefficients(&spec);
        let x = [0.3];
        let u = ext.controls[0].get(0);
        let v = ext.controls[1].get(0);
        let w1 = ext.controls[0].get(1);
        let w2 = ext.controls[1].get(1);
        assert_eq!(ext.drift(&x, w1, v), ZERO_VECTOR);
        assert_eq!(ext.drift(&x, u, w2), ZERO_VECTOR);
        assert_eq!(ext.diffusion(&x, u, w2), ZERO_MATRIX);
        assert_eq!(ext.diffusion(&x, w1, v), ZERO_MATRIX);
        assert_eq!(ext.running_cost(&x, w1, v), 0.5 * 4.0);
        assert_eq!(ext.running_cost(&x, u, w2), 0.5 * -1.0);
        // the joint pair follows r̄(x, ·, ω₂) ≡ λψ₂
        assert_eq!(ext.running_cost(&x, w1, w2), 0.5 * -1.0);
        // original coefficients untouched on U₁ × U₂
        assert_eq!(ext.drift(&x, u, v), spec.drift(&x, u, v));
        assert_eq!(ext.diffusion(&x, u, v), spec.diffusion(&x, u, v));
        assert_eq!(ext.running_cost(&x, u, v), spec.running_cost(&x, u, v));
    }

    #[test]
    fn discount_must_be_positive() {
        let spec = constant_1d(0.0, 0.0, 0.0, -1.0, 1.0, 1.0);
        let err = ProblemSpec::new(
            spec.coefficients.clone(),
            spec.obstacles.clone(),
            spec.controls.clone(),
            0.0,
            spec.domain,
            BoundaryCondition::default(),
        )
        .unwrap_err();
        assert_eq!(err, ProblemError::InvalidDiscount(0.0));
        assert!(matches!(
            BoxDomain::new(&[0.0], &[0.0]),
            Err(ProblemError::EmptyBox { .. })
        ));
        assert!(matches!(
            BoxDomain::new(&[0.0; 3], &[1.0; 3]),
            Err(ProblemError::UnsupportedDimension(3))
        ));
    }

    #[test]
    fn extension_sizes_grow_by_one() {
        let spec = constant_1d(1.0, 0.0, 0.0, -1.0, 1.0, 1.0);
        for (base, ext) in extension_sizes(&spec) {
            assert_eq!(ext, base + 1);
        }
    }
}

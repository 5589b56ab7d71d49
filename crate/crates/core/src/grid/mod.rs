//! Rectangular lattices, grid functions and monotone finite-difference
//! stencils.
//!
//! Nodes are numbered row-major with the first axis outermost:
//! `index = i₀ · n₁ + i₁` in two dimensions.

mod csv;
mod stencil;

pub use self::csv::{read_grid_csv, write_grid_csv};
pub use stencil::{
    apply_row, cfl_timestep, check_monotone_stencil, operator_row, second_difference, upwind_gradient, StencilRow,
    DEFAULT_SAFETY_FACTOR,
};

use thiserror::Error;

use crate::linalg::{Vector, MAX_DIM, ZERO_VECTOR};
use crate::problem::BoxDomain;

/// Fraction of the box width trimmed from each side for error reporting.
pub const INTERIOR_MARGIN: f64 = 0.1;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("axis {axis} needs at least 3 nodes, got {nodes}")]
    TooFewNodes { axis: usize, nodes: usize },
    #[error("lattice dimension {lattice} does not match {found}")]
    DimensionMismatch { lattice: usize, found: usize },
    #[error("grid function needs {expected} values, got {found}")]
    ValueCount { expected: usize, found: usize },
    #[error("non-finite grid value at node {node}")]
    NonFinite { node: usize },
    #[error(
        "MonotonicityViolation at node {node} (x = {x:?}): cross diffusion |a12| = {cross} exceeds the \
         diagonal-dominance limit {limit}"
    )]
    MonotonicityViolation {
        node: usize,
        x: Vec<f64>,
        cross: f64,
        limit: f64,
    },
    #[error("grid CSV line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    dim: usize,
    lower: Vector,
    upper: Vector,
    nodes: [usize; MAX_DIM],
    spacing: Vector,
}

impl Lattice {
    pub fn new(domain: &BoxDomain, nodes: &[usize]) -> Result<Self, GridError> {
        Self::from_bounds(&domain.lower[..domain.dim], &domain.upper[..domain.dim], nodes)
    }

    pub fn from_bounds(lower: &[f64], upper: &[f64], nodes: &[usize]) -> Result<Self, GridError> {
        let dim = lower.len();
        if nodes.len() != dim || upper.len() != dim || !(1..=MAX_DIM).contains(&dim) {
            return Err(GridError::DimensionMismatch {
                lattice: dim,
                found: nodes.len(),
            });
        }
        let mut lat = Lattice {
            dim,
            lower: ZERO_VECTOR,
            upper: ZERO_VECTOR,
            nodes: [1; MAX_DIM],
            spacing: ZERO_VECTOR,
        };
        for axis in 0..dim {
            if nodes[axis] < 3 {
                return Err(GridError::TooFewNodes {
                    axis,
                    nodes: nodes[axis],
                });
            }
            lat.lower[axis] = lower[axis];
            lat.upper[axis] = upper[axis];
            lat.nodes[axis] = nodes[axis];
            lat.spacing[axis] = (upper[axis] - lower[axis]) / (nodes[axis] - 1) as f64;
        }
        Ok(lat)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper[..self.dim]
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing().iter().cloned().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.nodes().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self, index: usize) -> [usize; MAX_DIM] {
        if self.dim == 1 {
            [index, 0]
        } else {
            [index / self.nodes[1], index % self.nodes[1]]
        }
    }

    pub fn index(&self, coords: [usize; MAX_DIM]) -> usize {
        if self.dim == 1 {
            coords[0]
        } else {
            coords[0] * self.nodes[1] + coords[1]
        }
    }

    pub fn point(&self, index: usize) -> Vector {
        let c = self.coords(index);
        let mut x = ZERO_VECTOR;
        for k in 0..self.dim {
            x[k] = if c[k] + 1 == self.nodes[k] {
                self.upper[k]
            } else {
                self.lower[k] + c[k] as f64 * self.spacing[k]
            };
        }
        x
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        let c = self.coords(index);
        (0..self.dim).any(|k| c[k] == 0 || c[k] + 1 == self.nodes[k])
    }

    /// Neighbouring node along `axis` at `offset ∈ {-1, +1}`, if inside.
    pub fn neighbor(&self, index: usize, axis: usize, offset: isize) -> Option<usize> {
        let mut c = self.coords(index);
        let moved = c[axis] as isize + offset;
        if moved < 0 || moved as usize >= self.nodes[axis] {
            return None;
        }
        c[axis] = moved as usize;
        Some(self.index(c))
    }

    pub fn corners(&self) -> Vec<Vector> {
        let mut out = Vec::new();
        for mask in 0..(1usize << self.dim) {
            let mut x = ZERO_VECTOR;
            for k in 0..self.dim {
                x[k] = if mask & (1 << k) == 0 { self.lower[k] } else { self.upper[k] };
            }
            out.push(x);
        }
        out
    }

    /// Whether the node lies in the box shrunk by `margin` × width per side.
    pub fn in_interior_subbox(&self, index: usize, margin: f64) -> bool {
        let x = self.point(index);
        (0..self.dim).all(|k| {
            let w = self.upper[k] - self.lower[k];
            x[k] >= self.lower[k] + margin * w - 1e-12 * w && x[k] <= self.upper[k] - margin * w + 1e-12 * w
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|k| x[k] >= self.lower[k] && x[k] <= self.upper[k])
    }

    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let mut c = [0usize; MAX_DIM];
        for k in 0..self.dim {
            let t = ((x[k] - self.lower[k]) / self.spacing[k]).round();
            c[k] = t.clamp(0.0, (self.nodes[k] - 1) as f64) as usize;
        }
        self.index(c)
    }

    /// Same box with `(n − 1)·factor + 1` nodes per axis.
    pub fn refined(&self, factor: usize) -> Lattice {
        let nodes: Vec<usize> = self.nodes().iter().map(|n| (n - 1) * factor + 1).collect();
        Lattice::from_bounds(self.lower(), self.upper(), &nodes).expect("refinement keeps a valid lattice")
    }
}

/// Values of a scalar function at the nodes of a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    lattice: Lattice,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(lattice: Lattice, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != lattice.len() {
            return Err(GridError::ValueCount {
                expected: lattice.len(),
                found: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { node });
        }
        Ok(GridFunction { lattice, values })
    }

    pub fn from_fn(lattice: Lattice, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = lattice.dim();
        let values = (0..lattice.len()).map(|i| f(&lattice.point(i)[..dim])).collect();
        GridFunction { lattice, values }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Multilinear interpolation; `None` outside the lattice box.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let lat = &self.lattice;
        if !lat.contains(x) {
            return None;
        }
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for k in 0..lat.dim {
            let t = (x[k] - lat.lower[k]) / lat.spacing[k];
            let cell = (t.floor().max(0.0) as usize).min(lat.nodes[k] - 2);
            base[k] = cell;
            frac[k] = (t - cell as f64).clamp(0.0, 1.0);
        }
        if lat.dim == 1 {
            let v0 = self.values[base[0]];
            let v1 = self.values[base[0] + 1];
            return Some(v0 + frac[0] * (v1 - v0));
        }
        let at = |i: usize, j: usize| self.values[lat.index([base[0] + i, base[1] + j])];
        let (fx, fy) = (frac[0], frac[1]);
        let lo = at(0, 0) + fy * (at(0, 1) - at(0, 0));
        let hi = at(1, 0) + fy * (at(1, 1) - at(1, 0));
        Some(lo + fx * (hi - lo))
    }

    /// Largest `|self − other|` over nodes accepted by `filter`.
    pub fn max_abs_diff_where(&self, other: &GridFunction, filter: impl Fn(usize) -> bool) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .filter(|(i, _)| filter(*i))
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.max_abs_diff_where(other, |_| true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice_2d() -> Lattice {
        Lattice::from_bounds(&[-1.0, 0.0], &[1.0, 2.0], &[5, 3]).unwrap()
    }

    #[test]
    fn indexing_round_trips() {
        let lat = lattice_2d();
        assert_eq!(lat.len(), 15);
        for i in 0..lat.len() {
            assert_eq!(lat.index(lat.coords(i)), i);
        }
        assert_eq!(lat.point(lat.index([4, 2])), [1.0, 2.0]);
        assert_eq!(lat.point(1), [-1.0, 1.0]);
        assert!(lat.is_boundary(0));
        assert!(!lat.is_boundary(lat.index([2, 1])));
        assert_eq!(lat.neighbor(0, 0, -1), None);
        assert_eq!(lat.neighbor(0, 1, 1), Some(1));
        assert_eq!(lat.corners().len(), 4);
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(matches!(
            Lattice::from_bounds(&[0.0], &[1.0], &[2]),
            Err(GridError::TooFewNodes { axis: 0, nodes: 2 })
        ));
    }

    #[test]
    fn interpolation_is_exact_on_bilinear() {
        let lat = lattice_2d();
        let f = |x: &[f64]| 0.5 + 2.0 * x[0] - x[1] + 0.75 * x[0] * x[1];
        let g = GridFunction::from_fn(lat, f);
        for p in [[-0.3, 0.2], [0.99, 1.7], [1.0, 2.0], [-1.0, 0.0]] {
            assert!((g.interpolate(&p).unwrap() - f(&p)).abs() < 1e-13);
        }
        assert_eq!(g.interpolate(&[1.5, 0.0]), None);
    }

    #[test]
    fn subbox_trims_ten_percent() {
        let lat = Lattice::from_bounds(&[0.0], &[1.0], &[11]).unwrap();
        let inside: Vec<usize> = (0..11).filter(|&i| lat.in_interior_subbox(i, INTERIOR_MARGIN)).collect();
        assert_eq!(inside, (1..=9).collect::<Vec<_>>());
    }

    #[test]
    fn grid_function_rejects_bad_values() {
        let lat = Lattice::from_bounds(&[0.0], &[1.0], &[3]).unwrap();
        assert!(matches!(
            GridFunction::new(lat, vec![0.0; 2]),
            Err(GridError::ValueCount { .. })
        ));
        assert!(matches!(
            GridFunction::new(lat, vec![0.0, f64::NAN, 1.0]),
            Err(GridError::NonFinite { node: 1 })
        ));
    }
}

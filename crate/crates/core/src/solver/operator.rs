//! Precomputed discrete Hamiltonian: one stencil row and one running-cost
//! value per (node, control pair), stored contiguously.

use rayon::prelude::*;

use super::SolverError;
use crate::grid::{operator_row, Lattice};
use crate::hamiltonian::{median3, Sign};
use crate::problem::{BoundaryCondition, ProblemError, ProblemSpec};

/// Sweeps over at least this many nodes are split across worker threads.
pub const PARALLEL_THRESHOLD: usize = 4096;
const CHUNK: usize = 1024;

pub(crate) struct DiscreteOperator {
    pub lattice: Lattice,
    pub discount: f64,
    n1: usize,
    n2: usize,
    /// `offsets[node * pairs + pair]..offsets[.. + 1]` indexes `cols`/`weights`.
    offsets: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<f64>,
    cost: Vec<f64>,
    pub psi_lower: Vec<f64>,
    pub psi_upper: Vec<f64>,
    /// Prescribed value of each Dirichlet node.
    fixed: Vec<Option<f64>>,
    /// Boundary nodes whose derivative terms are dropped.
    frozen: Vec<bool>,
}

impl DiscreteOperator {
    pub fn build(spec: &ProblemSpec, lattice: &Lattice) -> Result<Self, SolverError> {
        if lattice.dim() != spec.dim {
            return Err(ProblemError::DimensionMismatch {
                expected: spec.dim,
                found: lattice.dim(),
            }
            .into());
        }
        let dim = spec.dim;
        let (n1, n2) = (spec.controls[0].len(), spec.controls[1].len());
        let pairs = n1 * n2;
        let count = lattice.len();
        let mut offsets = Vec::with_capacity(count * pairs + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        let mut cost = Vec::with_capacity(count * pairs);
        let mut psi_lower = Vec::with_capacity(count);
        let mut psi_upper = Vec::with_capacity(count);
        let mut fixed = Vec::with_capacity(count);
        let mut frozen = Vec::with_capacity(count);
        offsets.push(0);
        for node in 0..count {
            let point = lattice.point(node);
            let x = &point[..dim];
            let (lo, hi) = (spec.psi_lower(x), spec.psi_upper(x));
            if !(lo <= hi) {
                return Err(ProblemError::ObstacleOrder {
                    node,
                    x: x.to_vec(),
                    lower: lo,
                    upper: hi,
                }
                .into());
            }
            psi_lower.push(lo);
            psi_upper.push(hi);
            let (value, freeze) = match (&spec.boundary, lattice.is_boundary(node)) {
                (BoundaryCondition::Dirichlet(Some(g)), true) => (Some(g.value(x)), false),
                (BoundaryCondition::Dirichlet(None), true) => (None, true),
                _ => (None, false),
            };
            let pinned = value.is_some() || freeze;
            fixed.push(value);
            frozen.push(freeze);
            for u1 in spec.controls[0].iter() {
                for u2 in spec.controls[1].iter() {
                    cost.push(spec.running_cost(x, u1, u2));
                    if !pinned {
                        let row = operator_row(lattice, node, &spec.drift(x, u1, u2), &spec.diffusion(x, u1, u2))?;
                        for (j, w) in row.entries {
                            cols.push(j as u32);
                            weights.push(w);
                        }
                    }
                    offsets.push(cols.len());
                }
            }
        }
        Ok(DiscreteOperator {
            lattice: *lattice,
            discount: spec.discount,
            n1,
            n2,
            offsets,
            cols,
            weights,
            cost,
            psi_lower,
            psi_upper,
            fixed,
            frozen,
        })
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    /// Value of a pinned boundary node for the given sign, `None` for nodes
    /// that are updated by the scheme.
    pub fn pinned(&self, node: usize, sign: Sign) -> Option<f64> {
        if self.frozen[node] {
            // the row is empty, so only the running cost enters
            Some(self.clamped(node, &[], sign) / self.discount)
        } else {
            self.fixed[node]
        }
    }

    #[inline]
    fn inner(&self, slot: usize, v: &[f64]) -> f64 {
        let (a, b) = (self.offsets[slot], self.offsets[slot + 1]);
        let mut acc = 0.0;
        for k in a..b {
            acc += self.weights[k] * v[self.cols[k] as usize];
        }
        acc + self.cost[slot]
    }

    /// `H_h^sign(v)` at `node`.
    #[inline]
    pub fn hamiltonian(&self, node: usize, v: &[f64], sign: Sign) -> f64 {
        let (n1, n2) = (self.n1, self.n2);
        let base = node * n1 * n2;
        if n1 * n2 == 1 {
            return self.inner(base, v);
        }
        match sign {
            Sign::Plus => {
                let mut best = f64::INFINITY;
                for i1 in 0..n1 {
                    let mut m = f64::NEG_INFINITY;
                    for i2 in 0..n2 {
                        m = m.max(self.inner(base + i1 * n2 + i2, v));
                    }
                    best = best.min(m);
                }
                best
            }
            Sign::Minus => {
                let mut best = f64::NEG_INFINITY;
                for i2 in 0..n2 {
                    let mut m = f64::INFINITY;
                    for i1 in 0..n1 {
                        m = m.min(self.inner(base + i1 * n2 + i2, v));
                    }
                    best = best.max(m);
                }
                best
            }
        }
    }

    /// `median(H_h v, λψ₂, λψ₁)` at `node`.
    #[inline]
    pub fn clamped(&self, node: usize, v: &[f64], sign: Sign) -> f64 {
        let h = self.hamiltonian(node, v, sign);
        median3(h, self.discount * self.psi_lower[node], self.discount * self.psi_upper[node])
    }

    /// Applies `step(node, v) -> (new value, |residual|)` at every node into
    /// `out` and returns the largest residual. Chunks are independent, so the
    /// result does not depend on the number of worker threads.
    pub fn sweep<F>(&self, v: &[f64], out: &mut [f64], step: F) -> f64
    where
        F: Fn(usize, &[f64]) -> (f64, f64) + Sync,
    {
        // NaN residuals must not be swallowed by `max`
        let combine = |a: f64, b: f64| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) };
        let run = |start: usize, chunk: &mut [f64]| {
            let mut worst = 0.0f64;
            for (k, slot) in chunk.iter_mut().enumerate() {
                let (value, residual) = step(start + k, v);
                *slot = value;
                worst = combine(worst, residual);
            }
            worst
        };
        if self.len() >= PARALLEL_THRESHOLD {
            out.par_chunks_mut(CHUNK)
                .enumerate()
                .map(|(c, chunk)| run(c * CHUNK, chunk))
                .reduce(|| 0.0, combine)
        } else {
            run(0, out)
        }
    }
}

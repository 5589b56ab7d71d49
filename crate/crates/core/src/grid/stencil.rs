use super::{GridError, GridFunction, Lattice};
use crate::linalg::{Matrix, Vector, MAX_DIM, ZERO_VECTOR};
use crate::problem::ProblemSpec;

/// Default fraction of the explicit stability limit used as pseudo-time step.
pub const DEFAULT_SAFETY_FACTOR: f64 = 0.9;

/// Direction of the one-sided difference used on `axis` for drift `b_k`:
/// forward for `b_k ≥ 0`, backward otherwise, flipped at a face where the
/// preferred neighbour does not exist.
fn upwind_offset(lattice: &Lattice, node: usize, axis: usize, drift: f64) -> isize {
    let preferred = if drift >= 0.0 { 1 } else { -1 };
    if lattice.neighbor(node, axis, preferred).is_some() {
        preferred
    } else {
        -preferred
    }
}

/// First-order upwind gradient at `node`.
pub fn upwind_gradient(v: &GridFunction, node: usize, drift: &[f64]) -> Vector {
    let lat = v.lattice();
    let mut g = ZERO_VECTOR;
    for (k, gk) in g.iter_mut().enumerate().take(lat.dim()) {
        let off = upwind_offset(lat, node, k, drift[k]);
        let nb = lat.neighbor(node, k, off).expect("lattice has at least 3 nodes per axis");
        *gk = off as f64 * (v.get(nb) - v.get(node)) / lat.spacing()[k];
    }
    g
}

/// Coordinates of the stencil centre along `axis`, shifted one node inward
/// on boundary faces.
fn shifted(lattice: &Lattice, coords: [usize; MAX_DIM], axes: &[usize]) -> [usize; MAX_DIM] {
    let mut c = coords;
    for &k in axes {
        c[k] = c[k].clamp(1, lattice.nodes()[k] - 2);
    }
    c
}

/// Checks `|a₁₂| ≤ min(a₁₁ h₂/h₁, a₂₂ h₁/h₂)`.
fn check_dominance(lattice: &Lattice, node: usize, a: &Matrix) -> Result<(), GridError> {
    if lattice.dim() < 2 {
        return Ok(());
    }
    let h = lattice.spacing();
    let cross = 0.5 * (a[0][1] + a[1][0]);
    let limit = (a[0][0] * h[1] / h[0]).min(a[1][1] * h[0] / h[1]);
    if cross.abs() > limit * (1.0 + 1e-12) + 1e-14 {
        return Err(GridError::MonotonicityViolation {
            node,
            x: lattice.point(node)[..2].to_vec(),
            cross: cross.abs(),
            limit,
        });
    }
    Ok(())
}

/// Weighted contributions `(node, weight)` of `½ tr(a X_h)`.
fn diffusion_terms(lattice: &Lattice, node: usize, a: &Matrix, out: &mut Vec<(usize, f64)>) -> Result<(), GridError> {
    let dim = lattice.dim();
    let h = lattice.spacing();
    let coords = lattice.coords(node);
    for k in 0..dim {
        let w = 0.5 * a[k][k] / (h[k] * h[k]);
        if w == 0.0 {
            continue;
        }
        let c = shifted(lattice, coords, &[k]);
        let mut up = c;
        up[k] += 1;
        let mut down = c;
        down[k] -= 1;
        out.push((lattice.index(up), w));
        out.push((lattice.index(c), -2.0 * w));
        out.push((lattice.index(down), w));
    }
    if dim == 2 {
        check_dominance(lattice, node, a)?;
        let cross = 0.5 * (a[0][1] + a[1][0]);
        if cross != 0.0 {
            // a₁₂ ∂xy with the sign-split seven-point stencil
            let c = shifted(lattice, coords, &[0, 1]);
            let at = |di: isize, dj: isize| lattice.index([(c[0] as isize + di) as usize, (c[1] as isize + dj) as usize]);
            let w = cross.abs() / (2.0 * h[0] * h[1]);
            out.push((at(0, 0), 2.0 * w));
            if cross > 0.0 {
                out.push((at(1, 1), w));
                out.push((at(-1, -1), w));
            } else {
                out.push((at(1, -1), w));
                out.push((at(-1, 1), w));
            }
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                out.push((at(di, dj), -w));
            }
        }
    }
    Ok(())
}

/// `½ tr(a X_h)` at `node`: central second differences per axis weighted by
/// `a_kk`, and the sign-split seven-point stencil for the cross term.
/// Boundary nodes use the stencil of the adjacent interior node.
pub fn second_difference(v: &GridFunction, node: usize, a: &Matrix) -> Result<f64, GridError> {
    let lat = v.lattice();
    let dim = lat.dim();
    let h = lat.spacing();
    let coords = lat.coords(node);
    let mut total = 0.0;
    for k in 0..dim {
        let c = shifted(lat, coords, &[k]);
        let mut up = c;
        up[k] += 1;
        let mut down = c;
        down[k] -= 1;
        let d2 = (v.get(lat.index(up)) - 2.0 * v.get(lat.index(c)) + v.get(lat.index(down))) / (h[k] * h[k]);
        total += 0.5 * a[k][k] * d2;
    }
    if dim == 2 {
        check_dominance(lat, node, a)?;
        let cross = 0.5 * (a[0][1] + a[1][0]);
        if cross != 0.0 {
            let c = shifted(lat, coords, &[0, 1]);
            let at = |di: isize, dj: isize| {
                v.get(lat.index([(c[0] as isize + di) as usize, (c[1] as isize + dj) as usize]))
            };
            let axis_sum = at(1, 0) + at(-1, 0) + at(0, 1) + at(0, -1);
            let dxy = if cross > 0.0 {
                (2.0 * at(0, 0) + at(1, 1) + at(-1, -1) - axis_sum) / (2.0 * h[0] * h[1])
            } else {
                -(2.0 * at(0, 0) + at(1, -1) + at(-1, 1) - axis_sum) / (2.0 * h[0] * h[1])
            };
            total += cross * dxy;
        }
    }
    Ok(total)
}

/// Linear form `v ↦ ½ tr(a X_h v) + b · D_h v` at one node, stored as
/// `(node, weight)` pairs with duplicates merged.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilRow {
    pub entries: Vec<(usize, f64)>,
}

impl StencilRow {
    /// Weight on the row's own node.
    pub fn diagonal(&self, node: usize) -> f64 {
        self.entries.iter().filter(|(j, _)| *j == node).map(|(_, w)| w).sum()
    }

    /// True when every off-diagonal weight is non-negative.
    pub fn is_monotone(&self, node: usize) -> bool {
        self.entries.iter().all(|(j, w)| *j == node || *w >= 0.0)
    }
}

pub fn operator_row(lattice: &Lattice, node: usize, drift: &[f64], a: &Matrix) -> Result<StencilRow, GridError> {
    let mut raw = Vec::with_capacity(12);
    diffusion_terms(lattice, node, a, &mut raw)?;
    for k in 0..lattice.dim() {
        if drift[k] == 0.0 {
            continue;
        }
        let off = upwind_offset(lattice, node, k, drift[k]);
        let nb = lattice.neighbor(node, k, off).expect("lattice has at least 3 nodes per axis");
        let w = drift[k] * off as f64 / lattice.spacing()[k];
        raw.push((nb, w));
        raw.push((node, -w));
    }
    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(raw.len());
    for (j, w) in raw {
        match entries.iter_mut().find(|(i, _)| *i == j) {
            Some(e) => e.1 += w,
            None => entries.push((j, w)),
        }
    }
    entries.sort_by_key(|(j, _)| *j);
    Ok(StencilRow { entries })
}

#[inline]
pub fn apply_row(row: &StencilRow, values: &[f64]) -> f64 {
    row.entries.iter().map(|(j, w)| w * values[*j]).sum()
}

/// Verifies diagonal dominance of the cross diffusion at every node and
/// every base control pair.
pub fn check_monotone_stencil(spec: &ProblemSpec, lattice: &Lattice) -> Result<(), GridError> {
    if lattice.dim() < 2 {
        return Ok(());
    }
    for node in 0..lattice.len() {
        let x = lattice.point(node);
        for u1 in spec.controls[0].points() {
            for u2 in spec.controls[1].points() {
                let a = spec.coefficients.diffusion.eval(&x[..2], u1, u2, 2);
                check_dominance(lattice, node, &a)?;
            }
        }
    }
    Ok(())
}

/// `Δτ = safety / (λ + max [Σ a_kk/h_k² + |a₁₂|/(h₁h₂) + Σ |b_k|/h_k])`,
/// the maximum taken over nodes and base control pairs.
pub fn cfl_timestep(spec: &ProblemSpec, lattice: &Lattice, safety: f64) -> f64 {
    let dim = lattice.dim();
    let h = lattice.spacing();
    let mut worst = 0.0f64;
    for node in 0..lattice.len() {
        let x = lattice.point(node);
        for u1 in spec.controls[0].points() {
            for u2 in spec.controls[1].points() {
                let a = spec.coefficients.diffusion.eval(&x[..dim], u1, u2, dim);
                let b = spec.coefficients.drift.eval(&x[..dim], u1, u2, dim);
                let mut rate = 0.0;
                for k in 0..dim {
                    rate += a[k][k] / (h[k] * h[k]) + b[k].abs() / h[k];
                }
                if dim == 2 {
                    rate += (0.5 * (a[0][1] + a[1][0])).abs() / (h[0] * h[1]);
                }
                worst = worst.max(rate);
            }
        }
    }
    safety / (spec.discount + worst)
}

//! Fixed-size vector and matrix helpers for state dimensions one and two.
//!
//! Every state-space quantity is stored in a `[f64; MAX_DIM]` (or the square
//! analogue) with unused trailing entries kept at zero, so one-dimensional
//! problems simply ignore the second slot.

/// Largest supported state dimension.
pub const MAX_DIM: usize = 2;

pub type Vector = [f64; MAX_DIM];
pub type Matrix = [[f64; MAX_DIM]; MAX_DIM];

pub const ZERO_VECTOR: Vector = [0.0; MAX_DIM];
pub const ZERO_MATRIX: Matrix = [[0.0; MAX_DIM]; MAX_DIM];

/// Copies the first `dim` entries of `x` into a padded vector.
pub fn to_vector(x: &[f64]) -> Vector {
    let mut out = ZERO_VECTOR;
    for (o, v) in out.iter_mut().zip(x) {
        *o = *v;
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `tr(a · x)` restricted to the leading `dim × dim` block.
pub fn trace_product(a: &Matrix, x: &Matrix, dim: usize) -> f64 {
    let mut t = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            t += a[i][j] * x[j][i];
        }
    }
    t
}

pub fn scale_matrix(a: &Matrix, s: f64) -> Matrix {
    let mut out = *a;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

pub fn is_symmetric(a: &Matrix, dim: usize, tol: f64) -> bool {
    (0..dim).all(|i| (0..dim).all(|j| (a[i][j] - a[j][i]).abs() <= tol))
}

/// Smallest eigenvalue of the symmetric leading block (closed form for d ≤ 2).
pub fn min_eigenvalue(a: &Matrix, dim: usize) -> f64 {
    match dim {
        1 => a[0][0],
        _ => {
            let mean = 0.5 * (a[0][0] + a[1][1]);
            let half_diff = 0.5 * (a[0][0] - a[1][1]);
            let off = 0.5 * (a[0][1] + a[1][0]);
            mean - half_diff.hypot(off)
        }
    }
}

/// Non-negative symmetric square root of a positive-semidefinite block.
///
/// For 2×2 blocks uses `√A = (A + s·I) / t` with `s = √det A` and
/// `t = √(tr A + 2s)`; a zero matrix maps to zero.
pub fn psd_sqrt(a: &Matrix, dim: usize) -> Matrix {
    match dim {
        1 => {
            let mut out = ZERO_MATRIX;
            out[0][0] = a[0][0].max(0.0).sqrt();
            out
        }
        _ => {
            let off = 0.5 * (a[0][1] + a[1][0]);
            let det = (a[0][0] * a[1][1] - off * off).max(0.0);
            let s = det.sqrt();
            let t2 = a[0][0] + a[1][1] + 2.0 * s;
            if t2 <= 0.0 {
                return ZERO_MATRIX;
            }
            let t = t2.sqrt();
            [[(a[0][0] + s) / t, off / t], [off / t, (a[1][1] + s) / t]]
        }
    }
}

/// `m · v` restricted to the leading block.
pub fn mat_vec(m: &Matrix, v: &Vector, dim: usize) -> Vector {
    let mut out = ZERO_VECTOR;
    for i in 0..dim {
        for j in 0..dim {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = ZERO_MATRIX;
        for i in 0..MAX_DIM {
            for j in 0..MAX_DIM {
                for k in 0..MAX_DIM {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    #[test]
    fn sqrt_squares_back() {
        let cases: [Matrix; 4] = [
            [[2.0, 0.5], [0.5, 1.0]],
            [[1.0, 1.0], [1.0, 1.0]],
            [[0.0, 0.0], [0.0, 3.0]],
            [[4.0, -1.5], [-1.5, 0.7]],
        ];
        for a in cases {
            let s = psd_sqrt(&a, 2);
            let back = mat_mul(&s, &s);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((back[i][j] - a[i][j]).abs() < 1e-12, "{a:?} -> {back:?}");
                }
            }
            assert!(min_eigenvalue(&s, 2) >= -1e-12);
        }
    }

    #[test]
    fn eigenvalue_of_rank_one() {
        let a = [[1.0, 1.0], [1.0, 1.0]];
        assert!(min_eigenvalue(&a, 2).abs() < 1e-15);
        assert_eq!(min_eigenvalue(&[[-0.5, 0.0], [0.0, 0.0]], 1), -0.5);
    }
}

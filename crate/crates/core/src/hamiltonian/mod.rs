//! Pointwise Hamiltonian algebra.
//!
//! The upper and lower Isaacs Hamiltonians are exact min/max over the finite
//! control lists of `½ tr(a X) + b · p + r`. Over the stop-extended sets the
//! same inf-sup collapses to a clamp of the base Hamiltonian into
//! `[λψ₂, λψ₁]`, and the double-obstacle residual in either nesting order
//! collapses to a median of three numbers. Both facts are exercised by the
//! randomized suites in [`identities`].

pub mod identities;

use thiserror::Error;

use crate::linalg::{dot, is_symmetric, to_vector, trace_product, Matrix, Vector, MAX_DIM};
use crate::problem::{Control, ProblemSpec};

/// Absolute tolerance for exact-arithmetic identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("dimension mismatch: problem has d = {expected}, argument has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Hessian argument is not symmetric")]
    NotSymmetric,
    #[error("obstacle order violated at x = {x:?}: lower {lower} > upper {upper}")]
    ObstacleOrder { x: Vec<f64>, lower: f64, upper: f64 },
    #[error("residual triple has s_upper = {s_upper} > s_lower = {s_lower}")]
    MalformedTriple { s_lower: f64, s_upper: f64 },
    #[error("brute-force clamped Hamiltonian needs a stop-extended problem")]
    NotExtended,
}

/// Which player moves first in the inf-sup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    /// `H⁺ = min_{u₁} max_{u₂}`
    Plus,
    /// `H⁻ = max_{u₂} min_{u₁}`
    Minus,
}

impl Sign {
    pub fn name(self) -> &'static str {
        match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plus" | "upper" => Ok(Sign::Plus),
            "minus" | "lower" => Ok(Sign::Minus),
            other => Err(format!("unknown sign `{other}` (expected plus or minus)")),
        }
    }
}

/// Nesting order of the double-obstacle residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualForm {
    /// `max(min(F, s_lower), s_upper)`
    MaxMin,
    /// `min(max(F, s_upper), s_lower)`
    MinMax,
}

/// Point, gradient surrogate and symmetric Hessian surrogate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianArgs {
    pub dim: usize,
    pub x: Vector,
    pub p: Vector,
    pub hess: Matrix,
}

impl HamiltonianArgs {
    pub fn new(x: &[f64], p: &[f64], hess: Matrix) -> Result<Self, HamiltonianError> {
        let dim = x.len();
        if !(1..=MAX_DIM).contains(&dim) || p.len() != dim {
            return Err(HamiltonianError::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        if !is_symmetric(&hess, dim, IDENTITY_TOLERANCE) {
            return Err(HamiltonianError::NotSymmetric);
        }
        Ok(HamiltonianArgs {
            dim,
            x: to_vector(x),
            p: to_vector(p),
            hess,
        })
    }

    fn check(&self, spec: &ProblemSpec) -> Result<(), HamiltonianError> {
        if self.dim != spec.dim {
            return Err(HamiltonianError::DimensionMismatch {
                expected: spec.dim,
                found: self.dim,
            });
        }
        Ok(())
    }
}

/// `½ tr(a X) + b · p + r` at one control pair.
pub fn eval_inner(
    spec: &ProblemSpec,
    args: &HamiltonianArgs,
    u1: Control<'_>,
    u2: Control<'_>,
) -> Result<f64, HamiltonianError> {
    args.check(spec)?;
    Ok(inner(spec, args, u1, u2))
}

pub(crate) fn inner(spec: &ProblemSpec, args: &HamiltonianArgs, u1: Control<'_>, u2: Control<'_>) -> f64 {
    let d = spec.dim;
    let x = &args.x[..d];
    let a = spec.diffusion(x, u1, u2);
    let b = spec.drift(x, u1, u2);
    let r = spec.running_cost(x, u1, u2);
    0.5 * trace_product(&a, &args.hess, d) + dot(&b[..d], &args.p[..d]) + r
}

/// Hamiltonian value with the controls that attain it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianValue {
    pub value: f64,
    pub player1: usize,
    pub player2: usize,
}

/// Exact inf-sup (`Plus`) or sup-inf (`Minus`) over a table of inner values
/// laid out row-major as `table[i1 * n2 + i2]`. Ties go to the lowest index.
pub fn inf_sup_table(table: &[f64], n1: usize, n2: usize, sign: Sign) -> HamiltonianValue {
    debug_assert_eq!(table.len(), n1 * n2);
    match sign {
        Sign::Plus => {
            let mut best = HamiltonianValue {
                value: f64::INFINITY,
                player1: 0,
                player2: 0,
            };
            for i1 in 0..n1 {
                let row = &table[i1 * n2..(i1 + 1) * n2];
                let (mut arg, mut m) = (0, row[0]);
                for (i2, v) in row.iter().enumerate().skip(1) {
                    if *v > m {
                        m = *v;
                        arg = i2;
                    }
                }
                if m < best.value {
                    best = HamiltonianValue {
                        value: m,
                        player1: i1,
                        player2: arg,
                    };
                }
            }
            best
        }
        Sign::Minus => {
            let mut best = HamiltonianValue {
                value: f64::NEG_INFINITY,
                player1: 0,
                player2: 0,
            };
            for i2 in 0..n2 {
                let (mut arg, mut m) = (0, table[i2]);
                for i1 in 1..n1 {
                    let v = table[i1 * n2 + i2];
                    if v < m {
                        m = v;
                        arg = i1;
                    }
                }
                if m > best.value {
                    best = HamiltonianValue {
                        value: m,
                        player1: arg,
                        player2: i2,
                    };
                }
            }
            best
        }
    }
}

fn eval_over_controls(spec: &ProblemSpec, args: &HamiltonianArgs, sign: Sign) -> HamiltonianValue {
    let (n1, n2) = (spec.controls[0].len(), spec.controls[1].len());
    let mut table = Vec::with_capacity(n1 * n2);
    for u1 in spec.controls[0].iter() {
        for u2 in spec.controls[1].iter() {
            table.push(inner(spec, args, u1, u2));
        }
    }
    inf_sup_table(&table, n1, n2, sign)
}

/// `H^sign` over the problem's control sets (the extended sets when the
/// problem carries stop symbols).
pub fn eval_h(spec: &ProblemSpec, args: &HamiltonianArgs, sign: Sign) -> Result<HamiltonianValue, HamiltonianError> {
    args.check(spec)?;
    Ok(eval_over_controls(spec, args, sign))
}

pub fn eval_h_plus(spec: &ProblemSpec, args: &HamiltonianArgs) -> Result<HamiltonianValue, HamiltonianError> {
    eval_h(spec, args, Sign::Plus)
}

pub fn eval_h_minus(spec: &ProblemSpec, args: &HamiltonianArgs) -> Result<HamiltonianValue, HamiltonianError> {
    eval_h(spec, args, Sign::Minus)
}

/// `H̄^sign` by enumeration of the stop-extended control table.
pub fn eval_h_bar_brute(
    extended: &ProblemSpec,
    args: &HamiltonianArgs,
    sign: Sign,
) -> Result<HamiltonianValue, HamiltonianError> {
    if !extended.is_extended() {
        return Err(HamiltonianError::NotExtended);
    }
    eval_h(extended, args, sign)
}

/// `(h ∨ lo) ∧ hi` for `Plus`, `(h ∧ hi) ∨ lo` for `Minus`. Both equal the
/// median of `{h, lo, hi}` when `lo ≤ hi`.
#[inline]
pub fn clamp_between(h: f64, lo: f64, hi: f64, sign: Sign) -> f64 {
    match sign {
        Sign::Plus => h.max(lo).min(hi),
        Sign::Minus => h.min(hi).max(lo),
    }
}

/// Clamps a Hamiltonian value into `[λψ₂(x), λψ₁(x)]`.
pub fn clamp_hamiltonian(h: f64, x: &[f64], spec: &ProblemSpec, sign: Sign) -> Result<f64, HamiltonianError> {
    let lower = spec.psi_lower(x);
    let upper = spec.psi_upper(x);
    if lower > upper {
        return Err(HamiltonianError::ObstacleOrder {
            x: x.to_vec(),
            lower,
            upper,
        });
    }
    let (lo, hi) = (spec.discount * lower, spec.discount * upper);
    let out = clamp_between(h, lo, hi, sign);
    debug_assert_eq!(out, median3(h, lo, hi));
    Ok(out)
}

#[inline]
pub fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.min(b).max(a.max(b).min(c))
}

/// `F = λv − H`, `s_lower = λ(v − ψ₂)`, `s_upper = λ(v − ψ₁)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualTriple {
    pub equation: f64,
    pub s_lower: f64,
    pub s_upper: f64,
}

impl ResidualTriple {
    pub fn at(v: f64, h: f64, psi_lower: f64, psi_upper: f64, discount: f64) -> Self {
        ResidualTriple {
            equation: discount * v - h,
            s_lower: discount * (v - psi_lower),
            s_upper: discount * (v - psi_upper),
        }
    }
}

/// Double-obstacle residual in the requested nesting order.
pub fn residual(triple: ResidualTriple, form: ResidualForm) -> Result<f64, HamiltonianError> {
    let ResidualTriple { s_lower, s_upper, .. } = triple;
    if s_upper > s_lower + IDENTITY_TOLERANCE {
        return Err(HamiltonianError::MalformedTriple { s_lower, s_upper });
    }
    Ok(residual_unchecked(triple, form))
}

#[inline]
pub(crate) fn residual_unchecked(t: ResidualTriple, form: ResidualForm) -> f64 {
    match form {
        ResidualForm::MaxMin => t.equation.min(t.s_lower).max(t.s_upper),
        ResidualForm::MinMax => t.equation.max(t.s_upper).min(t.s_lower),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO_MATRIX;
    use crate::problem::test_support::constant_1d;
    use crate::problem::{extend_coefficients, ControlSet, Cost, ScalarFamily};

    fn args_1d(x: f64, p: f64, xx: f64) -> HamiltonianArgs {
        HamiltonianArgs::new(&[x], &[p], [[xx, 0.0], [0.0, 0.0]]).unwrap()
    }

    fn pennies() -> ProblemSpec {
        let mut spec = constant_1d(0.0, 0.0, 0.0, -1.0, 2.0, 1.0);
        spec.controls = [
            ControlSet::new(vec![vec![0.0], vec![1.0]]).unwrap(),
            ControlSet::new(vec![vec![0.0], vec![1.0]]).unwrap(),
        ];
        spec.coefficients.running_cost = Cost {
            base: ScalarFamily::Constant { value: 0.0 },
            linear1: vec![1.0],
            linear2: vec![1.0],
            bilinear: vec![vec![-2.0]],
        };
        spec
    }

    #[test]
    fn inner_cost_only() {
        let spec = constant_1d(0.0, 0.0, 0.7, -1.0, 1.0, 1.0);
        let c = spec.controls[0].get(0);
        for (p, xx) in [(0.0, 0.0), (3.0, -2.0), (-1e3, 1e4)] {
            assert_eq!(eval_inner(&spec, &args_1d(0.1, p, xx), c, c).unwrap(), 0.7);
        }
    }

    #[test]
    fn inner_arithmetic() {
        let spec = constant_1d(2.0, 3.0, 0.0, -1.0, 1.0, 1.0);
        let c = spec.controls[0].get(0);
        assert_eq!(eval_inner(&spec, &args_1d(0.0, 1.0, 4.0), c, c).unwrap(), 7.0);
    }

    #[test]
    fn inner_at_stop_symbol_pays_upper_obstacle() {
        let spec = extend_coefficients(&constant_1d(2.0, 3.0, 9.0, -1.0, 0.25, 4.0));
        let stop = spec.controls[0].get(1);
        let u2 = spec.controls[1].get(0);
        for (p, xx) in [(0.0, 0.0), (5.0, 7.0)] {
            assert_eq!(eval_inner(&spec, &args_1d(0.3, p, xx), stop, u2).unwrap(), 1.0);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let spec = constant_1d(1.0, 0.0, 0.0, -1.0, 1.0, 1.0);
        let args = HamiltonianArgs::new(&[0.0, 0.0], &[0.0, 0.0], ZERO_MATRIX).unwrap();
        let c = spec.controls[0].get(0);
        assert!(matches!(
            eval_inner(&spec, &args, c, c),
            Err(HamiltonianError::DimensionMismatch { expected: 1, found: 2 })
        ));
        assert!(HamiltonianArgs::new(&[0.0], &[0.0, 1.0], ZERO_MATRIX).is_err());
        assert_eq!(
            HamiltonianArgs::new(&[0.0, 0.0], &[0.0, 0.0], [[0.0, 1.0], [0.0, 0.0]]),
            Err(HamiltonianError::NotSymmetric)
        );
    }

    #[test]
    fn singleton_controls_make_plus_and_minus_agree() {
        let spec = constant_1d(1.5, -0.5, 0.2, -1.0, 1.0, 1.0);
        let args = args_1d(0.0, 2.0, 1.0);
        let c = spec.controls[0].get(0);
        let inner = eval_inner(&spec, &args, c, c).unwrap();
        assert_eq!(eval_h_plus(&spec, &args).unwrap().value, inner);
        assert_eq!(eval_h_minus(&spec, &args).unwrap().value, inner);
    }

    #[test]
    fn matching_pennies_gap() {
        // table [[0, 1], [1, 0]]: min over rows of row max is 1, max over
        // columns of column min is 0
        let spec = pennies();
        let args = args_1d(0.0, 0.0, 0.0);
        let plus = eval_h_plus(&spec, &args).unwrap();
        let minus = eval_h_minus(&spec, &args).unwrap();
        assert_eq!(plus.value, 1.0);
        assert_eq!(minus.value, 0.0);
        assert_eq!((plus.player1, plus.player2), (0, 1));
        assert_eq!((minus.player1, minus.player2), (0, 0));
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let table = [1.0, 1.0, 1.0, 1.0];
        let v = inf_sup_table(&table, 2, 2, Sign::Plus);
        assert_eq!((v.player1, v.player2), (0, 0));
        let v = inf_sup_table(&table, 2, 2, Sign::Minus);
        assert_eq!((v.player1, v.player2), (0, 0));
    }

    #[test]
    fn clamp_cases() {
        let spec = constant_1d(0.0, 0.0, 0.0, 1.0, 3.0, 1.0);
        for sign in [Sign::Plus, Sign::Minus] {
            assert_eq!(clamp_hamiltonian(5.0, &[0.0], &spec, sign).unwrap(), 3.0);
            assert_eq!(clamp_hamiltonian(2.0, &[0.0], &spec, sign).unwrap(), 2.0);
            assert_eq!(clamp_hamiltonian(0.0, &[0.0], &spec, sign).unwrap(), 1.0);
        }
        let crossed = constant_1d(0.0, 0.0, 0.0, 3.0, 1.0, 1.0);
        assert!(matches!(
            clamp_hamiltonian(0.0, &[0.0], &crossed, Sign::Plus),
            Err(HamiltonianError::ObstacleOrder { .. })
        ));
    }

    #[test]
    fn brute_force_examples() {
        let args = args_1d(0.0, 0.4, -0.3);
        // interior
        let spec = extend_coefficients(&constant_1d(0.0, 0.0, 0.0, -1.0, 1.0, 1.0));
        for sign in [Sign::Plus, Sign::Minus] {
            assert_eq!(eval_h_bar_brute(&spec, &args, sign).unwrap().value, 0.0);
        }
        // [[r, λψ₁], [λψ₂, λψ₂]] with r = 10 → min(max(10, -1), max(1, -1)) = 1
        let spec = extend_coefficients(&constant_1d(0.0, 0.0, 10.0, -1.0, 1.0, 1.0));
        let v = eval_h_bar_brute(&spec, &args, Sign::Plus).unwrap();
        assert_eq!(v.value, 1.0);
        assert_eq!(v.player1, 1, "the stop symbol of player 1 attains the cap");
        // r = -10 → min(max(-10, -1), 1) = -1
        let spec = extend_coefficients(&constant_1d(0.0, 0.0, -10.0, -1.0, 1.0, 1.0));
        assert_eq!(eval_h_bar_brute(&spec, &args, Sign::Plus).unwrap().value, -1.0);
        assert_eq!(eval_h_bar_brute(&spec, &args, Sign::Minus).unwrap().value, -1.0);
        assert_eq!(
            eval_h_bar_brute(&constant_1d(0.0, 0.0, 0.0, -1.0, 1.0, 1.0), &args, Sign::Plus),
            Err(HamiltonianError::NotExtended)
        );
    }

    #[test]
    fn residual_examples() {
        let cases = [
            (0.0, 2.0, -2.0, 0.0),
            (5.0, 0.0, -2.0, 0.0),
            (-5.0, 2.0, 0.0, 0.0),
        ];
        for (equation, s_lower, s_upper, expect) in cases {
            let t = ResidualTriple {
                equation,
                s_lower,
                s_upper,
            };
            assert_eq!(residual(t, ResidualForm::MaxMin).unwrap(), expect);
            assert_eq!(residual(t, ResidualForm::MinMax).unwrap(), expect);
        }
        let bad = ResidualTriple {
            equation: 0.0,
            s_lower: 0.0,
            s_upper: 1.0,
        };
        assert!(residual(bad, ResidualForm::MaxMin).is_err());
    }

    /// Recovers the four cases of the bilateral inequality from a zero residual.
    #[test]
    fn zero_residual_case_enumeration() {
        let values = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
        for &equation in &values {
            for &s_lower in &values {
                for &s_upper in &values {
                    if s_upper > s_lower {
                        continue;
                    }
                    let t = ResidualTriple {
                        equation,
                        s_lower,
                        s_upper,
                    };
                    let r = residual(t, ResidualForm::MaxMin).unwrap();
                    if r != 0.0 {
                        continue;
                    }
                    // zero residual forces the sandwich v ∈ [ψ₂, ψ₁]
                    assert!(s_lower >= 0.0 && s_upper <= 0.0);
                    if s_lower > 0.0 && s_upper < 0.0 {
                        assert_eq!(equation, 0.0);
                    }
                    if s_lower == 0.0 && s_upper < 0.0 {
                        assert!(equation >= 0.0);
                    }
                    if s_upper == 0.0 && s_lower > 0.0 {
                        assert!(equation <= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn median_is_order_free() {
        let perms = [(1.0, 2.0, 3.0), (3.0, 1.0, 2.0), (2.0, 3.0, 1.0), (3.0, 2.0, 1.0)];
        for (a, b, c) in perms {
            assert_eq!(median3(a, b, c), 2.0);
        }
    }
}

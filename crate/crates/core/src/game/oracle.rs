use super::GameError;
use crate::grid::{GridFunction, Lattice};
use crate::hamiltonian::median3;
use crate::problem::{BoundaryCondition, ProblemSpec};

/// Value-iteration stopping threshold on `max|ΔV| / (λ·dt)`.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

/// Fraction of the largest admissible chain step used by
/// [`default_chain_step`].
const CHAIN_STEP_FACTOR: f64 = 0.9;

const MAX_ORACLE_ITERATIONS: usize = 50_000_000;

/// Result of the discrete Dynkin value iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub value: GridFunction,
    pub iterations: usize,
    /// `max|ΔV|` of the final sweep.
    pub last_change: f64,
    pub chain_step: f64,
}

/// Largest stable chain step `1/max(a/h² + |b|/h)` times 0.9, so that the
/// probability of staying put is positive everywhere.
pub fn default_chain_step(spec: &ProblemSpec, lattice: &Lattice) -> Result<f64, GameError> {
    check_instance(spec, lattice)?;
    let h = lattice.spacing()[0];
    let mut rate = 0.0f64;
    for i in 0..lattice.len() {
        let (a, b) = coefficients(spec, lattice, i);
        rate = rate.max(a / (h * h) + b.abs() / h);
    }
    Ok(if rate > 0.0 { CHAIN_STEP_FACTOR / rate } else { 1.0 })
}

fn check_instance(spec: &ProblemSpec, lattice: &Lattice) -> Result<(), GameError> {
    if spec.dim != 1 || lattice.dim() != 1 {
        return Err(GameError::OracleDimension);
    }
    if !spec.is_uncontrolled() {
        return Err(GameError::Controlled);
    }
    if spec.boundary == BoundaryCondition::OneSided {
        return Err(GameError::InvalidConfig(
            "one-sided boundary rows do not define transition probabilities".into(),
        ));
    }
    Ok(())
}

fn coefficients(spec: &ProblemSpec, lattice: &Lattice, node: usize) -> (f64, f64) {
    let x = &lattice.point(node)[..1];
    let (u1, u2) = (spec.controls[0].get(0), spec.controls[1].get(0));
    (spec.diffusion(x, u1, u2)[0][0], spec.drift(x, u1, u2)[0])
}

/// Value of the one-dimensional Markov chain game.
///
/// Interior nodes move one node up with probability
/// `dt(a/(2h²) + b⁺/h)`, one node down with `dt(a/(2h²) + b⁻/h)`, and stay
/// otherwise. The value solves
/// `V = median(ψ₂, ψ₁, (E[V(next)] + r·dt)/(1 + λdt))`: each player may
/// stop now for their obstacle, otherwise the game moves one step with
/// reward `r·dt` and discount `1/(1 + λdt)`. Boundary nodes carry the same
/// prescribed values as the grid solver: the Dirichlet data, or
/// `clamp(r/λ, ψ₂, ψ₁)` when the boundary is frozen.
pub fn dynkin_oracle(spec: &ProblemSpec, lattice: &Lattice, chain_step: f64) -> Result<OracleReport, GameError> {
    check_instance(spec, lattice)?;
    if !(chain_step > 0.0) || !chain_step.is_finite() {
        return Err(GameError::InvalidConfig(format!("chain step must be positive, got {chain_step}")));
    }
    let n = lattice.len();
    let h = lattice.spacing()[0];
    let dt = chain_step;
    let lam = spec.discount;
    let (u1, u2) = (spec.controls[0].get(0), spec.controls[1].get(0));

    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut reward = Vec::with_capacity(n);
    // (down, stay, up) probabilities of interior nodes
    let mut moves = vec![(0.0, 0.0, 0.0); n];
    let mut pinned = vec![None; n];
    for i in 0..n {
        let x = &lattice.point(i)[..1];
        let (lo, hi) = (spec.psi_lower(x), spec.psi_upper(x));
        let r = spec.running_cost(x, u1, u2);
        lower.push(lo);
        upper.push(hi);
        reward.push(r * dt);
        if lattice.is_boundary(i) {
            pinned[i] = Some(match &spec.boundary {
                BoundaryCondition::Dirichlet(Some(g)) => g.value(x),
                _ => median3(r, lam * lo, lam * hi) / lam,
            });
            continue;
        }
        let (a, b) = coefficients(spec, lattice, i);
        let up = dt * (a / (2.0 * h * h) + b.max(0.0) / h);
        let down = dt * (a / (2.0 * h * h) + (-b).max(0.0) / h);
        let stay = 1.0 - up - down;
        for w in [up, down, stay] {
            if !(w >= 0.0) {
                return Err(GameError::NegativeTransition { node: i, weight: w });
            }
        }
        moves[i] = (down, stay, up);
    }

    let mut v: Vec<f64> = (0..n)
        .map(|i| pinned[i].unwrap_or_else(|| median3(lower[i], upper[i], reward[i] / (lam * dt))))
        .collect();
    let mut next = v.clone();
    let factor = 1.0 / (1.0 + lam * dt);
    for iteration in 1..=MAX_ORACLE_ITERATIONS {
        let mut change = 0.0f64;
        for i in 1..n - 1 {
            if pinned[i].is_some() {
                continue;
            }
            let (down, stay, up) = moves[i];
            let cont = (down * v[i - 1] + stay * v[i] + up * v[i + 1] + reward[i]) * factor;
            let value = median3(lower[i], upper[i], cont);
            change = change.max((value - v[i]).abs());
            next[i] = value;
        }
        std::mem::swap(&mut v, &mut next);
        if change / (lam * dt) <= ORACLE_TOLERANCE {
            return Ok(OracleReport {
                value: GridFunction::new(*lattice, v)?,
                iterations: iteration,
                last_change: change,
                chain_step: dt,
            });
        }
    }
    let change = v.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Err(GameError::OracleNonConvergence {
        iterations: MAX_ORACLE_ITERATIONS,
        change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::test_support::constant_1d;
    use crate::solver::{manufactured_instance, solve_vi, SolveOptions};

    fn lattice(n: usize) -> Lattice {
        Lattice::from_bounds(&[-1.0], &[1.0], &[n]).unwrap()
    }

    #[test]
    fn motionless_chain_gives_clamped_ratio() {
        for r in [-3.0, 0.2, 5.0] {
            let spec = constant_1d(0.0, 0.0, r, -1.0, 1.0, 2.0);
            let lat = lattice(11);
            let dt = default_chain_step(&spec, &lat).unwrap();
            let rep = dynkin_oracle(&spec, &lat, dt).unwrap();
            let expected = (r / 2.0f64).clamp(-1.0, 1.0);
            assert!(rep.value.values().iter().all(|v| (v - expected).abs() < 1e-9));
        }
    }

    #[test]
    fn coincident_obstacles_pin_the_value() {
        let spec = constant_1d(0.7, 0.3, 4.0, 0.25, 0.25, 1.0);
        let lat = lattice(21);
        let rep = dynkin_oracle(&spec, &lat, default_chain_step(&spec, &lat).unwrap()).unwrap();
        assert!(rep.value.values().iter().all(|v| *v == 0.25));
    }

    #[test]
    fn agrees_with_the_solver_on_a_smooth_instance() {
        let lat = lattice(81);
        let (spec, _) = manufactured_instance("smooth-1d-interior", &lat).unwrap();
        let opts = SolveOptions {
            tolerance: 1e-9,
            ..SolveOptions::default()
        };
        let solved = solve_vi(&spec, &lat, &opts).unwrap();
        let rep = dynkin_oracle(&spec, &lat, default_chain_step(&spec, &lat).unwrap()).unwrap();
        assert!(rep.value.max_abs_diff(&solved.solution) <= 1e-8);
    }

    #[test]
    fn rejects_unsupported_instances() {
        let mut spec = constant_1d(1.0, 0.0, 0.0, -1.0, 1.0, 1.0);
        let lat = lattice(11);
        assert!(matches!(
            dynkin_oracle(&spec, &lat, 10.0),
            Err(GameError::NegativeTransition { .. })
        ));
        assert!(matches!(dynkin_oracle(&spec, &lat, 0.0), Err(GameError::InvalidConfig(_))));
        spec.boundary = BoundaryCondition::OneSided;
        assert!(matches!(dynkin_oracle(&spec, &lat, 1e-3), Err(GameError::InvalidConfig(_))));
        let lat2 = Lattice::from_bounds(&[0.0, 0.0], &[1.0, 1.0], &[5, 5]).unwrap();
        assert!(matches!(dynkin_oracle(&spec, &lat2, 1e-3), Err(GameError::OracleDimension)));
    }
}

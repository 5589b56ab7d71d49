//! Randomized identity suites for the pointwise algebra.
//!
//! * median: both residual nestings equal the median of the triple;
//! * clamp: enumerating the stop-extended control table reproduces the
//!   clamp of the base Hamiltonian, for both signs;
//! * ordering: `H⁺ ≥ H⁻`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    clamp_hamiltonian, eval_h, eval_h_bar_brute, median3, residual_unchecked, HamiltonianArgs, ResidualForm,
    ResidualTriple, Sign,
};
use crate::linalg::{Matrix, ZERO_MATRIX};
use crate::problem::{
    extend_coefficients, BoundEstimates, BoundaryCondition, BoxDomain, CoefficientField, ControlSet, Cost, Diffusion,
    DiffusionFamily, Drift, DriftFamily, ObstaclePair, ProblemSpec, ScalarFamily,
};

/// Outcome of one suite.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub trials: usize,
    pub violations: usize,
    pub max_deviation: f64,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        SuiteResult {
            name,
            ..Default::default()
        }
    }

    fn record(&mut self, deviation: f64, tolerance: f64) {
        self.trials += 1;
        let bad = !(deviation <= tolerance);
        if bad {
            self.violations += 1;
        }
        if deviation.is_nan() {
            self.max_deviation = f64::NAN;
        } else if deviation > self.max_deviation {
            self.max_deviation = deviation;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub seed: u64,
    pub tolerance: f64,
    pub suites: Vec<SuiteResult>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.violations == 0)
    }

    pub fn max_deviation(&self) -> f64 {
        self.suites.iter().map(|s| s.max_deviation).fold(0.0, f64::max)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

fn uniform(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    rng.random_range(-scale..scale)
}

fn random_controls(rng: &mut ChaCha8Rng, player: usize) -> ControlSet {
    let count = rng.random_range(1..=4usize);
    let cdim = rng.random_range(1..=3usize);
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(count);
    while points.len() < count {
        let p: Vec<f64> = (0..cdim).map(|_| uniform(rng, 1.5)).collect();
        if !points.contains(&p) {
            points.push(p);
        }
    }
    ControlSet::for_player(points, player).expect("distinct random controls")
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| uniform(rng, scale)).collect())
        .collect()
}

fn random_psd(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Matrix {
    let mut g = ZERO_MATRIX;
    for row in g.iter_mut().take(dim) {
        for v in row.iter_mut().take(dim) {
            *v = uniform(rng, scale);
        }
    }
    let mut a = ZERO_MATRIX;
    for i in 0..dim {
        for j in 0..dim {
            a[i][j] = (0..dim).map(|k| g[i][k] * g[j][k]).sum();
        }
    }
    // exact symmetry
    if dim == 2 {
        a[1][0] = a[0][1];
    }
    a
}

/// A random instance with small control sets and coefficients on the scale
/// of the obstacles, so that all three clamp regimes occur.
pub fn random_instance(rng: &mut ChaCha8Rng) -> ProblemSpec {
    let dim = rng.random_range(1..=2usize);
    let c1 = random_controls(rng, 1);
    let c2 = random_controls(rng, 2);
    let (m1, m2) = (c1.points()[0].len(), c2.points()[0].len());
    let mut frequency = [0.0; 2];
    let mut slope = [0.0; 2];
    for k in 0..dim {
        frequency[k] = uniform(rng, 2.0);
        slope[k] = uniform(rng, 1.0);
    }
    let mut drift_matrix = ZERO_MATRIX;
    let mut drift_offset = [0.0; 2];
    for k in 0..dim {
        drift_offset[k] = uniform(rng, 1.0);
        for j in 0..dim {
            drift_matrix[k][j] = uniform(rng, 1.0);
        }
    }
    let diffusion_base = if rng.random_bool(0.2) {
        DiffusionFamily::Zero
    } else {
        DiffusionFamily::Constant(random_psd(rng, dim, 1.2))
    };
    let coefficients = CoefficientField {
        drift: Drift {
            base: DriftFamily::Affine {
                matrix: drift_matrix,
                offset: drift_offset,
            },
            gain1: random_matrix(rng, dim, m1, 1.0),
            gain2: random_matrix(rng, dim, m2, 1.0),
        },
        diffusion: Diffusion {
            base: diffusion_base,
            control_scale: [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)],
        },
        running_cost: Cost {
            base: ScalarFamily::Trig {
                offset: uniform(rng, 1.0),
                amplitude: uniform(rng, 2.0),
                frequency,
                phase: uniform(rng, 3.0),
            },
            linear1: (0..m1).map(|_| uniform(rng, 1.0)).collect(),
            linear2: (0..m2).map(|_| uniform(rng, 1.0)).collect(),
            bilinear: random_matrix(rng, m1, m2, 1.0),
        },
        bounds: BoundEstimates::default(),
    };
    let lower_offset = uniform(rng, 2.0);
    let gap = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..3.0) };
    let obstacles = ObstaclePair {
        psi_lower: ScalarFamily::Affine {
            offset: lower_offset,
            slope,
        },
        psi_upper: ScalarFamily::Affine {
            offset: lower_offset + gap,
            slope,
        },
    };
    let domain = BoxDomain::new(&vec![-1.0; dim], &vec![1.0; dim]).expect("unit box");
    ProblemSpec::new(
        coefficients,
        obstacles,
        [c1, c2],
        rng.random_range(0.2..3.0),
        domain,
        BoundaryCondition::default(),
    )
    .expect("random instance")
}

/// Random `(x, p, X)` with a symmetric `X`.
pub fn random_args(rng: &mut ChaCha8Rng, dim: usize) -> HamiltonianArgs {
    let x: Vec<f64> = (0..dim).map(|_| uniform(rng, 1.0)).collect();
    let p: Vec<f64> = (0..dim).map(|_| uniform(rng, 3.0)).collect();
    let mut hess = ZERO_MATRIX;
    for i in 0..dim {
        for j in i..dim {
            let v = uniform(rng, 4.0);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    HamiltonianArgs::new(&x, &p, hess).expect("consistent random args")
}

/// Runs every suite `trials` times with a ChaCha8 stream seeded by `seed`.
pub fn run_identity_suites(trials: usize, seed: u64) -> IdentityReport {
    let tolerance = super::IDENTITY_TOLERANCE;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut median = SuiteResult::new("median");
    let mut clamp_plus = SuiteResult::new("clamp-plus");
    let mut clamp_minus = SuiteResult::new("clamp-minus");
    let mut ordering = SuiteResult::new("ordering");

    for _ in 0..trials {
        let equation = uniform(&mut rng, 5.0);
        let a = uniform(&mut rng, 5.0);
        // occasionally coincident obstacles
        let b = if rng.random_bool(0.05) { a } else { uniform(&mut rng, 5.0) };
        let t = ResidualTriple {
            equation,
            s_lower: a.max(b),
            s_upper: a.min(b),
        };
        let m = median3(t.equation, t.s_lower, t.s_upper);
        let dev = (residual_unchecked(t, ResidualForm::MaxMin) - m)
            .abs()
            .max((residual_unchecked(t, ResidualForm::MinMax) - m).abs());
        median.record(dev, tolerance);

        let spec = random_instance(&mut rng);
        let extended = extend_coefficients(&spec);
        let args = random_args(&mut rng, spec.dim);
        let x = &args.x[..spec.dim];
        let plus = eval_h(&spec, &args, Sign::Plus).expect("dimensions match");
        let minus = eval_h(&spec, &args, Sign::Minus).expect("dimensions match");
        for (sign, base, suite) in [
            (Sign::Plus, plus.value, &mut clamp_plus),
            (Sign::Minus, minus.value, &mut clamp_minus),
        ] {
            let brute = eval_h_bar_brute(&extended, &args, sign).expect("extended").value;
            let clamped = clamp_hamiltonian(base, x, &spec, sign).expect("ordered obstacles");
            suite.record((brute - clamped).abs(), tolerance);
        }
        // H⁺ ≥ H⁻ exactly
        ordering.record((minus.value - plus.value).max(0.0), 0.0);
    }

    IdentityReport {
        seed,
        tolerance,
        suites: vec![median, clamp_plus, clamp_minus, ordering],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_suite_passes() {
        let report = run_identity_suites(2_000, 7);
        assert!(report.passed(), "{report:?}");
        assert!(report.suites.iter().all(|s| s.trials == 2_000));
        assert!(report.max_deviation() <= 1e-12);
    }

    #[test]
    fn single_trial_passes() {
        assert!(run_identity_suites(1, 123).passed());
    }

    #[test]
    fn suites_are_reproducible() {
        assert_eq!(run_identity_suites(200, 42), run_identity_suites(200, 42));
    }

    proptest! {
        #[test]
        fn residual_is_monotone(f in -10.0..10.0f64, a in -10.0..10.0f64, b in -10.0..10.0f64, step in 0.0..3.0f64) {
            let t = ResidualTriple { equation: f, s_lower: a.max(b), s_upper: a.min(b) };
            let r = residual_unchecked(t, ResidualForm::MaxMin);
            let bumped_f = ResidualTriple { equation: f + step, ..t };
            let bumped_lower = ResidualTriple { s_lower: t.s_lower + step, ..t };
            let bumped_upper = ResidualTriple { s_upper: (t.s_upper + step).min(t.s_lower), ..t };
            prop_assert!(residual_unchecked(bumped_f, ResidualForm::MaxMin) >= r);
            prop_assert!(residual_unchecked(bumped_lower, ResidualForm::MaxMin) >= r);
            prop_assert!(residual_unchecked(bumped_upper, ResidualForm::MaxMin) >= r);
        }

        #[test]
        fn clamp_is_the_median(h in -10.0..10.0f64, a in -10.0..10.0f64, b in -10.0..10.0f64) {
            let (lo, hi) = (a.min(b), a.max(b));
            let m = median3(h, lo, hi);
            prop_assert_eq!(super::super::clamp_between(h, lo, hi, Sign::Plus), m);
            prop_assert_eq!(super::super::clamp_between(h, lo, hi, Sign::Minus), m);
        }
    }
}

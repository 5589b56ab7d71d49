use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Control, ProblemError, ProblemSpec};
use crate::grid::Lattice;
use crate::linalg::{is_symmetric, min_eigenvalue, norm_sq, Vector, ZERO_VECTOR};

/// Eigenvalues above this (negative) threshold count as non-negative.
pub const PSD_TOLERANCE: f64 = -1e-10;
/// Eigenvalues at or below this magnitude mark a degenerate point.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;
const SAMPLE_SEED: u64 = 0x6f62_7374_6163_6c65;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
    /// Lattice nodes where the diffusion matrix is singular.
    pub degenerate_nodes: Vec<usize>,
    pub hard_error: Option<ProblemError>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.hard_error.is_none()
    }

    pub fn warnings(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Warn)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn into_result(self) -> Result<ValidationReport, ProblemError> {
        match self.hard_error.clone() {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

#[derive(Default)]
struct Maxima {
    drift: f64,
    diffusion: f64,
    cost: f64,
    obstacles: f64,
}

/// Checks the standing assumptions on `spec` over `lattice`.
///
/// Symmetry and positive semidefiniteness of the diffusion are checked at
/// every node and every control pair, at the box corners, and at
/// `sample_count` random `(x, u₁, u₂)` triples. Obstacle order is checked at
/// every node. Declared bound estimates are spot-checked and produce
/// warnings only.
pub fn validate_problem(spec: &ProblemSpec, lattice: &Lattice, sample_count: usize) -> ValidationReport {
    let dim = spec.dim;
    let mut checks = Vec::new();
    let mut hard_error = None;
    let mut maxima = Maxima::default();

    checks.push(AssumptionCheck {
        name: "discount",
        status: CheckStatus::Pass,
        detail: format!("lambda = {}", spec.discount),
    });
    checks.push(AssumptionCheck {
        name: "box",
        status: CheckStatus::Pass,
        detail: format!(
            "{:?} .. {:?}",
            &spec.domain.lower[..dim],
            &spec.domain.upper[..dim]
        ),
    });

    let mut points: Vec<Vector> = (0..lattice.len()).map(|i| lattice.point(i)).collect();
    points.extend(lattice.corners());
    let node_count = lattice.len();

    let mut degenerate_nodes = Vec::new();
    let mut worst_eig = f64::INFINITY;
    let mut psd_failure: Option<ProblemError> = None;
    let mut non_finite = None;

    let mut examine = |x: &Vector, u1: Control<'_>, u2: Control<'_>, maxima: &mut Maxima| -> f64 {
        let xs = &x[..dim];
        let a = spec.diffusion(xs, u1, u2);
        let b = spec.drift(xs, u1, u2);
        let r = spec.running_cost(xs, u1, u2);
        if !(a.iter().flatten().all(|v| v.is_finite()) && b.iter().all(|v| v.is_finite()) && r.is_finite()) {
            non_finite.get_or_insert_with(|| xs.to_vec());
        }
        if !is_symmetric(&a, dim, 1e-12) && psd_failure.is_none() {
            psd_failure = Some(ProblemError::NotSymmetric { x: xs.to_vec() });
        }
        let eig = min_eigenvalue(&a, dim);
        if eig < PSD_TOLERANCE && psd_failure.is_none() {
            psd_failure = Some(ProblemError::NotPositiveSemidefinite {
                x: xs.to_vec(),
                min_eigenvalue: eig,
            });
        }
        maxima.drift = maxima.drift.max(norm_sq(&b[..dim]).sqrt());
        maxima.diffusion = maxima.diffusion.max(a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())));
        maxima.cost = maxima.cost.max(r.abs());
        eig
    };

    for (i, x) in points.iter().enumerate() {
        let mut node_min = f64::INFINITY;
        for u1 in spec.controls[0].iter() {
            for u2 in spec.controls[1].iter() {
                let eig = examine(x, u1, u2, &mut maxima);
                worst_eig = worst_eig.min(eig);
                if !(u1.is_stop() || u2.is_stop()) {
                    node_min = node_min.min(eig);
                }
            }
        }
        if i < node_count && node_min.abs() <= DEGENERACY_THRESHOLD {
            degenerate_nodes.push(i);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    for _ in 0..sample_count {
        let mut x = ZERO_VECTOR;
        for (k, xk) in x.iter_mut().enumerate().take(dim) {
            *xk = rng.random_range(spec.domain.lower[k]..=spec.domain.upper[k]);
        }
        let i1 = rng.random_range(0..spec.controls[0].base_len());
        let i2 = rng.random_range(0..spec.controls[1].base_len());
        let eig = examine(&x, spec.controls[0].get(i1), spec.controls[1].get(i2), &mut maxima);
        worst_eig = worst_eig.min(eig);
    }

    match &psd_failure {
        Some(e) => {
            checks.push(AssumptionCheck {
                name: "diffusion-psd",
                status: CheckStatus::Fail,
                detail: e.to_string(),
            });
            hard_error = psd_failure.clone();
        }
        None => checks.push(AssumptionCheck {
            name: "diffusion-psd",
            status: CheckStatus::Pass,
            detail: format!(
                "smallest eigenvalue {worst_eig:e}; {} degenerate node(s)",
                degenerate_nodes.len()
            ),
        }),
    }

    match non_finite {
        Some(x) => checks.push(AssumptionCheck {
            name: "coefficients-finite",
            status: CheckStatus::Fail,
            detail: format!("non-finite coefficient at {x:?}"),
        }),
        None => checks.push(AssumptionCheck {
            name: "coefficients-finite",
            status: CheckStatus::Pass,
            detail: String::new(),
        }),
    }

    let mut order_violation = None;
    for i in 0..node_count {
        let x = lattice.point(i);
        let (lo, hi) = (spec.psi_lower(&x[..dim]), spec.psi_upper(&x[..dim]));
        maxima.obstacles = maxima.obstacles.max(lo.abs()).max(hi.abs());
        if lo > hi && order_violation.is_none() {
            order_violation = Some(ProblemError::ObstacleOrder {
                node: i,
                x: x[..dim].to_vec(),
                lower: lo,
                upper: hi,
            });
        }
    }
    match order_violation {
        Some(e) => {
            checks.push(AssumptionCheck {
                name: "obstacle-order",
                status: CheckStatus::Fail,
                detail: e.to_string(),
            });
            if hard_error.is_none() {
                hard_error = Some(e);
            }
        }
        None => checks.push(AssumptionCheck {
            name: "obstacle-order",
            status: CheckStatus::Pass,
            detail: format!("psi_lower <= psi_upper at all {node_count} nodes"),
        }),
    }

    let bounds = &spec.coefficients.bounds;
    for (name, declared, observed) in [
        ("drift-bound", bounds.drift, maxima.drift),
        ("diffusion-bound", bounds.diffusion, maxima.diffusion),
        ("cost-bound", bounds.cost, maxima.cost),
        ("obstacle-bound", bounds.obstacles, maxima.obstacles),
    ] {
        let Some(limit) = declared else { continue };
        let status = if observed <= limit { CheckStatus::Pass } else { CheckStatus::Warn };
        checks.push(AssumptionCheck {
            name,
            status,
            detail: format!("declared {limit}, observed {observed}"),
        });
    }

    ValidationReport {
        checks,
        degenerate_nodes,
        hard_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::test_support::constant_1d;
    use crate::problem::{BoundEstimates, DiffusionFamily, ScalarFamily};

    fn lattice_for(spec: &ProblemSpec, n: usize) -> Lattice {
        Lattice::new(&spec.domain, &[n]).unwrap()
    }

    #[test]
    fn zero_diffusion_is_psd() {
        let spec = constant_1d(0.0, 0.0, 0.0, -1.0, 1.0, 1.0);
        let report = validate_problem(&spec, &lattice_for(&spec, 11), 100);
        assert!(report.passed());
        assert_eq!(report.check("diffusion-psd").unwrap().status, CheckStatus::Pass);
        assert_eq!(report.degenerate_nodes.len(), 11);
    }

    #[test]
    fn obstacle_order_passes_for_unit_band() {
        let spec = constant_1d(1.0, 0.0, 0.0, -1.0, 1.0, 1.0);
        let report = validate_problem(&spec, &lattice_for(&spec, 11), 10);
        assert_eq!(report.check("obstacle-order").unwrap().status, CheckStatus::Pass);
        assert!(report.degenerate_nodes.is_empty());
    }

    #[test]
    fn quadratic_diffusion_degenerate_at_origin() {
        let mut spec = constant_1d(1.0, 0.0, 0.0, -1.0, 1.0, 1.0);
        spec.coefficients.diffusion.base = DiffusionFamily::Quadratic {
            matrix: [[1.0, 0.0], [0.0, 0.0]],
            center: [0.0; 2],
            floor: 0.0,
        };
        let lattice = lattice_for(&spec, 21);
        let report = validate_problem(&spec, &lattice, 500);
        assert!(report.passed());
        let origin = lattice.nearest_node(&[0.0, 0.0]);
        assert_eq!(report.degenerate_nodes, vec![origin]);
    }

    #[test]
    fn crossed_obstacles_are_a_hard_error() {
        let mut spec = constant_1d(1.0, 0.0, 0.0, -1.0, 1.0, 1.0);
        spec.obstacles.psi_lower = ScalarFamily::Affine {
            offset: 0.0,
            slope: [2.0, 0.0],
        };
        let report = validate_problem(&spec, &lattice_for(&spec, 11), 1);
        match report.into_result() {
            Err(ProblemError::ObstacleOrder { x, lower, upper, .. }) => {
                assert!(lower > upper);
                assert!(x[0] > 0.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_diffusion_rejected() {
        let spec = constant_1d(-0.5, 0.0, 0.0, -1.0, 1.0, 1.0);
        let report = validate_problem(&spec, &lattice_for(&spec, 5), 1);
        assert!(matches!(
            report.hard_error,
            Some(ProblemError::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn exceeded_bounds_only_warn() {
        let mut spec = constant_1d(1.0, 2.0, 3.0, -1.0, 1.0, 1.0);
        spec.coefficients.bounds = BoundEstimates {
            drift: Some(1.0),
            cost: Some(10.0),
            ..BoundEstimates::default()
        };
        let report = validate_problem(&spec, &lattice_for(&spec, 5), 10);
        assert!(report.passed());
        assert_eq!(report.check("drift-bound").unwrap().status, CheckStatus::Warn);
        assert_eq!(report.check("cost-bound").unwrap().status, CheckStatus::Pass);
    }
}

//! Monotone explicit pseudo-time solver for the clamped Isaacs equation
//! `λv = median(H_h^±(x, D_h v, D²_h v), λψ₂, λψ₁)`, whose solution is the
//! solution of the double-obstacle variational inequality, together with an
//! audit of the four variational-inequality conditions.
//!
//! The update `v ← v + Δτ (median(H_h v, λψ₂, λψ₁) − λv)` is, under the CFL
//! restriction on `Δτ`, a convex combination of neighbour values and the
//! obstacle band, hence monotone and a sup-norm contraction with factor
//! `1 − Δτλ`. Starting inside `[ψ₂, ψ₁]` it never leaves the band.

mod audit;
mod convergence;
pub mod manufactured;
mod operator;

pub use convergence::{convergence_study, ConvergenceRow, ConvergenceTable, MIN_ORDER_CONTACT, MIN_ORDER_SMOOTH};
pub use audit::{write_audit_csv, AuditReport, ConditionResult, NodeStatus, AUDIT_CONSTANT_MAX};
pub use manufactured::{manufactured_instance, manufactured_spec, ProfileField, ProfileId, ProfileRole};
pub use operator::PARALLEL_THRESHOLD;

pub(crate) use operator::DiscreteOperator;

use std::fmt::Write as _;

use thiserror::Error;

use crate::grid::{cfl_timestep, GridError, GridFunction, Lattice, DEFAULT_SAFETY_FACTOR};
use crate::hamiltonian::{residual_unchecked, ResidualForm, ResidualTriple, Sign};
use crate::problem::{validate_problem, ProblemError, ProblemSpec};

/// Number of residual-history entries kept before decimation.
const HISTORY_CAP: usize = 512;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("no convergence after {iterations} iterations: residual {residual:e}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<(usize, f64)>,
    },
    #[error("unknown manufactured profile `{0}`")]
    UnknownProfile(String),
    #[error("profile {profile} is {expected}-dimensional, lattice is {found}-dimensional")]
    ProfileDimension {
        profile: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid solver option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// How the pseudo-time update is formed. All variants have the same fixed
/// point; the two residual nestings produce bit-identical iterates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateForm {
    /// `v + Δτ (median(H, λψ₂, λψ₁) − λv)`
    Clamped,
    /// `v − Δτ R(v)` with the double-obstacle residual in the given nesting.
    Residual(ResidualForm),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Stop once `‖median(H_h v, λψ₂, λψ₁) − λv‖∞ ≤ tolerance`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub sign: Sign,
    /// Fraction of the explicit stability limit used as `Δτ`.
    pub relaxation: f64,
    /// Contact band for the audit; `None` uses `10·tolerance·max(1, 1/λ)`.
    pub contact_eps: Option<f64>,
    pub update: UpdateForm,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: 1e-8,
            max_iterations: 1_000_000,
            sign: Sign::Plus,
            relaxation: DEFAULT_SAFETY_FACTOR,
            contact_eps: None,
            update: UpdateForm::Clamped,
        }
    }
}

impl SolveOptions {
    pub fn with_sign(&self, sign: Sign) -> Self {
        SolveOptions { sign, ..self.clone() }
    }

    fn check(&self) -> Result<(), SolverError> {
        if !(self.tolerance > 0.0) {
            return Err(SolverError::InvalidOption(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations < 1 {
            return Err(SolverError::InvalidOption("max_iterations must be at least 1".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(SolverError::InvalidOption(format!(
                "relaxation must lie in (0, 1], got {}",
                self.relaxation
            )));
        }
        if let Some(eps) = self.contact_eps {
            if !(eps >= 0.0) {
                return Err(SolverError::InvalidOption(format!("contact_eps must be non-negative, got {eps}")));
            }
        }
        Ok(())
    }

    pub fn resolved_contact_eps(&self, discount: f64) -> f64 {
        self.contact_eps
            .unwrap_or(10.0 * self.tolerance * (1.0f64).max(1.0 / discount))
    }
}

#[derive(Clone, Debug)]
pub struct VISolveReport {
    pub solution: GridFunction,
    pub iterations: usize,
    pub final_residual: f64,
    pub initial_residual: f64,
    /// `(iteration, residual)` samples, thinned geometrically.
    pub residual_history: Vec<(usize, f64)>,
    pub timestep: f64,
    pub contact_upper: Vec<usize>,
    pub contact_lower: Vec<usize>,
    pub vi_audit: AuditReport,
    pub options: SolveOptions,
}

impl VISolveReport {
    /// Upper bound on the iteration count implied by the contraction factor.
    pub fn iteration_bound(&self) -> f64 {
        let rate = self.timestep * self.vi_audit.discount;
        if self.initial_residual <= self.options.tolerance {
            return 0.0;
        }
        (self.initial_residual / self.options.tolerance).ln() / rate + 1.0
    }

    /// Key–value summary for run manifests.
    pub fn summary_text(&self) -> String {
        let lat = self.solution.lattice();
        let o = &self.options;
        let mut s = String::new();
        let _ = writeln!(s, "sign = \"{}\"", o.sign.name());
        let _ = writeln!(s, "tolerance = {:.16e}", o.tolerance);
        let _ = writeln!(s, "max_iterations = {}", o.max_iterations);
        let _ = writeln!(s, "relaxation = {:.16e}", o.relaxation);
        let _ = writeln!(s, "update = \"{:?}\"", o.update);
        let _ = writeln!(s, "nodes = {:?}", &lat.nodes()[..lat.dim()]);
        let _ = writeln!(s, "spacing = {:?}", &lat.spacing()[..lat.dim()]);
        let _ = writeln!(s, "timestep = {:.16e}", self.timestep);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "final_residual = {:.16e}", self.final_residual);
        let _ = writeln!(s, "contact_eps = {:.16e}", self.vi_audit.contact_eps);
        let _ = writeln!(s, "contact_lower_nodes = {}", self.contact_lower.len());
        let _ = writeln!(s, "contact_upper_nodes = {}", self.contact_upper.len());
        let _ = writeln!(s, "audit_tol = {:.16e}", self.vi_audit.audit_tol);
        let _ = writeln!(s, "audit_observed_constant = {:.16e}", self.vi_audit.observed_constant());
        let _ = writeln!(s, "audit_passed = {}", self.vi_audit.passed());
        s
    }
}

fn push_history(history: &mut Vec<(usize, f64)>, stride: &mut usize, iteration: usize, residual: f64) {
    if !iteration.is_multiple_of(*stride) {
        return;
    }
    history.push((iteration, residual));
    if history.len() >= 2 * HISTORY_CAP {
        *stride *= 2;
        let s = *stride;
        history.retain(|(k, _)| k % s == 0);
    }
}

/// Solves the clamped equation by explicit pseudo-time iteration from
/// `clamp(r/λ, ψ₂, ψ₁)` (running cost at the first control pair).
pub fn solve_vi(spec: &ProblemSpec, lattice: &Lattice, opts: &SolveOptions) -> Result<VISolveReport, SolverError> {
    opts.check()?;
    validate_problem(spec, lattice, 0).into_result()?;
    let op = DiscreteOperator::build(spec, lattice)?;
    solve_with_operator(spec, &op, opts)
}

pub(crate) fn solve_with_operator(
    spec: &ProblemSpec,
    op: &DiscreteOperator,
    opts: &SolveOptions,
) -> Result<VISolveReport, SolverError> {
    let lattice = op.lattice;
    let dim = spec.dim;
    let lambda = spec.discount;
    let dt = cfl_timestep(spec, &lattice, opts.relaxation);
    let sign = opts.sign;
    let pinned: Vec<Option<f64>> = (0..lattice.len()).map(|i| op.pinned(i, sign)).collect();
    let initial: Vec<f64> = (0..lattice.len())
        .map(|i| match pinned[i] {
            Some(g) => g,
            None => spec.clamped_cost_ratio(&lattice.point(i)[..dim]),
        })
        .collect();

    let step = |i: usize, v: &[f64]| -> (f64, f64) {
        if let Some(g) = pinned[i] {
            return (g, 0.0);
        }
        match opts.update {
            UpdateForm::Clamped => {
                let r = op.clamped(i, v, sign) - lambda * v[i];
                (v[i] + dt * r, r.abs())
            }
            UpdateForm::Residual(form) => {
                let h = op.hamiltonian(i, v, sign);
                let t = ResidualTriple::at(v[i], h, op.psi_lower[i], op.psi_upper[i], lambda);
                let r = residual_unchecked(t, form);
                (v[i] - dt * r, r.abs())
            }
        }
    };

    let mut v = initial;
    let mut next = vec![0.0; v.len()];
    let mut history = Vec::new();
    let mut stride = 1usize;
    let mut initial_residual = f64::NAN;
    let mut iterations = 0usize;
    loop {
        let residual = op.sweep(&v, &mut next, step);
        if iterations == 0 {
            initial_residual = residual;
        }
        push_history(&mut history, &mut stride, iterations, residual);
        if residual <= opts.tolerance {
            if history.last().map(|h| h.0) != Some(iterations) {
                history.push((iterations, residual));
            }
            let solution = GridFunction::new(lattice, v)?;
            let eps = opts.resolved_contact_eps(lambda);
            let audit = audit::audit_with_operator(&solution, spec, op, sign, eps);
            return Ok(VISolveReport {
                contact_upper: audit.nodes_with(|s| matches!(s, NodeStatus::UpperContact | NodeStatus::DualContact)),
                contact_lower: audit.nodes_with(|s| matches!(s, NodeStatus::LowerContact | NodeStatus::DualContact)),
                solution,
                iterations,
                final_residual: residual,
                initial_residual,
                residual_history: history,
                timestep: dt,
                vi_audit: audit,
                options: opts.clone(),
            });
        }
        if iterations >= opts.max_iterations || !residual.is_finite() {
            history.push((iterations, residual));
            return Err(SolverError::NonConvergence {
                iterations,
                residual,
                history,
            });
        }
        std::mem::swap(&mut v, &mut next);
        iterations += 1;
    }
}

/// Audits a converged solution against the variational-inequality
/// conditions using the solver's discrete Hamiltonian.
pub fn verify_vi_conditions(
    report: &VISolveReport,
    spec: &ProblemSpec,
    contact_eps: f64,
) -> Result<AuditReport, SolverError> {
    let op = DiscreteOperator::build(spec, report.solution.lattice())?;
    Ok(audit::audit_with_operator(
        &report.solution,
        spec,
        &op,
        report.options.sign,
        contact_eps,
    ))
}

/// Both sign variants and their nodewise sup-norm difference.
#[derive(Clone, Debug)]
pub struct GapReport {
    pub upper: VISolveReport,
    pub lower: VISolveReport,
    pub gap: f64,
}

pub fn solve_both_signs(spec: &ProblemSpec, lattice: &Lattice, opts: &SolveOptions) -> Result<GapReport, SolverError> {
    opts.check()?;
    validate_problem(spec, lattice, 0).into_result()?;
    let op = DiscreteOperator::build(spec, lattice)?;
    let upper = solve_with_operator(spec, &op, &opts.with_sign(Sign::Plus))?;
    let lower = solve_with_operator(spec, &op, &opts.with_sign(Sign::Minus))?;
    let gap = upper.solution.max_abs_diff(&lower.solution);
    Ok(GapReport { upper, lower, gap })
}

/// `‖v⁺ − v⁻‖∞` between the upper and lower solutions.
pub fn upper_lower_gap(spec: &ProblemSpec, lattice: &Lattice, opts: &SolveOptions) -> Result<f64, SolverError> {
    Ok(solve_both_signs(spec, lattice, opts)?.gap)
}

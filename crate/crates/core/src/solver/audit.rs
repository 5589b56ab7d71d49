//! Nodewise audit of the variational-inequality conditions:
//!
//! * sandwich `ψ₂ ≤ v ≤ ψ₁` at every node;
//! * `λv − H = 0` where `ψ₂ < v < ψ₁`;
//! * `λv − H ≥ 0` where `v = ψ₂`;
//! * `λv − H ≤ 0` where `v = ψ₁`.
//!
//! Equalities are decided with a contact band `|v − ψᵢ| ≤ contact_eps`. Sign
//! conditions use the solver's discrete Hamiltonian and are checked on the
//! interior sub-box only, away from the truncation boundary. Where the two
//! obstacles coincide the sign conditions are vacuous and only the sandwich
//! is checked.

use std::io::Write;

use super::DiscreteOperator;
use crate::grid::{GridError, GridFunction, INTERIOR_MARGIN};
use crate::hamiltonian::Sign;
use crate::problem::ProblemSpec;

/// Largest admissible ratio of the worst violation to the mesh size.
pub const AUDIT_CONSTANT_MAX: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeStatus {
    Interior,
    LowerContact,
    UpperContact,
    /// `ψ₁ = ψ₂` at the node.
    DualContact,
}

impl NodeStatus {
    pub fn name(self) -> &'static str {
        match self {
            NodeStatus::Interior => "interior",
            NodeStatus::LowerContact => "lower-contact",
            NodeStatus::UpperContact => "upper-contact",
            NodeStatus::DualContact => "dual-contact",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionResult {
    pub name: &'static str,
    /// Largest violation (0 when satisfied everywhere).
    pub worst: f64,
    /// Node attaining `worst`, if any node was checked.
    pub node: Option<usize>,
    pub checked: usize,
}

impl ConditionResult {
    fn new(name: &'static str) -> Self {
        ConditionResult {
            name,
            worst: 0.0,
            node: None,
            checked: 0,
        }
    }

    fn record(&mut self, node: usize, violation: f64) {
        self.checked += 1;
        if self.node.is_none() || violation > self.worst || violation.is_nan() {
            self.worst = violation;
            self.node = Some(node);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub discount: f64,
    pub contact_eps: f64,
    pub max_spacing: f64,
    /// `AUDIT_CONSTANT_MAX · max h`
    pub audit_tol: f64,
    /// sandwich, equation, lower-contact, upper-contact
    pub conditions: Vec<ConditionResult>,
    pub status: Vec<NodeStatus>,
    /// Per-node violation of whichever conditions apply there.
    pub violation: Vec<f64>,
}

impl AuditReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn worst(&self) -> f64 {
        self.conditions.iter().map(|c| c.worst).fold(0.0, f64::max)
    }

    /// Worst violation divided by the mesh size.
    pub fn observed_constant(&self) -> f64 {
        self.worst() / self.max_spacing
    }

    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.worst <= self.audit_tol)
    }

    pub fn nodes_with(&self, pred: impl Fn(NodeStatus) -> bool) -> Vec<usize> {
        self.status
            .iter()
            .enumerate()
            .filter(|(_, s)| pred(**s))
            .map(|(i, _)| i)
            .collect()
    }
}

fn classify(v: f64, lo: f64, hi: f64, eps: f64) -> NodeStatus {
    if lo == hi {
        return NodeStatus::DualContact;
    }
    let (dl, du) = ((v - lo).abs(), (hi - v).abs());
    match (dl <= eps, du <= eps) {
        (true, true) if du < dl => NodeStatus::UpperContact,
        (true, _) => NodeStatus::LowerContact,
        (false, true) => NodeStatus::UpperContact,
        (false, false) => NodeStatus::Interior,
    }
}

pub(crate) fn audit_with_operator(
    solution: &GridFunction,
    spec: &ProblemSpec,
    op: &DiscreteOperator,
    sign: Sign,
    contact_eps: f64,
) -> AuditReport {
    let lattice = solution.lattice();
    let lambda = spec.discount;
    let v = solution.values();
    let mut sandwich = ConditionResult::new("sandwich");
    let mut equation = ConditionResult::new("equation");
    let mut lower = ConditionResult::new("lower-contact");
    let mut upper = ConditionResult::new("upper-contact");
    let mut status = Vec::with_capacity(v.len());
    let mut violation = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let (lo, hi) = (op.psi_lower[i], op.psi_upper[i]);
        let s = classify(v[i], lo, hi, contact_eps);
        status.push(s);
        let mut worst = (lo - v[i]).max(v[i] - hi).max(0.0);
        sandwich.record(i, worst);
        if !lattice.is_boundary(i) && lattice.in_interior_subbox(i, INTERIOR_MARGIN) {
            let f = lambda * v[i] - op.hamiltonian(i, v, sign);
            let bad = match s {
                NodeStatus::Interior => {
                    equation.record(i, f.abs());
                    f.abs()
                }
                NodeStatus::LowerContact => {
                    lower.record(i, (-f).max(0.0));
                    (-f).max(0.0)
                }
                NodeStatus::UpperContact => {
                    upper.record(i, f.max(0.0));
                    f.max(0.0)
                }
                NodeStatus::DualContact => 0.0,
            };
            worst = worst.max(bad);
        }
        violation.push(worst);
    }
    let max_spacing = lattice.max_spacing();
    AuditReport {
        discount: lambda,
        contact_eps,
        max_spacing,
        audit_tol: AUDIT_CONSTANT_MAX * max_spacing,
        conditions: vec![sandwich, equation, lower, upper],
        status,
        violation,
    }
}

/// Writes `node,status,violation` rows.
pub fn write_audit_csv<W: Write>(audit: &AuditReport, mut out: W) -> Result<(), GridError> {
    writeln!(out, "node,status,violation")?;
    for (i, (s, v)) in audit.status.iter().zip(&audit.violation).enumerate() {
        writeln!(out, "{i},{},{v:.16e}", s.name())?;
    }
    Ok(())
}

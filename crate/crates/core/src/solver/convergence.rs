use std::io::Write;

use super::manufactured::{manufactured_instance, ProfileId};
use super::{solve_vi, SolveOptions, SolverError};
use crate::grid::{Lattice, INTERIOR_MARGIN};
use crate::problem::BoxDomain;

/// Smallest terminal observed order accepted for profiles without contact.
pub const MIN_ORDER_SMOOTH: f64 = 0.8;
/// Smallest terminal observed order accepted for contact profiles, whose
/// order may dip near the free boundary.
pub const MIN_ORDER_CONTACT: f64 = 0.5;

/// One refinement level.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub nodes: Vec<usize>,
    pub max_spacing: f64,
    /// `‖v − w*‖∞` over the interior sub-box.
    pub interior_error: f64,
    /// `log(e_{k−1}/e_k) / log(h_{k−1}/h_k)`; `None` on the coarsest level.
    pub observed_order: Option<f64>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub profile: ProfileId,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].interior_error < w[0].interior_error)
    }

    pub fn terminal_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.observed_order)
    }

    /// Order threshold that applies to this profile.
    pub fn required_order(&self) -> f64 {
        if self.profile.has_contact() {
            MIN_ORDER_CONTACT
        } else {
            MIN_ORDER_SMOOTH
        }
    }

    pub fn passed(&self) -> bool {
        self.strictly_decreasing() && self.terminal_order().is_some_and(|o| o >= self.required_order())
    }

    /// Columns `nodes,h,interior_error,observed_order,iterations`; nodes
    /// are joined by `x` in two dimensions.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "nodes,h,interior_error,observed_order,iterations")?;
        for r in &self.rows {
            let nodes: Vec<String> = r.nodes.iter().map(usize::to_string).collect();
            writeln!(
                out,
                "{},{:.16e},{:.16e},{},{}",
                nodes.join("x"),
                r.max_spacing,
                r.interior_error,
                r.observed_order.map(|o| format!("{o:.16e}")).unwrap_or_default(),
                r.iterations
            )?;
        }
        Ok(())
    }
}

/// Solves a manufactured profile on `levels` grids, each halving the
/// spacing of the previous one, starting from `base_nodes`.
pub fn convergence_study(
    profile: ProfileId,
    domain: &BoxDomain,
    base_nodes: &[usize],
    levels: usize,
    opts: &SolveOptions,
) -> Result<ConvergenceTable, SolverError> {
    if levels < 2 {
        return Err(SolverError::InvalidOption(format!(
            "a convergence study needs at least 2 levels, got {levels}"
        )));
    }
    let base = Lattice::new(domain, base_nodes)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let lattice = base.refined(1 << level);
        let (spec, exact) = manufactured_instance(profile.name(), &lattice)?;
        let report = solve_vi(&spec, &lattice, opts)?;
        let interior_error = report
            .solution
            .max_abs_diff_where(&exact, |i| lattice.in_interior_subbox(i, INTERIOR_MARGIN));
        let max_spacing = lattice.max_spacing();
        let observed_order = rows
            .last()
            .map(|prev| (prev.interior_error / interior_error).ln() / (prev.max_spacing / max_spacing).ln());
        rows.push(ConvergenceRow {
            nodes: lattice.nodes()[..lattice.dim()].to_vec(),
            max_spacing,
            interior_error,
            observed_order,
            iterations: report.iterations,
        });
    }
    Ok(ConvergenceTable { profile, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_profile_converges_at_first_order() {
        let domain = BoxDomain::new(&[-1.0], &[1.0]).unwrap();
        let table = convergence_study(ProfileId::Smooth1dInterior, &domain, &[41], 3, &SolveOptions::default()).unwrap();
        assert_eq!(table.rows.iter().map(|r| r.nodes[0]).collect::<Vec<_>>(), vec![41, 81, 161]);
        assert!(table.passed(), "{table:?}");
        let mut csv = Vec::new();
        table.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
    }

    #[test]
    fn one_level_is_rejected() {
        let domain = BoxDomain::new(&[-1.0], &[1.0]).unwrap();
        let err = convergence_study(ProfileId::Smooth1dInterior, &domain, &[41], 1, &SolveOptions::default());
        assert!(matches!(err, Err(SolverError::InvalidOption(_))));
    }
}

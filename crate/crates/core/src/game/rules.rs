use std::fmt;
use std::sync::Arc;

use crate::grid::GridFunction;
use crate::linalg::Vector;
use crate::problem::ProblemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Fire once `x[axis] ≥ level`.
    Up,
    /// Fire once `x[axis] ≤ level`.
    Down,
}

/// Grid representation of the gap between a solved value and one obstacle:
/// `w − ψ₂` for the lower contact set, `ψ₁ − w` for the upper one. Both `w`
/// and `ψ` enter through their nodal values and are interpolated
/// multilinearly off the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactData {
    pub gap: Arc<GridFunction>,
    pub eps: f64,
}

impl ContactData {
    pub fn lower(w: &GridFunction, spec: &ProblemSpec, eps: f64) -> Self {
        let lat = *w.lattice();
        let dim = lat.dim();
        let gap = (0..lat.len())
            .map(|i| w.get(i) - spec.psi_lower(&lat.point(i)[..dim]))
            .collect();
        ContactData {
            gap: Arc::new(GridFunction::new(lat, gap).expect("finite gap")),
            eps,
        }
    }

    pub fn upper(w: &GridFunction, spec: &ProblemSpec, eps: f64) -> Self {
        let lat = *w.lattice();
        let dim = lat.dim();
        let gap = (0..lat.len())
            .map(|i| spec.psi_upper(&lat.point(i)[..dim]) - w.get(i))
            .collect();
        ContactData {
            gap: Arc::new(GridFunction::new(lat, gap).expect("finite gap")),
            eps,
        }
    }

    /// In contact iff inside the grid box and the interpolated gap is at
    /// most `eps`. Outside the box the value is unknown and the rule waits.
    #[inline]
    pub fn touches(&self, x: &[f64]) -> bool {
        matches!(self.gap.interpolate(x), Some(g) if g <= self.eps)
    }
}

/// A stopping rule whose decision at step `n` is a function of `X_0..X_n`.
#[derive(Clone, Debug, PartialEq)]
pub enum StoppingRule {
    Never,
    /// Stop at the first step with `t ≥ t₀`.
    FixedTime(f64),
    Threshold {
        axis: usize,
        level: f64,
        direction: Direction,
    },
    /// Stop on leaving the box `[lower, upper]`.
    FirstExit { lower: Vector, upper: Vector },
    /// `θ̂`: first entry into the upper contact set.
    HitUpperContact(ContactData),
    /// `τ̂`: first entry into the lower contact set.
    HitLowerContact(ContactData),
}

impl StoppingRule {
    pub fn label(&self) -> String {
        match self {
            StoppingRule::Never => "never".into(),
            StoppingRule::FixedTime(t) => format!("fixed-time({t})"),
            StoppingRule::Threshold {
                axis,
                level,
                direction,
            } => format!(
                "threshold(x[{axis}] {} {level})",
                if *direction == Direction::Up { ">=" } else { "<=" }
            ),
            StoppingRule::FirstExit { lower, upper } => format!("first-exit({lower:?}..{upper:?})"),
            StoppingRule::HitUpperContact(_) => "hit-upper-contact".into(),
            StoppingRule::HitLowerContact(_) => "hit-lower-contact".into(),
        }
    }

    /// Whether the rule stops immediately at time 0 whatever the start.
    pub fn is_immediate(&self) -> bool {
        matches!(self, StoppingRule::FixedTime(t) if *t <= 0.0)
    }

    /// Fresh monitor for one path.
    pub fn monitor(&self, dt: f64) -> RuleMonitor<'_> {
        let fire_step = match self {
            StoppingRule::FixedTime(t) => ((t / dt - 1e-9).ceil().max(0.0)) as u64,
            _ => 0,
        };
        RuleMonitor {
            rule: self,
            fire_step,
            fired: None,
        }
    }
}

impl fmt::Display for StoppingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Observes a path one state at a time. Once fired it latches, so decisions
/// already taken cannot depend on later states.
#[derive(Clone, Debug)]
pub struct RuleMonitor<'a> {
    rule: &'a StoppingRule,
    fire_step: u64,
    fired: Option<usize>,
}

impl RuleMonitor<'_> {
    /// Feeds `X_step = x` and returns whether the rule has fired at or
    /// before this step.
    #[inline]
    pub fn observe(&mut self, step: usize, x: &[f64]) -> bool {
        if self.fired.is_some() {
            return true;
        }
        let fire = match self.rule {
            StoppingRule::Never => false,
            StoppingRule::FixedTime(_) => step as u64 >= self.fire_step,
            StoppingRule::Threshold {
                axis,
                level,
                direction,
            } => match direction {
                Direction::Up => x[*axis] >= *level,
                Direction::Down => x[*axis] <= *level,
            },
            StoppingRule::FirstExit { lower, upper } => (0..x.len()).any(|k| x[k] < lower[k] || x[k] > upper[k]),
            StoppingRule::HitUpperContact(c) | StoppingRule::HitLowerContact(c) => c.touches(x),
        };
        if fire {
            self.fired = Some(step);
        }
        fire
    }

    pub fn fired(&self) -> Option<usize> {
        self.fired
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Lattice;
    use crate::problem::test_support::constant_1d;

    #[test]
    fn fixed_time_fires_on_schedule() {
        let rule = StoppingRule::FixedTime(0.3);
        let mut m = rule.monitor(0.1);
        let fired: Vec<bool> = (0..5).map(|n| m.observe(n, &[0.0])).collect();
        assert_eq!(fired, vec![false, false, false, true, true]);
        assert_eq!(m.fired(), Some(3));
        let rule = StoppingRule::FixedTime(0.0);
        assert!(rule.monitor(0.1).observe(0, &[5.0]));
        assert!(rule.is_immediate());
    }

    #[test]
    fn decisions_are_non_anticipating() {
        // two paths sharing a prefix of length 4 make identical decisions on it
        let prefix = [0.0, 0.2, 0.45, 0.7];
        let a: Vec<f64> = prefix.iter().copied().chain([0.1, -0.3]).collect();
        let b: Vec<f64> = prefix.iter().copied().chain([2.0, 3.0]).collect();
        let rules = [
            StoppingRule::Threshold {
                axis: 0,
                level: 0.5,
                direction: Direction::Up,
            },
            StoppingRule::Threshold {
                axis: 0,
                level: 0.1,
                direction: Direction::Down,
            },
            StoppingRule::FirstExit {
                lower: [-1.0, 0.0],
                upper: [0.6, 0.0],
            },
            StoppingRule::FixedTime(0.25),
            StoppingRule::Never,
        ];
        for rule in &rules {
            let mut ma = rule.monitor(0.1);
            let mut mb = rule.monitor(0.1);
            for n in 0..prefix.len() {
                assert_eq!(ma.observe(n, &[a[n]]), mb.observe(n, &[b[n]]), "{rule}");
            }
            // once fired, later states cannot revoke the decision
            let before = ma.fired();
            for (n, x) in a.iter().enumerate().skip(prefix.len()) {
                ma.observe(n, &[*x]);
            }
            if before.is_some() {
                assert_eq!(ma.fired(), before);
            }
        }
    }

    #[test]
    fn contact_rules_use_interpolated_gap() {
        let spec = constant_1d(1.0, 0.0, 0.0, -1.0, 1.0, 1.0);
        let lat = Lattice::from_bounds(&[-1.0], &[1.0], &[5]).unwrap();
        // w touches ψ₂ = −1 at the left end only
        let w = GridFunction::from_fn(lat, |x| x[0]);
        let lower = ContactData::lower(&w, &spec, 0.1);
        assert!(lower.touches(&[-1.0]));
        assert!(lower.touches(&[-0.95]));
        assert!(!lower.touches(&[-0.5]));
        // outside the box the rule never fires
        assert!(!lower.touches(&[-1.5]));
        let upper = ContactData::upper(&w, &spec, 0.1);
        assert!(upper.touches(&[1.0]) && !upper.touches(&[0.0]));
    }
}

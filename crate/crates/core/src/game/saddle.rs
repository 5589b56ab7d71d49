use super::engine::{estimate_pairs, BatchResult, MCEstimate, PayoffData, RuleBattery};
use super::rules::{ContactData, Direction, StoppingRule};
use super::sde::SdeModel;
use super::{GameError, MCConfig};
use crate::grid::GridFunction;
use crate::problem::ProblemSpec;

/// Constant `C` of the discretisation allowance `C(h + √dt)`.
pub const TOL_NUM_CONSTANT: f64 = 1.0;

/// Largest fraction of main-pair paths allowed to leave the box before the
/// game stops.
pub const MAX_EXIT_FRACTION: f64 = 0.01;

/// Fixed-time alternatives of the default battery.
const FIXED_TIMES: [f64; 4] = [0.0, 0.1, 0.5, 2.0];

/// Threshold offsets of the default battery, as fractions of the box width
/// along the first axis.
const THRESHOLD_OFFSET: f64 = 0.15;

/// Contact band of the hitting rules: `max(10h², 10·tol)`. The gap
/// `w − ψ` grows quadratically away from a smooth contact boundary, so a
/// band of `10h²` in the gap is a band of about `3h` in space.
pub fn game_contact_eps(max_spacing: f64, solver_tolerance: f64) -> f64 {
    (10.0 * max_spacing * max_spacing).max(10.0 * solver_tolerance)
}

/// Deviations tried by each player against the hitting-time strategies.
#[derive(Clone, Debug, PartialEq)]
pub struct Alternatives {
    /// Alternatives for the minimizer, played against `τ̂`.
    pub theta: Vec<StoppingRule>,
    /// Alternatives for the maximizer, played against `θ̂`.
    pub tau: Vec<StoppingRule>,
}

/// For each player: never stop, stop at fixed times 0, 0.1, 0.5 and 2,
/// stop on crossing `x0 ± 0.15·width` along the first axis, and stop on
/// leaving the box of half-width `0.25·width` around `x0`.
pub fn default_alternatives(spec: &ProblemSpec, x0: &[f64]) -> Alternatives {
    let width = spec.domain.width(0);
    let mut lower = [0.0; 2];
    let mut upper = [0.0; 2];
    for k in 0..spec.dim {
        lower[k] = x0[k] - 0.25 * spec.domain.width(k);
        upper[k] = x0[k] + 0.25 * spec.domain.width(k);
    }
    let battery = || {
        let mut rules = vec![StoppingRule::Never];
        rules.extend(FIXED_TIMES.iter().map(|&t| StoppingRule::FixedTime(t)));
        for (direction, sign) in [(Direction::Up, 1.0), (Direction::Down, -1.0)] {
            rules.push(StoppingRule::Threshold {
                axis: 0,
                level: x0[0] + sign * THRESHOLD_OFFSET * width,
                direction,
            });
        }
        rules.push(StoppingRule::FirstExit { lower, upper });
        rules
    };
    Alternatives {
        theta: battery(),
        tau: battery(),
    }
}

/// One inequality of the saddle battery.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonCheck {
    /// `value`, `tau-alternative`, `theta-alternative`, `immediate-theta`
    /// or `immediate-tau`.
    pub kind: &'static str,
    pub rule: String,
    /// Estimate of the compared payoff.
    pub estimate: MCEstimate,
    /// Mean of the compared payoff minus the reference (`w(x₀)` for the
    /// value check, `R(x₀, θ̂, τ̂)` otherwise), path by path.
    pub difference: f64,
    /// Standard error of the paired difference.
    pub std_error: f64,
    /// `3·SE + tol_num`.
    pub margin: f64,
    /// Predicted difference for value and immediate-stop checks.
    pub expected: Option<f64>,
    pub passed: bool,
}

/// Outcome of [`saddle_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct SaddleReport {
    pub x0: Vec<f64>,
    /// `w(x₀)` by multilinear interpolation.
    pub w_x0: f64,
    pub contact_eps: f64,
    pub max_spacing: f64,
    pub truncation_bound: f64,
    /// `C(h + √dt) + truncation_bound`.
    pub tol_num: f64,
    /// `R(x₀, θ̂, τ̂)`.
    pub main: MCEstimate,
    pub value_check: ComparisonCheck,
    pub tau_checks: Vec<ComparisonCheck>,
    pub theta_checks: Vec<ComparisonCheck>,
    /// Immediate-stop alternatives against the predicted slack
    /// `ψ₁(x₀) − w(x₀)` or `w(x₀) − ψ₂(x₀)`.
    pub immediate_checks: Vec<ComparisonCheck>,
    pub exit_fraction_ok: bool,
}

impl SaddleReport {
    pub fn checks(&self) -> impl Iterator<Item = &ComparisonCheck> {
        std::iter::once(&self.value_check)
            .chain(&self.tau_checks)
            .chain(&self.theta_checks)
            .chain(&self.immediate_checks)
    }

    pub fn passed(&self) -> bool {
        self.exit_fraction_ok && self.checks().all(|c| c.passed)
    }

    /// Every immediate-stop check passed with a predicted slack larger than
    /// its margin.
    pub fn immediate_strictly_slack(&self) -> bool {
        !self.immediate_checks.is_empty()
            && self
                .immediate_checks
                .iter()
                .all(|c| c.passed && c.expected.is_some_and(|e| e.abs() > c.margin))
    }
}

/// Checks that the hitting times `θ̂` of `{w = ψ₁}` and `τ̂` of `{w = ψ₂}`
/// reproduce `w(x₀)` and form a saddle point against the alternatives:
/// `R(x₀, θ̂, τ) ≤ R(x₀, θ̂, τ̂) ≤ R(x₀, θ, τ̂)` up to `3·SE + tol_num`,
/// with all payoffs evaluated on the same paths. Passing is necessary, not
/// sufficient, evidence of the saddle property, since only finitely many
/// deviations are tried.
pub fn saddle_check(
    spec: &ProblemSpec,
    w: &GridFunction,
    x0: &[f64],
    alternatives: &Alternatives,
    mc: &MCConfig,
    contact_eps: f64,
) -> Result<SaddleReport, GameError> {
    Ok(saddle_check_with_samples(spec, w, x0, alternatives, mc, contact_eps)?.0)
}

/// [`saddle_check`], also returning the per-path outcomes. Pair 0 is
/// `(θ̂, τ̂)`, followed by the `τ` alternatives and then the `θ`
/// alternatives.
pub fn saddle_check_with_samples(
    spec: &ProblemSpec,
    w: &GridFunction,
    x0: &[f64],
    alternatives: &Alternatives,
    mc: &MCConfig,
    contact_eps: f64,
) -> Result<(SaddleReport, BatchResult), GameError> {
    let model = SdeModel::from_spec(spec)?;
    let data = PayoffData::from_spec(spec)?;
    let lattice = w.lattice();
    let w_x0 = w.interpolate(x0).ok_or_else(|| {
        GameError::InvalidConfig(format!("x0 = {x0:?} lies outside the grid box"))
    })?;

    let theta_hat = StoppingRule::HitUpperContact(ContactData::upper(w, spec, contact_eps));
    let tau_hat = StoppingRule::HitLowerContact(ContactData::lower(w, spec, contact_eps));
    let mut rules = vec![theta_hat, tau_hat];
    let mut pairs = vec![(0, 1)];
    let theta_start = rules.len();
    rules.extend(alternatives.theta.iter().cloned());
    let tau_start = rules.len();
    rules.extend(alternatives.tau.iter().cloned());
    for k in 0..alternatives.tau.len() {
        pairs.push((0, tau_start + k));
    }
    for k in 0..alternatives.theta.len() {
        pairs.push((theta_start + k, 1));
    }
    let battery = RuleBattery { rules, pairs };
    let batch = estimate_pairs(&model, x0, &battery, &data, &spec.domain, mc)?;

    let truncation_bound = data.truncation_bound(lattice, mc);
    let h = lattice.max_spacing();
    let tol_num = TOL_NUM_CONSTANT * (h + mc.dt.sqrt()) + truncation_bound;
    let main = batch.estimate(0);

    let value_check = {
        let difference = main.mean - w_x0;
        let margin = 3.0 * main.std_error + tol_num;
        ComparisonCheck {
            kind: "value",
            rule: "hit-upper-contact/hit-lower-contact".into(),
            estimate: main.clone(),
            difference,
            std_error: main.std_error,
            margin,
            expected: Some(0.0),
            passed: difference.abs() <= margin,
        }
    };

    let compare = |pair: usize, kind: &'static str, rule: &StoppingRule, upper_side: bool| {
        let (difference, std_error) = batch.difference(pair, 0);
        let margin = 3.0 * std_error + tol_num;
        ComparisonCheck {
            kind,
            rule: rule.label(),
            estimate: batch.estimate(pair),
            difference,
            std_error,
            margin,
            expected: None,
            passed: if upper_side {
                difference <= margin
            } else {
                difference >= -margin
            },
        }
    };
    let tau_checks: Vec<_> = alternatives
        .tau
        .iter()
        .enumerate()
        .map(|(k, r)| compare(1 + k, "tau-alternative", r, true))
        .collect();
    let theta_checks: Vec<_> = alternatives
        .theta
        .iter()
        .enumerate()
        .map(|(k, r)| compare(1 + alternatives.tau.len() + k, "theta-alternative", r, false))
        .collect();

    let mut immediate_checks = Vec::new();
    let x0s = &x0[..spec.dim];
    for (checks, kind, expected) in [
        (&theta_checks, "immediate-theta", spec.psi_upper(x0s) - w_x0),
        (&tau_checks, "immediate-tau", spec.psi_lower(x0s) - w_x0),
    ] {
        let immediate = alternatives_of(kind, alternatives);
        for (check, rule) in checks.iter().zip(immediate) {
            if !rule.is_immediate() {
                continue;
            }
            let mut c = check.clone();
            c.kind = kind;
            c.expected = Some(expected);
            c.passed = (c.difference - expected).abs() <= c.margin;
            immediate_checks.push(c);
        }
    }

    let report = SaddleReport {
        x0: x0.to_vec(),
        w_x0,
        contact_eps,
        max_spacing: h,
        truncation_bound,
        tol_num,
        exit_fraction_ok: main.exit_fraction < MAX_EXIT_FRACTION,
        main,
        value_check,
        tau_checks,
        theta_checks,
        immediate_checks,
    };
    Ok((report, batch))
}

fn alternatives_of<'a>(kind: &str, alternatives: &'a Alternatives) -> &'a [StoppingRule] {
    if kind == "immediate-theta" {
        &alternatives.theta
    } else {
        &alternatives.tau
    }
}

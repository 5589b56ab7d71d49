//! Acceptance run: one PASS/FAIL line per criterion, at the pinned
//! tolerances. Exits with status 1 if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use bilateral::config::ResolvedInstance;
use bilateral::game::{default_alternatives, default_chain_step, dynkin_oracle, saddle_check, MCConfig, SaddleReport};
use bilateral::hamiltonian::identities::{random_args, random_instance, run_identity_suites};
use bilateral::hamiltonian::{eval_h_minus, eval_h_plus, HamiltonianArgs};
use bilateral::linalg::ZERO_MATRIX;
use bilateral::registry;
use bilateral::solver::{convergence_study, solve_both_signs, solve_vi, ProfileId, SolveOptions, MIN_ORDER_SMOOTH};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Pointwise tolerance of the closed-form, sandwich and oracle criteria.
const POINTWISE_TOL: f64 = 1e-8;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn instance(name: &str) -> ResolvedInstance {
    registry::load(name).unwrap().resolve().unwrap()
}

fn criterion_1() -> Outcome {
    let report = run_identity_suites(100_000, 2024);
    let suites: Vec<String> = report
        .suites
        .iter()
        .map(|s| format!("{} {}/{} max {:.1e}", s.name, s.violations, s.trials, s.max_deviation))
        .collect();
    outcome(
        report.passed() && report.max_deviation() <= 1e-12,
        format!("{} (tolerance {:.0e})", suites.join(", "), report.tolerance),
    )
}

fn criterion_2() -> Outcome {
    let mut details = Vec::new();
    let mut passed = true;
    for name in ["degenerate-1d", "degenerate-2d"] {
        let r = instance(name);
        let solved = solve_vi(&r.spec, &r.lattice, &r.solve).unwrap();
        let dim = r.spec.dim;
        let err = (0..r.lattice.len())
            .map(|i| (solved.solution.get(i) - r.spec.clamped_cost_ratio(&r.lattice.point(i)[..dim])).abs())
            .fold(0.0, f64::max);
        passed &= err <= POINTWISE_TOL;
        details.push(format!("{name} sup error {err:.2e}"));
    }
    outcome(passed, details.join(", "))
}

fn criterion_3_and_4() -> (Outcome, Outcome) {
    let mut sandwich_ok = true;
    let mut worst_sandwich = 0.0f64;
    let mut audit_ok = true;
    let mut audit_lines = Vec::new();
    for name in registry::names() {
        let r = instance(name);
        let solved = solve_vi(&r.spec, &r.lattice, &r.solve).unwrap();
        let dim = r.spec.dim;
        for i in 0..r.lattice.len() {
            let x = &r.lattice.point(i)[..dim];
            let w = solved.solution.get(i);
            let excess = (r.spec.psi_lower(x) - w).max(w - r.spec.psi_upper(x));
            worst_sandwich = worst_sandwich.max(excess);
        }
        let audit = &solved.vi_audit;
        let constant = audit.observed_constant();
        audit_ok &= audit.passed() && constant <= 10.0;
        let per_condition: Vec<String> = audit
            .conditions
            .iter()
            .map(|c| format!("{}={:.1e}", c.name, c.worst))
            .collect();
        audit_lines.push(format!("{name}: C={constant:.2e} [{}]", per_condition.join(" ")));
    }
    sandwich_ok &= worst_sandwich <= POINTWISE_TOL;
    (
        outcome(
            sandwich_ok,
            format!(
                "{} instances, worst obstacle excess {worst_sandwich:.2e}",
                registry::names().count()
            ),
        ),
        outcome(audit_ok, audit_lines.join("; ")),
    )
}

fn criterion_5() -> Outcome {
    let domain = instance("smooth-1d-interior").spec.domain;
    let table = convergence_study(ProfileId::Smooth1dInterior, &domain, &[101], 3, &SolveOptions::default()).unwrap();
    let rows: Vec<String> = table
        .rows
        .iter()
        .map(|r| {
            format!(
                "{} nodes err {:.3e}{}",
                r.nodes[0],
                r.interior_error,
                r.observed_order.map(|o| format!(" order {o:.3}")).unwrap_or_default()
            )
        })
        .collect();
    let order = table.terminal_order().unwrap_or(f64::NAN);
    outcome(
        table.strictly_decreasing() && order >= MIN_ORDER_SMOOTH,
        rows.join(", "),
    )
}

fn criterion_6() -> Outcome {
    let opts = SolveOptions {
        tolerance: 1e-9,
        ..SolveOptions::default()
    };
    let mut passed = true;
    let mut details = Vec::new();
    for name in registry::names() {
        let r = instance(name);
        if r.spec.dim != 1 || !r.spec.is_uncontrolled() {
            continue;
        }
        let solved = solve_vi(&r.spec, &r.lattice, &opts).unwrap();
        let step = default_chain_step(&r.spec, &r.lattice).unwrap();
        let oracle = dynkin_oracle(&r.spec, &r.lattice, step).unwrap();
        let diff = oracle.value.max_abs_diff(&solved.solution);
        passed &= diff <= POINTWISE_TOL;
        details.push(format!("{name} {diff:.1e}"));
    }
    outcome(passed && !details.is_empty(), details.join(", "))
}

fn saddle_run(name: &str) -> SaddleReport {
    let config = registry::load(name).unwrap();
    let r = config.resolve().unwrap();
    let settings = config.game_settings(&r).unwrap();
    let mc = MCConfig {
        paths: 100_000,
        dt: 1e-3,
        horizon: 10.0,
        ..settings.mc
    };
    let solved = solve_vi(&r.spec, &r.lattice, &r.solve).unwrap();
    let alternatives = default_alternatives(&r.spec, &settings.x0);
    saddle_check(&r.spec, &solved.solution, &settings.x0, &alternatives, &mc, settings.contact_eps).unwrap()
}

fn criterion_7(runs: &[(&str, SaddleReport)]) -> Outcome {
    let details: Vec<String> = runs
        .iter()
        .map(|(name, rep)| {
            let c = &rep.value_check;
            format!(
                "{name}: |{:.5} - {:.5}| = {:.2e} <= {:.2e} (SE {:.1e}, exit {:.4})",
                rep.main.mean,
                rep.w_x0,
                c.difference.abs(),
                c.margin,
                rep.main.std_error,
                rep.main.exit_fraction
            )
        })
        .collect();
    outcome(
        runs.iter().all(|(_, rep)| rep.value_check.passed && rep.exit_fraction_ok),
        details.join("; "),
    )
}

fn criterion_8(runs: &[(&str, SaddleReport)]) -> Outcome {
    let mut passed = true;
    let mut details = Vec::new();
    for (name, rep) in runs {
        let alternatives = rep.tau_checks.len().min(rep.theta_checks.len());
        let failed: Vec<String> = rep
            .checks()
            .filter(|c| !c.passed)
            .map(|c| format!("{}:{}", c.kind, c.rule))
            .collect();
        let slack: Vec<String> = rep
            .immediate_checks
            .iter()
            .map(|c| format!("{} {:.4} vs {:.4}", c.kind, c.difference, c.expected.unwrap_or(f64::NAN)))
            .collect();
        passed &= alternatives >= 5 && failed.is_empty() && rep.immediate_strictly_slack() && rep.passed();
        details.push(format!(
            "{name}: {} alternatives per player, {} checks, failed [{}], immediate [{}]",
            alternatives,
            rep.checks().count(),
            failed.join(" "),
            slack.join(", ")
        ));
    }
    outcome(passed, details.join("; "))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut order_violations = 0;
    for _ in 0..10_000 {
        let spec = random_instance(&mut rng);
        let args = random_args(&mut rng, spec.dim);
        let plus = eval_h_plus(&spec, &args).unwrap().value;
        let minus = eval_h_minus(&spec, &args).unwrap().value;
        if !(plus >= minus) {
            order_violations += 1;
        }
    }

    let r = instance("matching-pennies");
    let gap = solve_both_signs(&r.spec, &r.lattice, &r.solve).unwrap().gap;
    let lam = r.spec.discount;
    let predicted = (0..r.lattice.len())
        .map(|i| {
            let x = &r.lattice.point(i)[..1];
            let args = HamiltonianArgs::new(x, &[0.0], ZERO_MATRIX).unwrap();
            let (lo, hi) = (r.spec.psi_lower(x), r.spec.psi_upper(x));
            let upper = (eval_h_plus(&r.spec, &args).unwrap().value / lam).clamp(lo, hi);
            let lower = (eval_h_minus(&r.spec, &args).unwrap().value / lam).clamp(lo, hi);
            (upper - lower).abs()
        })
        .fold(0.0, f64::max);
    let mismatch = (gap - predicted).abs();
    outcome(
        order_violations == 0 && predicted > 0.0 && mismatch <= 2.0 * r.solve.tolerance,
        format!(
            "H+ < H- on {order_violations} of 10000 instances; matching-pennies gap {gap:.10} vs predicted {predicted:.10} \
             (|diff| {mismatch:.1e} <= {:.1e})",
            2.0 * r.solve.tolerance
        ),
    )
}

/// `(file, sha256)` pairs listed in a manifest.
fn digests(dir: &Path) -> Vec<(String, String)> {
    let text = std::fs::read_to_string(dir.join("manifest.toml")).unwrap();
    let manifest: toml::Value = toml::from_str(&text).unwrap();
    manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["file"].as_str().unwrap().into(), e["sha256"].as_str().unwrap().into()))
        .collect()
}

fn criterion_10() -> Outcome {
    let commands: [&[&str]; 5] = [
        &["solve", "--instance", "smooth-2d-interior"],
        &[
            "verify-game",
            "--instance",
            "lower-contact-1d",
            "--paths",
            "3000",
            "--horizon",
            "3",
            "--seed",
            "7",
        ],
        &["convergence", "--instance", "upper-contact-1d", "--nodes", "101", "--levels", "2"],
        &["identities", "--trials", "2000", "--seed", "3"],
        &["export-grid", "--instance", "double-contact-1d"],
    ];
    let root = tempfile::tempdir().unwrap();
    let mut passed = true;
    let mut details = Vec::new();
    for (k, args) in commands.iter().enumerate() {
        let mut reference: Option<Vec<(String, String)>> = None;
        let mut same = true;
        for threads in ["1", "2", "8"] {
            let out = root.path().join(format!("{k}-{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_bilateral"))
                .args(*args)
                .args(["--threads", threads, "--out-dir"])
                .arg(&out)
                .output()
                .unwrap()
                .status;
            let d = digests(&out);
            same &= status.code().is_some_and(|c| c != 1);
            match &reference {
                None => reference = Some(d),
                Some(r) => same &= *r == d,
            }
        }
        let files = reference.map(|r| r.len()).unwrap_or(0);
        passed &= same && files > 0;
        details.push(format!("{} ({files} artifacts) {}", args[0], if same { "identical" } else { "DIFFER" }));
    }
    outcome(passed, details.join(", "))
}

fn report(index: usize, name: &str, start: Instant, o: &Outcome) -> bool {
    println!(
        "criterion {index:>2} [{}] {name}: {} ({:.1} s)",
        if o.passed { "PASS" } else { "FAIL" },
        o.detail,
        start.elapsed().as_secs_f64()
    );
    o.passed
}

fn main() {
    let mut all = true;
    let t = Instant::now();
    all &= report(1, "algebraic identities", t, &criterion_1());
    let t = Instant::now();
    all &= report(2, "degenerate closed form", t, &criterion_2());
    let t = Instant::now();
    let (sandwich, audit) = criterion_3_and_4();
    all &= report(3, "obstacle sandwich", t, &sandwich);
    all &= report(4, "VI audit", t, &audit);
    let t = Instant::now();
    all &= report(5, "convergence", t, &criterion_5());
    let t = Instant::now();
    all &= report(6, "oracle equivalence", t, &criterion_6());
    let t = Instant::now();
    let runs = [
        ("brownian-1d", saddle_run("brownian-1d")),
        ("lower-contact-1d", saddle_run("lower-contact-1d")),
    ];
    all &= report(7, "value verification", t, &criterion_7(&runs));
    all &= report(8, "saddle battery", t, &criterion_8(&runs));
    let t = Instant::now();
    all &= report(9, "Hamiltonian ordering and gap", t, &criterion_9());
    let t = Instant::now();
    all &= report(10, "determinism across thread counts", t, &criterion_10());
    if !all {
        std::process::exit(1);
    }
}

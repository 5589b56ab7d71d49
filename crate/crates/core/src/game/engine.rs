use rayon::prelude::*;

use super::rules::StoppingRule;
use super::sde::SdeModel;
use super::stats::mean_and_standard_error;
use super::{GameError, MCConfig, MAX_EXCLUDED_FRACTION};
use crate::grid::Lattice;
use crate::linalg::{to_vector, Vector};
use crate::problem::{BoxDomain, Cost, ProblemSpec, ScalarFamily};

/// Paths simulated per parallel work item; fixed so that the work split
/// does not depend on the thread count.
const PATH_CHUNK: usize = 256;

/// Discount, running reward and obstacles entering the payoff.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffData {
    pub discount: f64,
    cost: Cost,
    u1: Vec<f64>,
    u2: Vec<f64>,
    pub psi_upper: ScalarFamily,
    pub psi_lower: ScalarFamily,
}

impl PayoffData {
    /// Payoff data of an uncontrolled instance.
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self, GameError> {
        if !spec.is_uncontrolled() {
            return Err(GameError::Controlled);
        }
        Ok(PayoffData {
            discount: spec.discount,
            cost: spec.coefficients.running_cost.clone(),
            u1: spec.controls[0].points()[0].clone(),
            u2: spec.controls[1].points()[0].clone(),
            psi_upper: spec.obstacles.psi_upper.clone(),
            psi_lower: spec.obstacles.psi_lower.clone(),
        })
    }

    #[inline]
    pub fn running_reward(&self, x: &[f64]) -> f64 {
        self.cost.eval(x, &self.u1, &self.u2)
    }

    /// Bound on how much the payoff of any path can change by extending
    /// the horizon past `⌈T/dt⌉·dt`:
    /// `e^{−λT}(‖r‖·dt/(1 − e^{−λdt}) + max(‖ψ₁‖, ‖ψ₂‖))`, the first term
    /// being the left-endpoint tail sum. Sup-norms are taken over the
    /// lattice nodes.
    pub fn truncation_bound(&self, lattice: &Lattice, mc: &MCConfig) -> f64 {
        let dim = lattice.dim();
        let (mut r_sup, mut psi_sup) = (0.0f64, 0.0f64);
        for i in 0..lattice.len() {
            let x = lattice.point(i);
            r_sup = r_sup.max(self.running_reward(&x[..dim]).abs());
            psi_sup = psi_sup
                .max(self.psi_upper.value(&x[..dim]).abs())
                .max(self.psi_lower.value(&x[..dim]).abs());
        }
        self.tail_bound(r_sup, psi_sup, mc.dt, mc.effective_horizon())
    }

    /// The bound for given sup-norms, starting time `t` and step `dt`.
    pub fn tail_bound(&self, r_sup: f64, psi_sup: f64, dt: f64, t: f64) -> f64 {
        let lam = self.discount;
        (-lam * t).exp() * (r_sup * dt / (-(-lam * dt).exp_m1()) + psi_sup)
    }
}

/// A family of stopping rules and the `(θ, τ)` pairs to evaluate on the
/// same simulated paths.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleBattery {
    pub rules: Vec<StoppingRule>,
    /// `(index of θ, index of τ)` into `rules`.
    pub pairs: Vec<(usize, usize)>,
}

impl RuleBattery {
    pub fn single(theta: StoppingRule, tau: StoppingRule) -> Self {
        RuleBattery {
            rules: vec![theta, tau],
            pairs: vec![(0, 1)],
        }
    }
}

/// Outcome of one `(θ, τ)` pair on one path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairOutcome {
    pub payoff: f64,
    /// Step at which each rule fired, if it did before the simulation of
    /// the path ended; a rule may fire after the pair has stopped.
    pub theta: Option<u32>,
    pub tau: Option<u32>,
    /// The path left the box before the game stopped.
    pub exited: bool,
}

impl PairOutcome {
    /// Step at which the game stopped and the player who stopped it
    /// (`1` for θ, `2` for τ; ties go to player 2).
    pub fn stop(&self) -> Option<(u32, u8)> {
        match (self.theta, self.tau) {
            (t, Some(s)) if t.is_none_or(|t| s <= t) => Some((s, 2)),
            (Some(t), _) => Some((t, 1)),
            _ => None,
        }
    }
}

/// Per-pair outcomes of every non-aborted path, in path order.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchResult {
    pub config: MCConfig,
    /// `outcomes[pair][k]` for the `k`-th retained path.
    pub outcomes: Vec<Vec<PairOutcome>>,
    /// Original index of each retained path.
    pub path_index: Vec<u64>,
    pub excluded: usize,
}

/// Statistics of one Monte Carlo payoff estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Samples entering the mean (antithetic pairs count once).
    pub n_effective: usize,
    pub paths: usize,
    pub excluded: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Fractions of paths stopped by player 1 (θ) and by player 2 (τ).
    pub stop_fraction: [f64; 2],
    /// Mean stopping time over the paths each player stopped, `None` if
    /// the player never stopped.
    pub mean_stop_time: [Option<f64>; 2],
    /// Fraction of paths that left the box before the game stopped.
    pub exit_fraction: f64,
}

/// Simulated trajectories `X_0..X_N` for each path; aborted paths are cut
/// at their last finite state.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBatch {
    pub dim: usize,
    pub dt: f64,
    pub paths: Vec<Vec<Vector>>,
    /// Step at which each path produced a non-finite state.
    pub aborted: Vec<Option<usize>>,
}

#[inline]
fn noise_coordinates(path: u64, antithetic: bool) -> (u64, bool) {
    if antithetic {
        (path / 2, path % 2 == 1)
    } else {
        (path, false)
    }
}

#[inline]
fn is_finite(x: &Vector) -> bool {
    x.iter().all(|v| v.is_finite())
}

fn validated_start(model: &SdeModel, x0: &[f64]) -> Result<Vector, GameError> {
    if x0.len() != model.dim {
        return Err(GameError::InvalidConfig(format!(
            "x0 has {} components, the state has {}",
            x0.len(),
            model.dim
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(GameError::InvalidConfig("x0 must be finite".into()));
    }
    Ok(to_vector(x0))
}

/// Simulates and stores `N` full Euler–Maruyama trajectories.
pub fn simulate_paths(model: &SdeModel, x0: &[f64], mc: &MCConfig) -> Result<PathBatch, GameError> {
    mc.validate()?;
    let start = validated_start(model, x0)?;
    let steps = mc.steps();
    let sqrt_dt = mc.dt.sqrt();
    let runs: Vec<(Vec<Vector>, Option<usize>)> = (0..mc.paths)
        .into_par_iter()
        .with_min_len(PATH_CHUNK)
        .map(|p| {
            let p = p as u64;
            let (noise, flip) = noise_coordinates(p, mc.antithetic);
            let mut path = Vec::with_capacity(steps + 1);
            path.push(start);
            let mut x = start;
            for n in 0..steps {
                x = model.step(&x, mc.dt, sqrt_dt, mc.seed, noise, n as u32, flip);
                if !is_finite(&x) {
                    return (path, Some(n + 1));
                }
                path.push(x);
            }
            (path, None)
        })
        .collect();
    let (paths, aborted) = runs.into_iter().unzip();
    Ok(PathBatch {
        dim: model.dim,
        dt: mc.dt,
        paths,
        aborted,
    })
}

/// States `X_N` at the horizon, `None` for aborted paths. Uses no path
/// storage.
pub fn simulate_terminal(model: &SdeModel, x0: &[f64], mc: &MCConfig) -> Result<Vec<Option<Vector>>, GameError> {
    mc.validate()?;
    let start = validated_start(model, x0)?;
    let steps = mc.steps();
    let sqrt_dt = mc.dt.sqrt();
    Ok((0..mc.paths)
        .into_par_iter()
        .with_min_len(PATH_CHUNK)
        .map(|p| {
            let p = p as u64;
            let (noise, flip) = noise_coordinates(p, mc.antithetic);
            let mut x = start;
            for n in 0..steps {
                x = model.step(&x, mc.dt, sqrt_dt, mc.seed, noise, n as u32, flip);
                if !is_finite(&x) {
                    return None;
                }
            }
            Some(x)
        })
        .collect())
}

/// Evaluates the truncated payoff of a stored path `X_0..X_N`:
/// left-endpoint discounted reward up to `θ ∧ τ ∧ N`, plus the discounted
/// obstacle payment if the game stopped, `ψ₂` on ties.
pub fn payoff(
    path: &[Vector],
    dim: usize,
    theta: &StoppingRule,
    tau: &StoppingRule,
    data: &PayoffData,
    dt: f64,
) -> f64 {
    let steps = path.len().saturating_sub(1);
    let decay = (-data.discount * dt).exp();
    let mut mt = theta.monitor(dt);
    let mut ms = tau.monitor(dt);
    let mut integral = 0.0;
    let mut disc = 1.0;
    for (n, x) in path.iter().enumerate() {
        let xs = &x[..dim];
        let t_fired = mt.observe(n, xs);
        let s_fired = ms.observe(n, xs);
        if s_fired {
            return integral + disc * data.psi_lower.value(xs);
        }
        if t_fired {
            return integral + disc * data.psi_upper.value(xs);
        }
        if n == steps {
            break;
        }
        integral += disc * data.running_reward(xs) * dt;
        disc *= decay;
    }
    integral
}

/// What a rule saw when it fired.
#[derive(Clone, Copy, Debug)]
struct Firing {
    step: u32,
    integral: f64,
    disc: f64,
    psi_upper: f64,
    psi_lower: f64,
}

struct PathContext<'a> {
    model: &'a SdeModel,
    data: &'a PayoffData,
    battery: &'a RuleBattery,
    domain: &'a BoxDomain,
    mc: &'a MCConfig,
    start: Vector,
    /// Pairs in which each rule takes part.
    pairs_of: Vec<Vec<usize>>,
    steps: usize,
    sqrt_dt: f64,
    decay: f64,
}

impl PathContext<'_> {
    /// Simulates one path until every pair is resolved or the horizon is
    /// reached; `None` if the path aborted.
    fn run(&self, path: u64) -> Option<Vec<PairOutcome>> {
        let dim = self.model.dim;
        let dt = self.mc.dt;
        let (noise, flip) = noise_coordinates(path, self.mc.antithetic);
        let rules = &self.battery.rules;
        let mut monitors: Vec<_> = rules.iter().map(|r| r.monitor(dt)).collect();
        let mut fired: Vec<Option<Firing>> = vec![None; rules.len()];
        let mut resolved = vec![false; self.battery.pairs.len()];
        let mut unresolved = resolved.len();
        let mut first_exit: Option<u32> = None;
        let mut x = self.start;
        let mut integral = 0.0;
        let mut disc = 1.0;
        let mut n = 0usize;
        loop {
            let xs = &x[..dim];
            if first_exit.is_none() && !self.domain.contains(xs) {
                first_exit = Some(n as u32);
            }
            for (k, m) in monitors.iter_mut().enumerate() {
                if fired[k].is_none() && m.observe(n, xs) {
                    fired[k] = Some(Firing {
                        step: n as u32,
                        integral,
                        disc,
                        psi_upper: self.data.psi_upper.value(xs),
                        psi_lower: self.data.psi_lower.value(xs),
                    });
                    for &pair in &self.pairs_of[k] {
                        if !resolved[pair] {
                            resolved[pair] = true;
                            unresolved -= 1;
                        }
                    }
                }
            }
            if unresolved == 0 || n == self.steps {
                break;
            }
            integral += disc * self.data.running_reward(xs) * dt;
            disc *= self.decay;
            x = self.model.step(&x, dt, self.sqrt_dt, self.mc.seed, noise, n as u32, flip);
            if !is_finite(&x) {
                return None;
            }
            n += 1;
        }
        let end = n as u32;
        Some(
            self.battery
                .pairs
                .iter()
                .map(|&(t, s)| {
                    let (ft, fs) = (fired[t], fired[s]);
                    let (payoff, stop) = match (ft, fs) {
                        (_, Some(b)) if ft.is_none_or(|a| b.step <= a.step) => {
                            (b.integral + b.disc * b.psi_lower, b.step)
                        }
                        (Some(a), _) => (a.integral + a.disc * a.psi_upper, a.step),
                        _ => (integral, end),
                    };
                    let stopped = ft.is_some() || fs.is_some();
                    PairOutcome {
                        payoff,
                        theta: ft.map(|f| f.step),
                        tau: fs.map(|f| f.step),
                        exited: first_exit.is_some_and(|e| e < stop || (!stopped && e <= stop)),
                    }
                })
                .collect(),
        )
    }
}

/// Simulates `mc.paths` paths once and evaluates every pair of the battery
/// on them (common random numbers).
pub fn estimate_pairs(
    model: &SdeModel,
    x0: &[f64],
    battery: &RuleBattery,
    data: &PayoffData,
    domain: &BoxDomain,
    mc: &MCConfig,
) -> Result<BatchResult, GameError> {
    mc.validate()?;
    let start = validated_start(model, x0)?;
    if battery.pairs.is_empty() {
        return Err(GameError::InvalidConfig("the rule battery has no pairs".into()));
    }
    if let Some(&(t, s)) = battery
        .pairs
        .iter()
        .find(|&&(t, s)| t >= battery.rules.len() || s >= battery.rules.len())
    {
        return Err(GameError::InvalidConfig(format!("pair ({t}, {s}) names a missing rule")));
    }
    let ctx = PathContext {
        model,
        data,
        battery,
        domain,
        mc,
        start,
        pairs_of: (0..battery.rules.len())
            .map(|k| {
                (0..battery.pairs.len())
                    .filter(|&p| battery.pairs[p].0 == k || battery.pairs[p].1 == k)
                    .collect()
            })
            .collect(),
        steps: mc.steps(),
        sqrt_dt: mc.dt.sqrt(),
        decay: (-data.discount * mc.dt).exp(),
    };
    let runs: Vec<Option<Vec<PairOutcome>>> = (0..mc.paths)
        .into_par_iter()
        .with_min_len(PATH_CHUNK)
        .map(|p| ctx.run(p as u64))
        .collect();

    // antithetic partners are dropped together so that pairs stay intact
    let keep: Vec<bool> = if mc.antithetic {
        (0..runs.len())
            .map(|p| runs[p].is_some() && runs[p ^ 1].is_some())
            .collect()
    } else {
        runs.iter().map(Option::is_some).collect()
    };
    let excluded = runs.iter().filter(|r| r.is_none()).count();
    if excluded as f64 > MAX_EXCLUDED_FRACTION * mc.paths as f64 {
        return Err(GameError::ExcessiveExclusion {
            excluded,
            total: mc.paths,
        });
    }
    let mut outcomes = vec![Vec::with_capacity(mc.paths); battery.pairs.len()];
    let mut path_index = Vec::with_capacity(mc.paths);
    for (p, run) in runs.into_iter().enumerate() {
        if !keep[p] {
            continue;
        }
        path_index.push(p as u64);
        for (col, o) in outcomes.iter_mut().zip(run.expect("kept paths completed")) {
            col.push(o);
        }
    }
    Ok(BatchResult {
        config: mc.clone(),
        outcomes,
        path_index,
        excluded,
    })
}

impl BatchResult {
    fn samples(&self, values: impl Iterator<Item = f64>) -> Vec<f64> {
        let v: Vec<f64> = values.collect();
        if self.config.antithetic {
            v.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
        } else {
            v
        }
    }

    /// Estimate of `R(x₀, θ, τ)` for one pair.
    pub fn estimate(&self, pair: usize) -> MCEstimate {
        let col = &self.outcomes[pair];
        let samples = self.samples(col.iter().map(|o| o.payoff));
        let (mean, std_error) = mean_and_standard_error(&samples);
        let dt = self.config.dt;
        let mut counts = [0usize; 2];
        let mut times = [Vec::new(), Vec::new()];
        for o in col {
            if let Some((step, who)) = o.stop() {
                let k = usize::from(who - 1);
                counts[k] += 1;
                times[k].push(f64::from(step) * dt);
            }
        }
        let total = col.len().max(1) as f64;
        let mean_time = |k: usize| {
            if times[k].is_empty() {
                None
            } else {
                Some(mean_and_standard_error(&times[k]).0)
            }
        };
        MCEstimate {
            mean,
            std_error,
            n_effective: samples.len(),
            paths: self.config.paths,
            excluded: self.excluded,
            dt,
            horizon: self.config.horizon,
            seed: self.config.seed,
            stop_fraction: [counts[0] as f64 / total, counts[1] as f64 / total],
            mean_stop_time: [mean_time(0), mean_time(1)],
            exit_fraction: col.iter().filter(|o| o.exited).count() as f64 / total,
        }
    }

    /// Mean and standard error of `R(pair) − R(base)` path by path.
    pub fn difference(&self, pair: usize, base: usize) -> (f64, f64) {
        let samples = self.samples(
            self.outcomes[pair]
                .iter()
                .zip(&self.outcomes[base])
                .map(|(a, b)| a.payoff - b.payoff),
        );
        mean_and_standard_error(&samples)
    }
}

/// Monte Carlo estimate of `R(x₀, θ, τ)`.
pub fn estimate_value(
    model: &SdeModel,
    x0: &[f64],
    theta: &StoppingRule,
    tau: &StoppingRule,
    data: &PayoffData,
    domain: &BoxDomain,
    mc: &MCConfig,
) -> Result<MCEstimate, GameError> {
    let battery = RuleBattery::single(theta.clone(), tau.clone());
    Ok(estimate_pairs(model, x0, &battery, data, domain, mc)?.estimate(0))
}

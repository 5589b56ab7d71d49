//! Instance configuration files.
//!
//! One TOML file describes one instance: the box and grid, either a
//! manufactured profile or explicit coefficient families, the control sets,
//! the boundary treatment, and solver and game settings. Unknown keys are
//! rejected and every semantic error names the offending key.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{game_contact_eps, MCConfig};
use crate::grid::{GridError, Lattice};
use crate::hamiltonian::Sign;
use crate::linalg::{Matrix, Vector, MAX_DIM, ZERO_MATRIX, ZERO_VECTOR};
use crate::problem::{
    BoundEstimates, BoundaryCondition, BoxDomain, CoefficientField, ControlSet, Cost, Diffusion, DiffusionFamily,
    Drift, DriftFamily, ObstaclePair, ProblemError, ProblemSpec, ScalarFamily,
};
use crate::solver::{manufactured_spec, ProfileId, SolveOptions, SolverError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("unknown registry instance `{0}`")]
    UnknownInstance(String),
    #[error("`{key}`: {source}")]
    Problem { key: String, source: ProblemError },
    #[error("`{key}`: {source}")]
    Grid { key: String, source: GridError },
    #[error("`{key}`: {source}")]
    Solver { key: String, source: SolverError },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

/// A scalar field of the state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarConfig {
    Constant {
        value: f64,
    },
    Affine {
        offset: f64,
        slope: Vec<f64>,
    },
    Trig {
        offset: f64,
        amplitude: f64,
        frequency: Vec<f64>,
        phase: f64,
    },
    ClampedLinear {
        offset: f64,
        slope: Vec<f64>,
        min: f64,
        max: f64,
    },
    Quadratic {
        offset: f64,
        coefficient: Vec<f64>,
        center: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftBaseConfig {
    Zero,
    Constant { value: Vec<f64> },
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub base: DriftBaseConfig,
    /// Rows per state axis, columns per control component.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gain1: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gain2: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiffusionBaseConfig {
    Zero,
    Constant {
        matrix: Vec<Vec<f64>>,
    },
    Diagonal {
        diagonal: Vec<f64>,
    },
    Quadratic {
        matrix: Vec<Vec<f64>>,
        center: Vec<f64>,
        floor: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    pub base: DiffusionBaseConfig,
    /// `(s₀, s₁, s₂)` of the factor `s₀ + s₁|u₁|² + s₂|u₂|²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_scale: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub base: ScalarConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub linear1: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub linear2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bilinear: Vec<Vec<f64>>,
}

/// Explicit coefficients and obstacles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub drift: DriftConfig,
    pub diffusion: DiffusionConfig,
    pub running_cost: CostConfig,
    pub psi_upper: ScalarConfig,
    pub psi_lower: ScalarConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlsConfig {
    /// Control points of the minimizer; a single empty point by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player1: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player2: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryConfig {
    /// Boundary nodes keep only the running cost and the obstacles.
    Frozen,
    Dirichlet { data: ScalarConfig },
    OneSided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nodes: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    /// `plus` (inf-sup) or `minus` (sup-inf).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact_eps: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antithetic: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact_eps: Option<f64>,
    /// `default` (the full battery) or `never`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternatives: Option<String>,
}

/// A complete instance description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Required unless `profile` is set (profiles fix `λ = 1`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discount: Option<f64>,
    pub domain: DomainConfig,
    pub grid: GridConfig,
    /// Manufactured-solution profile; excludes `model`, `controls` and
    /// `boundary`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<ControlsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub game: GameConfig,
}

/// Game settings with defaults applied.
#[derive(Clone, Debug, PartialEq)]
pub struct GameSettings {
    pub x0: Vec<f64>,
    pub mc: MCConfig,
    pub contact_eps: f64,
    /// Use the full default battery of alternatives rather than `never`
    /// only.
    pub full_battery: bool,
}

/// Everything needed to run an instance.
#[derive(Clone, Debug)]
pub struct ResolvedInstance {
    pub name: String,
    pub spec: ProblemSpec,
    pub lattice: Lattice,
    pub profile: Option<ProfileId>,
    pub solve: SolveOptions,
}

fn vector(key: &str, values: &[f64], dim: usize) -> Result<Vector, ConfigError> {
    if values.len() != dim {
        return Err(invalid(key, format!("expected {dim} components, found {}", values.len())));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(invalid(key, format!("non-finite component {v}")));
    }
    let mut out = ZERO_VECTOR;
    out[..dim].copy_from_slice(values);
    Ok(out)
}

fn matrix(key: &str, rows: &[Vec<f64>], dim: usize) -> Result<Matrix, ConfigError> {
    if rows.len() != dim {
        return Err(invalid(key, format!("expected {dim} rows, found {}", rows.len())));
    }
    let mut out = ZERO_MATRIX;
    for (i, row) in rows.iter().enumerate() {
        out[i] = vector(&format!("{key}[{i}]"), row, dim)?;
    }
    Ok(out)
}

fn finite(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be finite, got {v}")))
    }
}

impl ScalarConfig {
    pub fn build(&self, key: &str, dim: usize) -> Result<ScalarFamily, ConfigError> {
        Ok(match self {
            ScalarConfig::Constant { value } => ScalarFamily::Constant {
                value: finite(&format!("{key}.value"), *value)?,
            },
            ScalarConfig::Affine { offset, slope } => ScalarFamily::Affine {
                offset: finite(&format!("{key}.offset"), *offset)?,
                slope: vector(&format!("{key}.slope"), slope, dim)?,
            },
            ScalarConfig::Trig {
                offset,
                amplitude,
                frequency,
                phase,
            } => ScalarFamily::Trig {
                offset: finite(&format!("{key}.offset"), *offset)?,
                amplitude: finite(&format!("{key}.amplitude"), *amplitude)?,
                frequency: vector(&format!("{key}.frequency"), frequency, dim)?,
                phase: finite(&format!("{key}.phase"), *phase)?,
            },
            ScalarConfig::ClampedLinear {
                offset,
                slope,
                min,
                max,
            } => {
                if !(min <= max) {
                    return Err(invalid(&format!("{key}.min"), format!("min {min} exceeds max {max}")));
                }
                ScalarFamily::ClampedLinear {
                    offset: finite(&format!("{key}.offset"), *offset)?,
                    slope: vector(&format!("{key}.slope"), slope, dim)?,
                    min: *min,
                    max: *max,
                }
            }
            ScalarConfig::Quadratic {
                offset,
                coefficient,
                center,
            } => ScalarFamily::Quadratic {
                offset: finite(&format!("{key}.offset"), *offset)?,
                coefficient: vector(&format!("{key}.coefficient"), coefficient, dim)?,
                center: vector(&format!("{key}.center"), center, dim)?,
            },
        })
    }
}

fn gains(key: &str, rows: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
    if !rows.is_empty() && rows.len() != dim {
        return Err(invalid(key, format!("expected {dim} rows, found {}", rows.len())));
    }
    Ok(rows.to_vec())
}

impl ModelConfig {
    fn build(&self, dim: usize) -> Result<(CoefficientField, ObstaclePair), ConfigError> {
        let drift = Drift {
            base: match &self.drift.base {
                DriftBaseConfig::Zero => DriftFamily::Zero,
                DriftBaseConfig::Constant { value } => DriftFamily::Constant(vector("model.drift.base.value", value, dim)?),
                DriftBaseConfig::Affine { matrix: m, offset } => DriftFamily::Affine {
                    matrix: matrix("model.drift.base.matrix", m, dim)?,
                    offset: vector("model.drift.base.offset", offset, dim)?,
                },
            },
            gain1: gains("model.drift.gain1", &self.drift.gain1, dim)?,
            gain2: gains("model.drift.gain2", &self.drift.gain2, dim)?,
        };
        let control_scale = self.diffusion.control_scale.unwrap_or([1.0, 0.0, 0.0]);
        if control_scale.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(invalid(
                "model.diffusion.control_scale",
                "entries must be finite and non-negative",
            ));
        }
        let diffusion = Diffusion {
            base: match &self.diffusion.base {
                DiffusionBaseConfig::Zero => DiffusionFamily::Zero,
                DiffusionBaseConfig::Constant { matrix: m } => {
                    DiffusionFamily::Constant(matrix("model.diffusion.base.matrix", m, dim)?)
                }
                DiffusionBaseConfig::Diagonal { diagonal } => {
                    DiffusionFamily::Diagonal(vector("model.diffusion.base.diagonal", diagonal, dim)?)
                }
                DiffusionBaseConfig::Quadratic {
                    matrix: m,
                    center,
                    floor,
                } => DiffusionFamily::Quadratic {
                    matrix: matrix("model.diffusion.base.matrix", m, dim)?,
                    center: vector("model.diffusion.base.center", center, dim)?,
                    floor: finite("model.diffusion.base.floor", *floor)?,
                },
            },
            control_scale,
        };
        let running_cost = Cost {
            base: self.running_cost.base.build("model.running_cost.base", dim)?,
            linear1: self.running_cost.linear1.clone(),
            linear2: self.running_cost.linear2.clone(),
            bilinear: self.running_cost.bilinear.clone(),
        };
        let coefficients = CoefficientField {
            drift,
            diffusion,
            running_cost,
            bounds: BoundEstimates::default(),
        };
        let obstacles = ObstaclePair {
            psi_upper: self.psi_upper.build("model.psi_upper", dim)?,
            psi_lower: self.psi_lower.build("model.psi_lower", dim)?,
        };
        Ok((coefficients, obstacles))
    }
}

fn control_set(key: &str, points: &Option<Vec<Vec<f64>>>) -> Result<ControlSet, ConfigError> {
    match points {
        None => Ok(ControlSet::singleton()),
        Some(p) => ControlSet::new(p.clone()).map_err(|source| ConfigError::Problem {
            key: key.to_string(),
            source,
        }),
    }
}

impl InstanceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configurations serialize")
    }

    pub fn dim(&self) -> usize {
        self.domain.lower.len()
    }

    /// Builds the instance, lattice and solver options.
    pub fn resolve(&self) -> Result<ResolvedInstance, ConfigError> {
        let dim = self.dim();
        if dim == 0 || dim > MAX_DIM {
            return Err(invalid("domain.lower", format!("dimension must be 1 or 2, got {dim}")));
        }
        let domain = BoxDomain::new(&self.domain.lower, &self.domain.upper).map_err(|source| ConfigError::Problem {
            key: "domain".into(),
            source,
        })?;
        if self.grid.nodes.len() != dim {
            return Err(invalid(
                "grid.nodes",
                format!("expected {dim} entries, found {}", self.grid.nodes.len()),
            ));
        }
        let lattice = Lattice::new(&domain, &self.grid.nodes).map_err(|source| ConfigError::Grid {
            key: "grid.nodes".into(),
            source,
        })?;

        let (spec, profile) = match (&self.profile, &self.model) {
            (Some(name), None) => {
                for (present, key) in [
                    (self.controls.is_some(), "controls"),
                    (self.boundary.is_some(), "boundary"),
                    (self.discount.is_some(), "discount"),
                ] {
                    if present {
                        return Err(invalid(key, "profiles fix this table; remove it"));
                    }
                }
                let id: ProfileId = name.parse().map_err(|source| ConfigError::Solver {
                    key: "profile".into(),
                    source,
                })?;
                let spec = manufactured_spec(id, &domain).map_err(|source| ConfigError::Solver {
                    key: "profile".into(),
                    source,
                })?;
                (spec, Some(id))
            }
            (None, Some(model)) => {
                let discount = self.discount.ok_or_else(|| invalid("discount", "missing"))?;
                let (coefficients, obstacles) = model.build(dim)?;
                let controls = self.controls.clone().unwrap_or_default();
                let sets = [
                    control_set("controls.player1", &controls.player1)?,
                    control_set("controls.player2", &controls.player2)?,
                ];
                let boundary = match &self.boundary {
                    None | Some(BoundaryConfig::Frozen) => BoundaryCondition::Dirichlet(None),
                    Some(BoundaryConfig::Dirichlet { data }) => {
                        BoundaryCondition::Dirichlet(Some(data.build("boundary.data", dim)?))
                    }
                    Some(BoundaryConfig::OneSided) => BoundaryCondition::OneSided,
                };
                let spec = ProblemSpec::new(coefficients, obstacles, sets, discount, domain, boundary).map_err(
                    |source| ConfigError::Problem {
                        key: "discount".into(),
                        source,
                    },
                )?;
                (spec, None)
            }
            (Some(_), Some(_)) => return Err(invalid("profile", "give either `profile` or `model`, not both")),
            (None, None) => return Err(invalid("model", "missing (or give a `profile`)")),
        };

        let defaults = SolveOptions::default();
        let sign = match self.solver.sign.as_deref() {
            None => defaults.sign,
            Some(s) => s.parse::<Sign>().map_err(|_| invalid("solver.sign", format!("expected plus or minus, got {s}")))?,
        };
        let solve = SolveOptions {
            tolerance: self.solver.tolerance.unwrap_or(defaults.tolerance),
            max_iterations: self.solver.max_iterations.unwrap_or(defaults.max_iterations),
            sign,
            relaxation: self.solver.relaxation.unwrap_or(defaults.relaxation),
            contact_eps: self.solver.contact_eps,
            update: defaults.update,
        };
        if !(solve.tolerance > 0.0) {
            return Err(invalid("solver.tolerance", "must be positive"));
        }
        if !(solve.relaxation > 0.0 && solve.relaxation <= 1.0) {
            return Err(invalid("solver.relaxation", "must lie in (0, 1]"));
        }
        if solve.max_iterations < 1 {
            return Err(invalid("solver.max_iterations", "must be at least 1"));
        }
        Ok(ResolvedInstance {
            name: self.name.clone(),
            spec,
            lattice,
            profile,
            solve,
        })
    }

    /// Game settings, defaulting `x0` to the box centre.
    pub fn game_settings(&self, resolved: &ResolvedInstance) -> Result<GameSettings, ConfigError> {
        let dim = self.dim();
        let defaults = MCConfig::default();
        let x0 = match &self.game.x0 {
            Some(x) => vector("game.x0", x, dim)?[..dim].to_vec(),
            None => (0..dim)
                .map(|k| 0.5 * (self.domain.lower[k] + self.domain.upper[k]))
                .collect(),
        };
        if !resolved.lattice.contains(&x0) {
            return Err(invalid("game.x0", format!("{x0:?} lies outside the box")));
        }
        let mc = MCConfig {
            paths: self.game.paths.unwrap_or(defaults.paths),
            dt: self.game.dt.unwrap_or(defaults.dt),
            horizon: self.game.horizon.unwrap_or(defaults.horizon),
            seed: self.game.seed.unwrap_or(defaults.seed),
            antithetic: self.game.antithetic.unwrap_or(defaults.antithetic),
        };
        mc.validate().map_err(|e| invalid("game", e.to_string()))?;
        let contact_eps = match self.game.contact_eps {
            Some(eps) if eps >= 0.0 => eps,
            Some(eps) => return Err(invalid("game.contact_eps", format!("must be non-negative, got {eps}"))),
            None => game_contact_eps(resolved.lattice.max_spacing(), resolved.solve.tolerance),
        };
        let full_battery = match self.game.alternatives.as_deref() {
            None | Some("default") => true,
            Some("never") => false,
            Some(other) => {
                return Err(invalid(
                    "game.alternatives",
                    format!("expected `default` or `never`, got `{other}`"),
                ))
            }
        };
        Ok(GameSettings {
            x0,
            mc,
            contact_eps,
            full_battery,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"
discount = 1.0

[domain]
lower = [-1.0]
upper = [1.0]

[grid]
nodes = [11]

[model.drift.base]
kind = "zero"

[model.diffusion.base]
kind = "constant"
matrix = [[0.5]]

[model.running_cost.base]
kind = "constant"
value = 0.3

[model.psi_upper]
kind = "constant"
value = 1.0

[model.psi_lower]
kind = "affine"
offset = -1.0
slope = [0.1]
"#;

    #[test]
    fn minimal_config_resolves() {
        let cfg = InstanceConfig::from_toml(MINIMAL).unwrap();
        let inst = cfg.resolve().unwrap();
        assert_eq!(inst.spec.dim, 1);
        assert_eq!(inst.lattice.len(), 11);
        assert_eq!(inst.spec.boundary, BoundaryCondition::Dirichlet(None));
        assert!(inst.spec.is_uncontrolled());
        let game = cfg.game_settings(&inst).unwrap();
        assert_eq!(game.x0, vec![0.0]);
        assert_eq!(game.mc, MCConfig::default());
        assert_eq!(game.contact_eps, (10.0f64 * 0.2 * 0.2).max(1e-7));
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = InstanceConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(InstanceConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = MINIMAL.replace("nodes = [11]", "nodes = [11]\nspacing = 0.1");
        let err = InstanceConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("spacing"), "{err}");
        let text = MINIMAL.replace("value = 0.3", "value = 0.3\nvalu = 1");
        let err = InstanceConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("valu"), "{err}");
    }

    #[test]
    fn semantic_errors_name_the_key() {
        let cases = [
            (MINIMAL.replace("nodes = [11]", "nodes = [11, 3]"), "grid.nodes"),
            (MINIMAL.replace("slope = [0.1]", "slope = [0.1, 0.2]"), "model.psi_lower.slope"),
            (MINIMAL.replace("discount = 1.0", "discount = -1.0"), "discount"),
            (MINIMAL.replace("nodes = [11]", "nodes = [2]"), "grid.nodes"),
            (MINIMAL.replace("matrix = [[0.5]]", "matrix = [[0.5, 1.0]]"), "model.diffusion.base.matrix[0]"),
            (format!("{MINIMAL}\n[solver]\ntolerance = 0.0\n"), "solver.tolerance"),
            (format!("{MINIMAL}\n[solver]\nsign = \"up\"\n"), "solver.sign"),
            (MINIMAL.replace("discount = 1.0", "profile = \"smooth-1d-interior\""), "profile"),
        ];
        for (text, key) in cases {
            let cfg = InstanceConfig::from_toml(&text).unwrap();
            let err = cfg.resolve().unwrap_err().to_string();
            assert!(err.contains(&format!("`{key}`")), "{key}: {err}");
        }
        let cfg = InstanceConfig::from_toml(&format!("{MINIMAL}\n[game]\nx0 = [4.0]\n")).unwrap();
        let inst = cfg.resolve().unwrap();
        assert!(cfg.game_settings(&inst).unwrap_err().to_string().contains("`game.x0`"));
    }

    #[test]
    fn profiles_exclude_explicit_tables() {
        let text = r#"
name = "p"
profile = "smooth-1d-interior"
[domain]
lower = [-1.0]
upper = [1.0]
[grid]
nodes = [21]
[boundary]
kind = "frozen"
"#;
        let err = InstanceConfig::from_toml(text).unwrap().resolve().unwrap_err().to_string();
        assert!(err.contains("`boundary`"), "{err}");
        let ok = text.replace("[boundary]\nkind = \"frozen\"\n", "");
        let inst = InstanceConfig::from_toml(&ok).unwrap().resolve().unwrap();
        assert_eq!(inst.profile, Some(ProfileId::Smooth1dInterior));
    }
}

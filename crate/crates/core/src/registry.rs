//! Built-in instances.
//!
//! The configuration files under `instances/` are compiled into the binary
//! so that every command can run them by name.

use crate::config::{ConfigError, InstanceConfig};

const INSTANCES: [(&str, &str); 13] = [
    ("degenerate-1d", include_str!("../instances/degenerate-1d.toml")),
    ("degenerate-2d", include_str!("../instances/degenerate-2d.toml")),
    ("brownian-1d", include_str!("../instances/brownian-1d.toml")),
    ("coincident-obstacles-1d", include_str!("../instances/coincident-obstacles-1d.toml")),
    ("smooth-1d-interior", include_str!("../instances/smooth-1d-interior.toml")),
    ("lower-contact-1d", include_str!("../instances/lower-contact-1d.toml")),
    ("upper-contact-1d", include_str!("../instances/upper-contact-1d.toml")),
    ("double-contact-1d", include_str!("../instances/double-contact-1d.toml")),
    ("smooth-2d-interior", include_str!("../instances/smooth-2d-interior.toml")),
    ("quadratic-diffusion-1d", include_str!("../instances/quadratic-diffusion-1d.toml")),
    ("matching-pennies", include_str!("../instances/matching-pennies.toml")),
    ("controlled-1d", include_str!("../instances/controlled-1d.toml")),
    ("controlled-2d", include_str!("../instances/controlled-2d.toml")),
];

/// Names of the built-in instances, in registry order.
pub fn names() -> impl Iterator<Item = &'static str> {
    INSTANCES.iter().map(|(name, _)| *name)
}

/// Configuration text of a built-in instance.
pub fn source(name: &str) -> Option<&'static str> {
    INSTANCES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn load(name: &str) -> Result<InstanceConfig, ConfigError> {
    let text = source(name).ok_or_else(|| ConfigError::UnknownInstance(name.to_string()))?;
    InstanceConfig::from_toml(text)
}

/// Every built-in instance.
pub fn all() -> Vec<InstanceConfig> {
    names().map(|n| load(n).expect("built-in instances parse")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_instance_resolves_under_its_own_name() {
        for name in names() {
            let cfg = load(name).unwrap();
            assert_eq!(cfg.name, name);
            let inst = cfg.resolve().unwrap_or_else(|e| panic!("{name}: {e}"));
            if inst.spec.is_uncontrolled() {
                cfg.game_settings(&inst).unwrap();
            }
        }
        assert!(matches!(load("nope"), Err(ConfigError::UnknownInstance(_))));
    }
}

//! Scenario files: TOML with every field optional, plus `key=value`
//! overrides addressed by dotted path.

use std::path::Path;

use dasim_core::scenario::ScenarioConfig;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
    #[error("override path `{0}` runs through a non-table value")]
    OverridePath(String),
    #[error(transparent)]
    Invalid(#[from] dasim_core::Error),
}

/// Reads, overrides and validates a scenario file.
pub fn load_scenario(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_scenario(&text, overrides)
}

/// Parses scenario text; missing fields take the default preset.
pub fn parse_scenario(text: &str, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: ScenarioConfig = table.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Sets one dotted key. The value is read as a TOML literal when it parses
/// as one and as a bare string otherwise.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::Override(spec.into()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::Override(spec.into()));
    }
    let value = parse_value(raw.trim());
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().unwrap();
    let mut at = table;
    for p in parts {
        let entry = at.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        at = entry.as_table_mut().ok_or_else(|| ConfigError::OverridePath(key.into()))?;
    }
    at.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// The default preset as TOML.
pub fn default_scenario_toml() -> String {
    toml::to_string_pretty(&ScenarioConfig::default()).expect("default preset serialises")
}

/// SHA-256 of the canonical JSON form of a configuration, hex encoded.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serialises");
    format!("{:x}", Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(parse_scenario("", &[]).unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn seed_only_keeps_preset() {
        let cfg = parse_scenario("rng_seed = 7", &[]).unwrap();
        assert_eq!(cfg.rng_seed, 7);
        assert_eq!(cfg.num_users, 16);
        assert_eq!(cfg.arrival_rate, 6.0);
        assert_eq!(cfg.edge.capacity, 10e9);
    }

    #[test]
    fn speed_bound_is_enforced() {
        match parse_scenario("[users]\nspeed = 50.0\n", &[]) {
            Err(ConfigError::Invalid(dasim_core::Error::Validation { field, .. })) => assert_eq!(field, "users.speed"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_is_parse_error() {
        assert!(matches!(parse_scenario("num_users = [", &[]), Err(ConfigError::Parse(_))));
        assert!(matches!(parse_scenario("num_users = \"many\"", &[]), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn overrides() {
        let cfg = parse_scenario(
            "",
            &["num_users=20".into(), "slicing.price=0.1".into(), "orchestration.policy_sharing=per-group".into()],
        )
        .unwrap();
        assert_eq!(cfg.num_users, 20);
        assert_eq!(cfg.slicing.price, 0.1);
        assert_eq!(cfg.orchestration.policy_sharing, dasim_core::scenario::GroupPolicySharing::PerGroup);
        assert!(matches!(parse_scenario("", &["nokey".into()]), Err(ConfigError::Override(_))));
        assert!(matches!(parse_scenario("num_users = 16", &["num_users.x=1".into()]), Err(ConfigError::OverridePath(_))));
    }

    #[test]
    fn default_round_trips() {
        let text = default_scenario_toml();
        assert_eq!(parse_scenario(&text, &[]).unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ScenarioConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.num_users = 18;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}

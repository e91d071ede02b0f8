//! TOML run configuration with `--set key.path=value` overrides.

use std::path::{Path, PathBuf};

use relsynth::experiment::RunConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("override '{0}' is not of the form key.path=value")]
    BadOverride(String),
    #[error("override '{key}': '{segment}' is already a value, not a section")]
    NotASection { key: String, segment: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("config key '{0}' looks like a credential; set the environment variable named by pipeline.backend.credential_env instead")]
    Credential(String),
}

/// Parses an override value as a TOML literal, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if key.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::BadOverride(spec.to_string()));
    }
    let (last, sections) = parts.split_last().expect("non-empty");
    let mut cur = table;
    for seg in sections {
        let entry = cur
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => {
                return Err(ConfigError::NotASection {
                    key: key.to_string(),
                    segment: seg.to_string(),
                })
            }
        };
    }
    cur.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

fn looks_like_secret(key: &str) -> bool {
    let leaf = key.rsplit('.').next().unwrap_or(key).to_ascii_lowercase();
    ["api_key", "apikey", "key", "token", "secret", "password", "credential"].contains(&leaf.as_str())
}

fn find_secret(table: &toml::Table, prefix: &str) -> Option<String> {
    table.iter().find_map(|(k, v)| {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => find_secret(t, &path),
            _ if looks_like_secret(k) => Some(path),
            _ => None,
        }
    })
}

pub fn from_table(table: toml::Table, origin: &str) -> Result<RunConfig, ConfigError> {
    // Tagged sections are buffered by serde and never reach the ignored-key
    // callback, so secrets are also looked for directly.
    if let Some(key) = find_secret(&table, "") {
        return Err(ConfigError::Credential(key));
    }
    let mut ignored = Vec::new();
    let cfg: RunConfig = serde_ignored::deserialize(toml::Value::Table(table), |path| ignored.push(path.to_string()))
        .map_err(|e: toml::de::Error| ConfigError::Parse {
            origin: origin.to_string(),
            message: e.to_string().trim().to_string(),
        })?;
    if let Some(key) = ignored.into_iter().next() {
        return Err(if looks_like_secret(&key) {
            ConfigError::Credential(key)
        } else {
            ConfigError::UnknownKey(key)
        });
    }
    Ok(cfg)
}

/// Reads `path` (if any), applies overrides in order and deserializes.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let (mut table, origin) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                path: p.to_path_buf(),
                source,
            })?;
            let table = text.parse::<toml::Table>().map_err(|e| ConfigError::Parse {
                origin: p.display().to_string(),
                message: e.to_string().trim().to_string(),
            })?;
            (table, p.display().to_string())
        }
        None => (toml::Table::new(), "defaults".to_string()),
    };
    for spec in overrides {
        apply_override(&mut table, spec)?;
    }
    from_table(table, &origin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_nest_and_type() {
        let cfg = load(
            None,
            &[
                "data.benchmark=real_estate".into(),
                "pipeline.n_target=40".into(),
                "pipeline.thresholds.mean=0.2".into(),
                "eval.kinds=[\"knn\"]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.data.benchmark.as_deref(), Some("real_estate"));
        assert_eq!(cfg.pipeline.n_target, 40);
        assert_eq!(cfg.eval.kinds.len(), 1);
    }

    #[test]
    fn unknown_and_secret_keys_rejected() {
        assert!(matches!(
            load(None, &["pipeline.n_targets=4".into()]),
            Err(ConfigError::UnknownKey(k)) if k == "pipeline.n_targets"
        ));
        assert!(matches!(
            load(None, &["pipeline.api_key=abc".into()]),
            Err(ConfigError::Credential(_))
        ));
        assert!(matches!(
            load(None, &["pipeline.backend.kind=http".into(), "pipeline.backend.api_key=abc".into()]),
            Err(ConfigError::Credential(k)) if k == "pipeline.backend.api_key"
        ));
        assert!(matches!(load(None, &["nonsense".into()]), Err(ConfigError::BadOverride(_))));
    }

    #[test]
    fn type_errors_name_the_key() {
        let err = load(None, &["pipeline.batch_size=\"many\"".into()]).unwrap_err();
        assert!(err.to_string().contains("batch_size"), "{err}");
    }
}

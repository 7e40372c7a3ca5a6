use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use signbank::corpus::{file_sha256, Direction, LanguageTable};
use signbank::llm::StrategyLevel;

/// Invalid flags, config files or missing inputs. Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub input: Vec<PathBuf>,
    pub gold: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub verses: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub test_ids: Option<PathBuf>,
    pub languages: Option<PathBuf>,
    pub rejects: Option<PathBuf>,
    pub rules_log: Option<PathBuf>,
    pub failures: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    /// `http` or `identity`.
    pub backend: String,
    pub model: String,
    pub api_base: String,
    pub temperature: f64,
    pub max_in_flight: usize,
    pub retries: u32,
    pub backoff_ms: u64,
    pub min_interval_ms: u64,
    pub timeout_s: u64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            backend: "http".into(),
            model: "gpt-3.5-turbo-0613".into(),
            api_base: "https://api.openai.com/v1".into(),
            temperature: 0.0,
            max_in_flight: 4,
            retries: 2,
            backoff_ms: 500,
            min_interval_ms: 0,
            timeout_s: 120,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub model: ModelSettings,
    pub strategy: String,
    pub dev_size: usize,
    pub direction: String,
    pub strict_fsw: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            model: ModelSettings::default(),
            strategy: "e4".into(),
            dev_size: 3000,
            direction: Direction::SignedToSpoken.to_string(),
            strict_fsw: false,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| config_error(format!("config {}: {e}", path.display())))
    }

    pub fn strategy(&self) -> anyhow::Result<StrategyLevel> {
        self.strategy.parse().map_err(config_error)
    }

    pub fn direction(&self) -> anyhow::Result<Direction> {
        self.direction.parse().map_err(config_error)
    }

    pub fn languages(&self) -> anyhow::Result<LanguageTable> {
        match &self.paths.languages {
            None => Ok(LanguageTable::default()),
            Some(p) => {
                let text = read_config_file(p)?;
                LanguageTable::parse(&text).map_err(|e| config_error(format!("{}: {e}", p.display())))
            }
        }
    }

    /// Checks settings and that every input path exists, before any work.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.strategy()?;
        self.direction()?;
        if !["http", "identity"].contains(&self.model.backend.as_str()) {
            return Err(config_error(format!(
                "unknown backend {:?} (expected http or identity)",
                self.model.backend
            )));
        }
        if self.model.max_in_flight == 0 {
            return Err(config_error("max-in-flight must be at least 1"));
        }
        let p = &self.paths;
        let inputs = p
            .input
            .iter()
            .chain([&p.gold, &p.rules, &p.verses, &p.test_ids, &p.languages].into_iter().flatten());
        for path in inputs {
            if path.as_os_str() != "-" && !path.is_file() {
                return Err(config_error(format!("input file {} does not exist", path.display())));
            }
        }
        Ok(())
    }

    /// Hash of everything that changes outputs: settings, rule file and
    /// language table. Paths are excluded so moved files hash the same.
    pub fn fingerprint(&self) -> anyhow::Result<String> {
        let settings = serde_json::json!({
            "model": self.model.model,
            "backend": self.model.backend,
            "temperature": self.model.temperature,
            "strategy": self.strategy()?.to_string(),
            "dev_size": self.dev_size,
            "direction": self.direction()?.to_string(),
            "strict_fsw": self.strict_fsw,
        });
        let rules = match &self.paths.rules {
            Some(p) => read_config_file(p)?,
            None => "builtin".into(),
        };
        let mut material = settings.to_string();
        material.push('\n');
        material.push_str(&rules);
        material.push('\n');
        material.push_str(&self.languages()?.canonical());
        Ok(file_sha256(material.as_bytes())[..16].to_string())
    }
}

pub fn read_config_file(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.strategy().unwrap(), StrategyLevel::E4);
    }

    #[test]
    fn fingerprint_ignores_paths() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.paths.out = Some("elsewhere".into());
        assert_eq!(a.fingerprint().unwrap(), b.fingerprint().unwrap());
        b.dev_size = 10;
        assert_ne!(a.fingerprint().unwrap(), b.fingerprint().unwrap());
    }

    #[test]
    fn bad_settings_are_config_errors() {
        let cfg = PipelineConfig {
            strategy: "e9".into(),
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().downcast_ref::<ConfigError>().is_some());
        let parsed: Result<PipelineConfig, _> = toml::from_str("unknown = 1");
        assert!(parsed.is_err());
        let parsed: PipelineConfig = toml::from_str("strategy = \"e2\"\n[model]\nretries = 5\n").unwrap();
        assert_eq!(parsed.model.retries, 5);
        assert_eq!(parsed.model.max_in_flight, 4);
    }
}

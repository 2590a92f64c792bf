//! Versioned TOML configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use snipcheck_core::search::UsablePolicy;
use snipcheck_core::tags::TagMap;
use snipcheck_core::taxonomy::Rule;
use snipcheck_core::CalendarDate;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    pub sandbox: SandboxConfig,
    pub python: PythonConfig,
    pub javascript: JavaScriptConfig,
    pub java: CompilerConfig,
    pub csharp: CompilerConfig,
    pub tags: TagMap,
    pub taxonomy: TaxonomyConfig,
    pub sample: SampleConfig,
    pub search: SearchConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            version: CONFIG_VERSION,
            sandbox: SandboxConfig::default(),
            python: PythonConfig::default(),
            javascript: JavaScriptConfig::default(),
            java: CompilerConfig::java(),
            csharp: CompilerConfig::csharp(),
            tags: TagMap::default(),
            taxonomy: TaxonomyConfig::default(),
            sample: SampleConfig::default(),
            search: SearchConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("unsupported config version {0} (expected {CONFIG_VERSION})")]
    Version(u32),
    #[error("{0}")]
    Invalid(String),
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Config::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: PathBuf::new(),
            source,
        })?;
        config.check()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_default()
    }

    fn check(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        if self.sandbox.timeout_ms == 0 {
            return Err(ConfigError::Invalid("sandbox.timeout_ms must be positive".into()));
        }
        for (name, c) in [("java", &self.java), ("csharp", &self.csharp)] {
            if !c.command.is_empty() && !c.command.iter().any(|a| a.contains("{file}")) {
                return Err(ConfigError::Invalid(format!("{name}.command needs a {{file}} placeholder")));
            }
        }
        if self.search.k == 0 {
            return Err(ConfigError::Invalid("search.k must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkIsolation {
    /// Use a network namespace when the host allows it.
    #[default]
    Auto,
    /// Refuse to run snippets without a network namespace.
    Required,
    /// Rely on the in-process guards only.
    Off,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandboxConfig {
    /// Wall-clock budget for one run or compile.
    pub timeout_ms: u64,
    pub memory_mb: u64,
    pub max_file_mb: u64,
    pub network: NetworkIsolation,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        SandboxConfig {
            timeout_ms: 5000,
            memory_mb: 1024,
            max_file_mb: 16,
            network: NetworkIsolation::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PythonConfig {
    pub python3: String,
    /// A real Python 2 interpreter. When empty, the v2 grammar is emulated
    /// under `python3` and v2 code runs after automatic translation.
    pub python2: String,
}

impl Default for PythonConfig {
    fn default() -> Self {
        PythonConfig {
            python3: "python3".into(),
            python2: String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JavaScriptConfig {
    pub node: String,
}

impl Default for JavaScriptConfig {
    fn default() -> Self {
        JavaScriptConfig { node: "node".into() }
    }
}

/// External compiler. `{file}` is replaced by the source path and
/// `{outdir}` by a scratch output directory.
#[derive(Clone, Default, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompilerConfig {
    pub command: Vec<String>,
    /// Arguments that make the compiler print its version.
    pub version_args: Vec<String>,
    pub language_version: String,
}

impl CompilerConfig {
    pub fn java() -> Self {
        CompilerConfig {
            command: ["javac", "-nowarn", "-source", "1.7", "-target", "1.7", "-Xmaxerrs", "1000", "-d", "{outdir}", "{file}"]
                .map(String::from)
                .to_vec(),
            version_args: vec!["-version".into()],
            language_version: "1.7".into(),
        }
    }

    pub fn csharp() -> Self {
        CompilerConfig {
            command: ["mcs", "-target:library", "-nowarn:0168,0219", "-out:{outdir}/snippet.dll", "{file}"]
                .map(String::from)
                .to_vec(),
            version_args: vec!["--version".into()],
            language_version: "default".into(),
        }
    }

    pub fn program(&self) -> Option<&str> {
        self.command.first().map(String::as_str).filter(|p| !p.is_empty())
    }
}


#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaxonomyConfig {
    pub top_n: usize,
    /// Rules applied after the built-in ones.
    pub extra_rules: Vec<Rule>,
}

impl Default for TaxonomyConfig {
    fn default() -> Self {
        TaxonomyConfig {
            top_n: 10,
            extra_rules: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub n: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { n: 50, seed: 2014 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    /// Replay recorded results only.
    #[default]
    Fixture,
    /// Query the live API and record every response into the fixture store.
    Record,
    /// Query the live API without recording.
    Live,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub provider: ProviderKind,
    pub fixture_dir: PathBuf,
    pub endpoint: String,
    pub api_key_env: String,
    pub engine_id_env: String,
    pub min_interval_ms: u64,
    pub language: String,
    pub queries: usize,
    pub k: usize,
    pub site: String,
    pub keyword: String,
    pub date_range: Option<(CalendarDate, CalendarDate)>,
    pub policy: UsablePolicy,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            provider: ProviderKind::Fixture,
            fixture_dir: PathBuf::from("search-fixtures"),
            endpoint: "https://www.googleapis.com/customsearch/v1".into(),
            api_key_env: "SNIPCHECK_SEARCH_KEY".into(),
            engine_id_env: "SNIPCHECK_SEARCH_CX".into(),
            min_interval_ms: 1000,
            language: "python".into(),
            queries: 100,
            k: 10,
            site: "stackoverflow.com".into(),
            keyword: "Python".into(),
            date_range: None,
            policy: UsablePolicy::AnyUsable,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = Config::default();
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = Config::from_toml("version = 1\n[sandbox]\ntimeout_ms = 200\n").unwrap();
        assert_eq!(c.sandbox.timeout_ms, 200);
        assert_eq!(c.sandbox.memory_mb, 1024);
        assert_eq!(c.python.python3, "python3");
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(Config::from_toml("version = 2"), Err(ConfigError::Version(2))));
        assert!(Config::from_toml("version = 1\nbogus = 3").is_err());
        assert!(Config::from_toml("version = 1\n[java]\ncommand = [\"javac\"]").is_err());
    }

    #[test]
    fn search_date_range_parses() {
        let c = Config::from_toml("[search]\ndate_range = [\"2008-07-31\", \"2014-04-30\"]").unwrap();
        let (a, b) = c.search.date_range.unwrap();
        assert_eq!((a.julian_day(), b.julian_day()), (2454679, 2456778));
    }
}

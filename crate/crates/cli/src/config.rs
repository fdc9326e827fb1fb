use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Norms,
    Reduction,
    Applications,
    DiProtocol,
    FullSuite,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Norms => "norms",
            ExperimentKind::Reduction => "reduction",
            ExperimentKind::Applications => "applications",
            ExperimentKind::DiProtocol => "di-protocol",
            ExperimentKind::FullSuite => "full-suite",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub eps: f64,
    pub delta: f64,
    /// Message width for the protocol and channel experiments.
    pub n: usize,
    pub shots: u64,
    pub restarts: usize,
    /// Random probes per sampled check.
    pub samples: usize,
    /// Iteration cap for the local searches.
    pub iters: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            eps: 0.04,
            delta: 0.5,
            n: 1,
            shots: 100_000,
            restarts: 20,
            samples: 50,
            iters: 200,
        }
    }
}

/// File form: every field optional so command-line flags can fill gaps.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: ExperimentKind,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    #[serde(default)]
    params: Params,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub params: Params,
}

/// Invalid configuration, located by field path.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Command-line values that apply when the file leaves a field unset.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ExperimentConfig {
    /// Parses a TOML config. Values in the file take precedence over the
    /// command-line overrides, which take precedence over defaults.
    pub fn from_toml(text: &str, overrides: &Overrides) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| invalid(".", e.to_string()))?;
        let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner().message().trim().to_string())
        })?;
        let seed = file.seed.or(overrides.seed).ok_or_else(|| {
            invalid("seed", "no seed given in the config or with --seed")
        })?;
        let config = ExperimentConfig {
            experiment: file.experiment,
            seed,
            out: file.out.or_else(|| overrides.out.clone()),
            format: file.format.or(overrides.format).unwrap_or(Format::Json),
            params: file.params,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(".", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    /// Default configuration of an experiment kind.
    pub fn new(experiment: ExperimentKind, seed: u64) -> Self {
        ExperimentConfig {
            experiment,
            seed,
            out: None,
            format: Format::Json,
            params: Params::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        if !(0.0..1.0).contains(&p.eps) {
            return Err(invalid("params.eps", format!("must lie in [0, 1), got {}", p.eps)));
        }
        if !(p.delta > 0.0 && p.delta <= 1.0) {
            return Err(invalid("params.delta", format!("must lie in (0, 1], got {}", p.delta)));
        }
        if p.n == 0 || p.n > 2 {
            return Err(invalid("params.n", format!("must be 1 or 2, got {}", p.n)));
        }
        if p.shots == 0 {
            return Err(invalid("params.shots", "must be at least 1"));
        }
        if p.restarts == 0 {
            return Err(invalid("params.restarts", "must be at least 1"));
        }
        if p.samples == 0 {
            return Err(invalid("params.samples", "must be at least 1"));
        }
        if p.iters == 0 {
            return Err(invalid("params.iters", "must be at least 1"));
        }
        Ok(())
    }
}

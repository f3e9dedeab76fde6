//! Pipeline configuration.
//!
//! A config is a TOML (or JSON) document. Relative paths inside it are
//! resolved against the directory holding the config file.
//!
//! ```toml
//! model = "model.toml"          # optional when [adapter].fixture is set
//! output_dir = "out"
//!
//! [adapter]                      # at most one source
//! fixture = "fixture.toml"
//! # exec = ["python3", "adapter.py"]
//! # replay = "coverage.jsonl"
//!
//! [impact]
//! profiles = 2                   # 1..=64
//! mode = "profile"               # or "global"
//! timeout_secs = 30              # 0 < t <= 86400
//! workers = 1                    # 1..=256
//!
//! [correlation]
//! theta_high = 0.9
//! theta_low = 0.1
//! # import = "matrix.csv"       # skip computation, use this matrix
//!
//! [strength]
//! base = 2                       # 2..=6
//! high = 3                       # base < high <= 6
//! full = false
//!
//! [evaluate]
//! # fixture = "fixture.toml"    # defaults to [adapter].fixture
//! ```

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use codeaware_core::correlate::PlanSettings;
use codeaware_core::doc::{self, Format};
use codeaware_core::evaluate::Fixture;
use codeaware_core::impact::{ImpactMode, DEFAULT_PROFILES};
use codeaware_core::model::{load_model, ParameterModel};

use crate::error::{CliError, Result};

pub const MAX_PROFILES: usize = 64;
pub const MAX_WORKERS: usize = 256;
pub const MAX_TIMEOUT_SECS: f64 = 86_400.0;
pub const MAX_STRENGTH: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub model: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub adapter: AdapterConfig,
    #[serde(default)]
    pub impact: ImpactConfig,
    #[serde(default)]
    pub correlation: CorrelationConfig,
    #[serde(default)]
    pub strength: StrengthConfig,
    #[serde(default)]
    pub evaluate: EvaluateConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterConfig {
    #[serde(default)]
    pub fixture: Option<PathBuf>,
    #[serde(default)]
    pub exec: Option<Vec<String>>,
    #[serde(default)]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpactConfig {
    #[serde(default = "default_profiles")]
    pub profiles: usize,
    #[serde(default)]
    pub mode: ImpactMode,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_profiles() -> usize {
    DEFAULT_PROFILES
}

fn default_timeout() -> f64 {
    30.0
}

fn default_workers() -> usize {
    1
}

impl Default for ImpactConfig {
    fn default() -> Self {
        ImpactConfig {
            profiles: default_profiles(),
            mode: ImpactMode::default(),
            timeout_secs: default_timeout(),
            workers: default_workers(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationConfig {
    #[serde(default = "default_high")]
    pub theta_high: f64,
    #[serde(default = "default_low")]
    pub theta_low: f64,
    #[serde(default)]
    pub import: Option<PathBuf>,
}

fn default_high() -> f64 {
    0.9
}

fn default_low() -> f64 {
    0.1
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        CorrelationConfig {
            theta_high: default_high(),
            theta_low: default_low(),
            import: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrengthConfig {
    #[serde(default = "default_base")]
    pub base: usize,
    #[serde(default = "default_high_strength")]
    pub high: usize,
    #[serde(default)]
    pub full: bool,
}

fn default_base() -> usize {
    2
}

fn default_high_strength() -> usize {
    3
}

impl Default for StrengthConfig {
    fn default() -> Self {
        StrengthConfig {
            base: default_base(),
            high: default_high_strength(),
            full: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    #[serde(default)]
    pub fixture: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum AdapterSource {
    Fixture(PathBuf),
    Exec(Vec<String>),
    Replay(PathBuf),
}

/// A validated config with every path made absolute and the model loaded.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub base_dir: PathBuf,
    pub output_dir: PathBuf,
    pub model: ParameterModel,
    pub adapter: Option<AdapterSource>,
    pub fixture: Option<Fixture>,
    pub profiles: usize,
    pub mode: ImpactMode,
    pub timeout: Duration,
    pub workers: usize,
    pub plan_settings: PlanSettings,
    pub import: Option<PathBuf>,
    pub evaluate_fixture: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        doc::read(path).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn parse(text: &str, format: Format) -> Result<Self> {
        doc::parse(text, format).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    /// Range checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Validation(m));
        let sources = [
            self.adapter.fixture.is_some(),
            self.adapter.exec.is_some(),
            self.adapter.replay.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if sources > 1 {
            return bad("adapter: set only one of `fixture`, `exec`, `replay`".into());
        }
        if matches!(&self.adapter.exec, Some(cmd) if cmd.is_empty()) {
            return bad("adapter.exec: command is empty".into());
        }
        let imp = &self.impact;
        if !(1..=MAX_PROFILES).contains(&imp.profiles) {
            return bad(format!(
                "impact.profiles must be in 1..={MAX_PROFILES}, got {}",
                imp.profiles
            ));
        }
        if !(imp.timeout_secs > 0.0 && imp.timeout_secs <= MAX_TIMEOUT_SECS) {
            return bad(format!(
                "impact.timeout_secs must be in (0, {MAX_TIMEOUT_SECS}], got {}",
                imp.timeout_secs
            ));
        }
        if !(1..=MAX_WORKERS).contains(&imp.workers) {
            return bad(format!(
                "impact.workers must be in 1..={MAX_WORKERS}, got {}",
                imp.workers
            ));
        }
        if self.strength.high > MAX_STRENGTH {
            return bad(format!(
                "strength.high must be at most {MAX_STRENGTH}, got {}",
                self.strength.high
            ));
        }
        self.plan_settings().validate()?;
        if self.model.is_none() && self.adapter.fixture.is_none() {
            return bad("`model` is required unless adapter.fixture supplies one".into());
        }
        Ok(())
    }

    pub fn plan_settings(&self) -> PlanSettings {
        PlanSettings {
            theta_high: self.correlation.theta_high,
            theta_low: self.correlation.theta_low,
            t_base: self.strength.base,
            t_high: self.strength.high,
            full_strength: self.strength.full,
        }
    }

    /// Validates, resolves paths against `base_dir`, and loads the model and
    /// fixture. Nothing is written.
    pub fn resolve(&self, base_dir: &Path) -> Result<Resolved> {
        self.validate()?;
        let abs = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };

        let fixture = match &self.adapter.fixture {
            Some(p) => Some(Fixture::load(&abs(p))?),
            None => None,
        };
        let model = match &self.model {
            Some(p) => {
                let p = abs(p);
                let text = doc::read_text(&p)?;
                load_model(&text, Format::from_path(&p))
                    .map_err(|e| CliError::Validation(format!("model {}: {e}", p.display())))?
            }
            None => fixture.as_ref().expect("checked in validate").model.clone(),
        };
        if let Some(f) = &fixture {
            if f.model != model {
                return Err(CliError::Validation(format!(
                    "model does not match the parameters of fixture `{}`",
                    f.name
                )));
            }
        }
        let adapter = if let Some(p) = &self.adapter.fixture {
            Some(AdapterSource::Fixture(abs(p)))
        } else if let Some(cmd) = &self.adapter.exec {
            Some(AdapterSource::Exec(cmd.clone()))
        } else {
            self.adapter.replay.as_ref().map(|p| AdapterSource::Replay(abs(p)))
        };
        Ok(Resolved {
            base_dir: base_dir.to_path_buf(),
            output_dir: abs(&self.output_dir),
            model,
            adapter,
            fixture,
            profiles: self.impact.profiles,
            mode: self.impact.mode,
            timeout: Duration::from_secs_f64(self.impact.timeout_secs),
            workers: self.impact.workers,
            plan_settings: self.plan_settings(),
            import: self.correlation.import.as_ref().map(|p| abs(p)),
            evaluate_fixture: self
                .evaluate
                .fixture
                .as_ref()
                .or(self.adapter.fixture.as_ref())
                .map(|p| abs(p)),
        })
    }
}

/// Loads and resolves a config file in one step.
pub fn load_resolved(path: &Path) -> Result<Resolved> {
    let cfg = PipelineConfig::load(path)?;
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."));
    cfg.resolve(&base)
}

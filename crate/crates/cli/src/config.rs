use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

/// Optional TOML file mirroring the global flags and default budgets.
/// Command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub store: Option<PathBuf>,
    pub height: Option<u64>,
    pub depth: Option<usize>,
    pub samples: Option<u64>,
    pub rounds: Option<u32>,
    /// Candidate boundary polynomials for `probe` runs without `--poly`.
    #[serde(default)]
    pub boundary_polys: Vec<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let cfg: FileConfig = toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("height", self.height.map(|v| v as u128)),
            ("samples", self.samples.map(|v| v as u128)),
            ("rounds", self.rounds.map(|v| v as u128)),
            ("jobs", self.jobs.map(|v| v as u128)),
        ];
        for (name, v) in positive {
            if v == Some(0) {
                return Err(CliError::Usage(format!("config: {name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Resolved settings shared by every command.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: Option<u64>,
    pub store: Option<PathBuf>,
    pub file: FileConfig,
}

impl Settings {
    pub fn height(&self, flag: Option<u64>, default: u64) -> Result<u64, CliError> {
        positive("height", flag.or(self.file.height).unwrap_or(default))
    }

    pub fn depth(&self, flag: Option<usize>, default: usize) -> usize {
        flag.or(self.file.depth).unwrap_or(default)
    }

    pub fn samples(&self, flag: Option<u64>, default: u64) -> Result<u64, CliError> {
        positive("samples", flag.or(self.file.samples).unwrap_or(default))
    }

    pub fn rounds(&self, flag: Option<u32>, default: u32) -> Result<u32, CliError> {
        positive("rounds", flag.or(self.file.rounds).unwrap_or(default) as u64).map(|v| v as u32)
    }

    pub fn require_seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        flag.or(self.seed)
            .ok_or_else(|| CliError::Usage("sampling commands need --seed (or seed in the config file)".into()))
    }
}

fn positive(name: &str, v: u64) -> Result<u64, CliError> {
    if v == 0 {
        Err(CliError::Usage(format!("{name} must be positive")))
    } else {
        Ok(v)
    }
}

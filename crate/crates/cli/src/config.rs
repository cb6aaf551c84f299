use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use confgraph::graph::DEFAULT_TRUNCATION_EPS;
use confgraph::stats::Conditioning;
use confgraph::{DegreeLaw, LawSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Hopcount,
    Components,
    BpW,
    LimitLaw,
    CouplingDiagnostics,
    Fig1,
    Fig2,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Hopcount,
        Mode::Components,
        Mode::BpW,
        Mode::LimitLaw,
        Mode::CouplingDiagnostics,
        Mode::Fig1,
        Mode::Fig2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Hopcount => "hopcount",
            Mode::Components => "components",
            Mode::BpW => "bp-w",
            Mode::LimitLaw => "limit-law",
            Mode::CouplingDiagnostics => "coupling-diagnostics",
            Mode::Fig1 => "fig1",
            Mode::Fig2 => "fig2",
        }
    }

    /// Whether the mode builds graphs and so needs sizes `N`.
    pub fn needs_sizes(self) -> bool {
        !matches!(self, Mode::BpW)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown mode {s:?}")))
    }
}

/// Mode-specific settings; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Horizontal shift used when comparing curves; defaults to the
    /// difference of `floor(log_nu N)`.
    pub shift: Option<i64>,
    /// When set, fig2 sizes are `floor(N_1 nu^{2j})` for this many `j`,
    /// starting from the first entry of `n_values`.
    pub subsequence: Option<usize>,
    /// Generations of the branching process used to approximate `W`.
    pub generations: Option<usize>,
    /// Also solve for the law of `W` on a grid.
    pub fixed_point: bool,
    pub grid_points_per_unit: usize,
    pub grid_upper: f64,
    pub k_min: i64,
    pub k_max: i64,
    /// Roots grown per degree sequence in coupling diagnostics.
    pub roots_per_graph: usize,
    pub coupling_generations: usize,
    pub well_behaved_eps: f64,
    /// Tightness windows `K` reported with hopcount runs.
    pub tightness: Vec<u64>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            shift: None,
            subsequence: None,
            generations: None,
            fixed_point: false,
            grid_points_per_unit: 64,
            grid_upper: 100.0,
            k_min: -6,
            k_max: 6,
            roots_per_graph: 1,
            coupling_generations: 3,
            well_behaved_eps: 0.1,
            tightness: vec![1, 2, 4, 8],
        }
    }
}

/// One experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub law: LawSpec,
    #[serde(default)]
    pub n_values: Vec<u64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    #[serde(default = "default_truncation_eps")]
    pub truncation_eps: f64,
    #[serde(default)]
    pub conditioning: Conditioning,
    #[serde(default)]
    pub oracle_bfs: bool,
    #[serde(default)]
    pub options: Options,
}

fn default_replications() -> usize {
    1000
}

fn default_truncation_eps() -> f64 {
    DEFAULT_TRUNCATION_EPS
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn mode(&self) -> Result<Mode, CliError> {
        self.mode.ok_or_else(|| CliError::Config("no mode given".into()))
    }

    /// Checks ranges and returns the validated degree law.
    pub fn validate(&self) -> Result<DegreeLaw, CliError> {
        let mode = self.mode()?;
        let law = DegreeLaw::new(self.law.clone()).map_err(|e| CliError::Config(e.to_string()))?;
        if self.replications == 0 {
            return Err(CliError::Config("replications must be at least 1".into()));
        }
        if mode.needs_sizes() && self.n_values.is_empty() {
            return Err(CliError::Config(format!("mode {mode} needs n_values")));
        }
        if let Some(n) = self.n_values.iter().find(|&&n| n < 2) {
            return Err(CliError::Config(format!("every N must be at least 2, got {n}")));
        }
        if !(self.truncation_eps > 0.0 && self.truncation_eps < 0.25) {
            return Err(CliError::Config(format!(
                "truncation_eps must lie in (0, 1/4), got {}",
                self.truncation_eps
            )));
        }
        let o = &self.options;
        if o.k_min > o.k_max {
            return Err(CliError::Config("options.k_min exceeds options.k_max".into()));
        }
        if o.roots_per_graph == 0 || o.coupling_generations == 0 {
            return Err(CliError::Config(
                "options.roots_per_graph and options.coupling_generations must be positive".into(),
            ));
        }
        if o.grid_points_per_unit == 0 || !(o.grid_upper > 0.0) {
            return Err(CliError::Config("the W grid must have positive size".into()));
        }
        if !(o.well_behaved_eps > 0.0) {
            return Err(CliError::Config("options.well_behaved_eps must be positive".into()));
        }
        Ok(law)
    }
}

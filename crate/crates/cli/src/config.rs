//! Experiment configuration files (TOML).

use std::path::PathBuf;

use serde::Deserialize;

use mpg_core::envs::MatrixGameMode;
use mpg_core::learners::{OptimisticMode, StepsizeRule};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSource,
    pub learner: LearnerConfig,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Record every `cadence` iterations; unset uses the learner default.
    pub cadence: Option<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Exactly one game source, selected by `source`.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameSource {
    /// A game file in the JSON schema of `mpg_core::io`.
    File { path: PathBuf },
    Congestion {
        players: Option<usize>,
        safe_weights: Option<Vec<f64>>,
        distancing_weights: Option<Vec<f64>>,
        penalty: Option<f64>,
        gamma: Option<f64>,
        rho: Option<Vec<f64>>,
    },
    CooperativeRandom {
        states: usize,
        players: usize,
        actions: usize,
        gamma: f64,
        /// Seed of the game draw, independent of the run seeds.
        #[serde(default)]
        game_seed: u64,
    },
    Matrix {
        payoff: Vec<Vec<f64>>,
        mode: MatrixMode,
        gamma: f64,
    },
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MatrixMode {
    Cooperative,
    ZeroSum,
}

impl From<MatrixMode> for MatrixGameMode {
    fn from(m: MatrixMode) -> Self {
        match m {
            MatrixMode::Cooperative => MatrixGameMode::Cooperative,
            MatrixMode::ZeroSum => MatrixGameMode::ZeroSum,
        }
    }
}

/// A number, or `"auto"` for the rule-derived default.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Param {
    #[default]
    Auto,
    Value(f64),
}

impl<'de> Deserialize<'de> for Param {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Param::Value(x)),
            Raw::Text(s) if s == "auto" => Ok(Param::Auto),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("expected a number or \"auto\", got \"{s}\""))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    Uniform,
    /// Dirichlet(1) rows drawn from the run seed.
    Random,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerConfig {
    ExactPg {
        #[serde(default)]
        eta: Param,
        iterations: usize,
        /// Rule used when `eta = "auto"`; unset picks `cooperative` for
        /// identical-reward games and `potential_tight` otherwise.
        rule: Option<StepsizeRuleName>,
        #[serde(default)]
        init: Init,
    },
    SamplePg {
        #[serde(default)]
        eta: Param,
        iterations: usize,
        batch: usize,
        #[serde(default)]
        xi: Param,
        weight_bound: Option<f64>,
        inner_steps: Option<usize>,
    },
    Optimistic {
        #[serde(default)]
        eta: Param,
        iterations: usize,
        mode: OptimisticModeName,
        /// Constant critic rate; unset uses the decaying schedule.
        alpha: Option<f64>,
        /// Horizon `H` of the decaying schedule.
        horizon: Option<f64>,
    },
}

impl LearnerConfig {
    pub fn iterations(&self) -> usize {
        match self {
            Self::ExactPg { iterations, .. } | Self::SamplePg { iterations, .. } | Self::Optimistic { iterations, .. } => {
                *iterations
            }
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Self::SamplePg { .. } | Self::ExactPg { init: Init::Random, .. })
    }
}

/// Serde-facing names for core enums that parse from strings.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StepsizeRuleName {
    PotentialFast,
    PotentialTight,
    Cooperative,
}

impl From<StepsizeRuleName> for StepsizeRule {
    fn from(r: StepsizeRuleName) -> Self {
        match r {
            StepsizeRuleName::PotentialFast => StepsizeRule::PotentialFast,
            StepsizeRuleName::PotentialTight => StepsizeRule::PotentialTight,
            StepsizeRuleName::Cooperative => StepsizeRule::Cooperative,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum OptimisticModeName {
    Cooperative,
    ZeroSum,
}

impl From<OptimisticModeName> for OptimisticMode {
    fn from(m: OptimisticModeName) -> Self {
        match m {
            OptimisticModeName::Cooperative => OptimisticMode::Cooperative,
            OptimisticModeName::ZeroSum => OptimisticMode::ZeroSum,
        }
    }
}

/// A configuration problem, reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |msg: &str| Err(ConfigError(msg.to_string()));
        if self.learner.iterations() == 0 {
            return err("learner.iterations: T must be ≥ 1");
        }
        if self.cadence == Some(0) {
            return err("cadence: must be ≥ 1");
        }
        if self.learner.is_stochastic() && self.seeds.is_empty() {
            return err("seeds: must be nonempty for a stochastic learner");
        }
        match &self.learner {
            LearnerConfig::SamplePg { batch: 0, .. } => return err("learner.batch: K must be ≥ 1"),
            LearnerConfig::Optimistic { alpha: Some(_), horizon: Some(_), .. } => {
                return err("learner: give either alpha (constant schedule) or horizon (decaying schedule), not both")
            }
            _ => {}
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(ConfigError(format!("seeds: duplicate seed {dup}")));
        }
        Ok(())
    }
}

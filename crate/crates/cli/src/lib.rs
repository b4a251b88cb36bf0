//! Library side of the `mpg` experiment runner: config handling, game
//! construction, learner dispatch and trace output.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use mpg_core::envs::{build_congestion, build_cooperative_random, build_matrix_game, CongestionSpec};
use mpg_core::eval::KAPPA_DEFAULT_BUDGET;
use mpg_core::io::{load_game, load_policy};
use mpg_core::learners::{
    optimistic_stepsize, run_exact_pg, run_optimistic, suggest_stepsize, CriticSchedule, ExactPgConfig,
    OptimisticConfig, StepsizeRule,
};
use mpg_core::sample::{
    default_exploration, default_weight_bound, run_sample_pg, sample_stepsize_cooperative, sample_stepsize_potential,
    FeatureMap, SamplePgConfig, TabularFeatures,
};
use mpg_core::selftest::{run_selftest, Projector, SuiteResult};
use mpg_core::{estimate_kappa, nash_gap, Error, JointPolicy, LearnTrace, TabularMarkovGame};

pub use config::{ConfigError, ExperimentConfig};
use config::{GameSource, Init, LearnerConfig, Param};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVALID_GAME: i32 = 3;

/// Failure of a subcommand, carrying its exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::InvalidGame(_) => EXIT_INVALID_GAME,
            Self::Failed(_) => EXIT_FAILURE,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.0)
    }
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

/// Errors from reading a game or policy file: broken invariants exit 3,
/// anything else is a configuration problem.
fn load_error(path: &Path, e: Error) -> CliError {
    match e {
        Error::InvalidGame(msg) => CliError::InvalidGame(format!("{}: {msg}", path.display())),
        other => CliError::Config(format!("{}: {other}", path.display())),
    }
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Builds or loads the configured game. Relative file paths resolve
/// against `base`, the directory holding the config.
pub fn build_game(source: &GameSource, base: &Path) -> Result<TabularMarkovGame, CliError> {
    let config_err = |e: Error| CliError::Config(format!("game: {e}"));
    match source {
        GameSource::File { path } => {
            let path = base.join(path);
            load_game(&path).map_err(|e| load_error(&path, e))
        }
        GameSource::Congestion { players, safe_weights, distancing_weights, penalty, gamma, rho } => {
            let mut spec = CongestionSpec::default();
            if let Some(n) = players {
                spec.num_players = *n;
            }
            if let Some(w) = safe_weights {
                spec.safe_weights = w.clone();
            }
            if let Some(w) = distancing_weights {
                spec.distancing_weights = w.clone();
            }
            spec.penalty = *penalty;
            if let Some(g) = gamma {
                spec.discount = *g;
            }
            spec.initial_dist = rho.clone();
            build_congestion(&spec).map_err(config_err)
        }
        GameSource::CooperativeRandom { states, players, actions, gamma, game_seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*game_seed);
            build_cooperative_random(*states, *players, *actions, *gamma, &mut rng).map_err(config_err)
        }
        GameSource::Matrix { payoff, mode, gamma } => {
            build_matrix_game(payoff, (*mode).into(), *gamma).map_err(config_err)
        }
    }
}

/// Mismatch coefficient at `rho`, or `None` when it cannot be enumerated.
fn kappa_or_warn(game: &TabularMarkovGame) -> Option<f64> {
    match estimate_kappa(game, game.initial_dist(), KAPPA_DEFAULT_BUDGET) {
        Ok(k) => Some(k),
        Err(e) => {
            warn!("cannot estimate the mismatch coefficient ({e})");
            None
        }
    }
}

/// A learner with every "auto" parameter resolved.
#[derive(Clone, Debug)]
pub enum ResolvedLearner {
    Exact { config: ExactPgConfig, init: Init },
    Sample { config: SamplePgConfig },
    Optimistic { config: OptimisticConfig },
}

pub fn resolve_learner(
    learner: &LearnerConfig,
    game: &TabularMarkovGame,
    cadence: Option<usize>,
) -> Result<ResolvedLearner, CliError> {
    let resolved = match learner {
        LearnerConfig::ExactPg { eta, iterations, rule, init } => {
            let eta = match eta {
                Param::Value(x) => *x,
                Param::Auto => {
                    let mut rule = rule.map(StepsizeRule::from).unwrap_or(if game.is_identical_reward() {
                        StepsizeRule::Cooperative
                    } else {
                        StepsizeRule::PotentialTight
                    });
                    let mut kappa = 1.0;
                    if rule == StepsizeRule::PotentialTight {
                        match kappa_or_warn(game) {
                            Some(k) => kappa = k,
                            None => {
                                warn!("falling back to the potential_fast stepsize rule");
                                rule = StepsizeRule::PotentialFast;
                            }
                        }
                    }
                    let eta = suggest_stepsize(game, kappa, rule, *iterations).map_err(|e| CliError::Config(e.to_string()))?;
                    info!("eta = auto resolved to {eta:.6e} by rule {rule}");
                    eta
                }
            };
            let mut config = ExactPgConfig::new(eta, *iterations).map_err(|e| CliError::Config(e.to_string()))?;
            config.cadence = cadence;
            ResolvedLearner::Exact { config, init: *init }
        }
        LearnerConfig::SamplePg { eta, iterations, batch, xi, weight_bound, inner_steps } => {
            let dim = game.num_states() * game.num_actions();
            let w = weight_bound.unwrap_or_else(|| default_weight_bound(dim, game.discount()));
            let eta = match eta {
                Param::Value(x) => *x,
                Param::Auto if game.is_identical_reward() => sample_stepsize_cooperative(game, w, *iterations),
                Param::Auto => sample_stepsize_potential(game, w, *iterations),
            };
            let xi = match xi {
                Param::Value(x) => *x,
                Param::Auto => {
                    let kappa = kappa_or_warn(game).unwrap_or_else(|| {
                        warn!("using kappa = 1, its lower bound, for the exploration rate");
                        1.0
                    });
                    default_exploration(kappa, game.num_players(), game.num_actions(), dim, game.discount(), *batch)
                }
            };
            info!("sample_pg eta = {eta:.6e}, xi = {xi:.4}, weight bound = {w:.4}");
            let config = SamplePgConfig {
                iterations: *iterations,
                batch: *batch,
                eta,
                xi,
                seed: 0,
                weight_bound: Some(w),
                inner_steps: *inner_steps,
                cadence,
            };
            config.validate().map_err(|e| CliError::Config(e.to_string()))?;
            ResolvedLearner::Sample { config }
        }
        LearnerConfig::Optimistic { eta, iterations, mode, alpha, horizon } => {
            let schedule = match (alpha, horizon) {
                (Some(a), _) => CriticSchedule::Constant(*a),
                (None, Some(h)) => CriticSchedule::Decaying { horizon: *h },
                (None, None) => CriticSchedule::decaying_for(game.discount()),
            };
            schedule.validate().map_err(|e| CliError::Config(e.to_string()))?;
            let eta = match eta {
                Param::Value(x) => *x,
                Param::Auto => {
                    let eta = optimistic_stepsize(game, schedule.reference_rate());
                    info!("eta = auto resolved to {eta:.6e}");
                    eta
                }
            };
            let config = OptimisticConfig { eta, schedule, mode: (*mode).into(), iterations: *iterations, cadence };
            config.validate().map_err(|e| CliError::Config(e.to_string()))?;
            ResolvedLearner::Optimistic { config }
        }
    };
    Ok(resolved)
}

/// One learner run for `seed`.
pub fn run_learner(game: &TabularMarkovGame, learner: &ResolvedLearner, seed: u64) -> Result<LearnTrace, CliError> {
    let trace = match learner {
        ResolvedLearner::Exact { config, init } => {
            let start = match init {
                Init::Uniform => JointPolicy::uniform(game),
                Init::Random => JointPolicy::random(game, &mut ChaCha8Rng::seed_from_u64(seed)),
            };
            run_exact_pg(game, &start, config)
        }
        ResolvedLearner::Sample { config } => {
            let features = TabularFeatures::for_game(game);
            let config = SamplePgConfig { seed, ..config.clone() };
            run_sample_pg(game, &features as &dyn FeatureMap, &config, None)
        }
        ResolvedLearner::Optimistic { config } => run_optimistic(game, config),
    };
    trace.map_err(failed)
}

/// `t,max_gap,gap_player_0..,mean_policy_l1_distance_to_final`, one row per record.
pub fn trace_csv(trace: &LearnTrace) -> String {
    let mut out = String::from("t,max_gap");
    let players = trace.records().first().map_or(0, |r| r.gaps.per_player_gap.len());
    for i in 0..players {
        write!(out, ",gap_player_{i}").unwrap();
    }
    out.push_str(",mean_policy_l1_distance_to_final\n");
    let Some(last) = trace.final_policy() else {
        return out;
    };
    for (record, dist) in trace.records().iter().zip(trace.distances_to(last)) {
        write!(out, "{},{}", record.iteration, record.gaps.max_gap).unwrap();
        for g in &record.gaps.per_player_gap {
            write!(out, ",{g}").unwrap();
        }
        writeln!(out, ",{dist}").unwrap();
    }
    out
}

#[derive(Clone, Debug)]
pub struct SeedSummary {
    pub seed: u64,
    /// Mean max gap over the recorded iterates.
    pub nash_regret: f64,
    pub best_iteration: usize,
    pub min_max_gap: f64,
    pub final_max_gap: f64,
    pub wall_time: Duration,
}

pub fn summary_csv(rows: &[SeedSummary]) -> String {
    let mut out = String::from("seed,nash_regret,best_t,min_max_gap,final_max_gap,wall_time_s\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.3}",
            r.seed,
            r.nash_regret,
            r.best_iteration,
            r.min_max_gap,
            r.final_max_gap,
            r.wall_time.as_secs_f64()
        )
        .unwrap();
    }
    out
}

pub fn trace_path(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("trace_seed{seed}.csv"))
}

/// Overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct RunOverrides {
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    pub cadence: Option<usize>,
}

/// Runs every seed in parallel, writing one trace file per seed and a
/// `summary.csv` into the output directory.
pub fn cmd_run(config_path: &Path, overrides: &RunOverrides) -> Result<Vec<SeedSummary>, CliError> {
    let mut config = read_config(config_path)?;
    if let Some(seeds) = &overrides.seeds {
        config.seeds = seeds.clone();
    }
    if let Some(out) = &overrides.out {
        config.out = out.clone();
    }
    if overrides.cadence.is_some() {
        config.cadence = overrides.cadence;
    }
    config.validate()?;
    if config.seeds.is_empty() {
        config.seeds.push(0);
    }

    let base = config_path.parent().unwrap_or(Path::new("."));
    let game = build_game(&config.game, base)?;
    let learner = resolve_learner(&config.learner, &game, config.cadence)?;
    fs::create_dir_all(&config.out).map_err(|e| failed(format!("{}: {e}", config.out.display())))?;
    info!(
        "running {} seed(s): S={} N={} A={} gamma={}",
        config.seeds.len(),
        game.num_states(),
        game.num_players(),
        game.num_actions(),
        game.discount()
    );

    let summaries = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let start = Instant::now();
            let trace = run_learner(&game, &learner, seed)?;
            let wall_time = start.elapsed();
            let path = trace_path(&config.out, seed);
            fs::write(&path, trace_csv(&trace)).map_err(|e| failed(format!("{}: {e}", path.display())))?;
            let (best_iteration, min_max_gap) = trace.best_iterate().map_err(failed)?;
            let summary = SeedSummary {
                seed,
                nash_regret: trace.nash_regret().map_err(failed)?,
                best_iteration,
                min_max_gap,
                final_max_gap: *trace.max_gaps().last().expect("nonempty trace"),
                wall_time,
            };
            info!("seed {seed}: final max gap {:.3e} in {:.1}s", summary.final_max_gap, wall_time.as_secs_f64());
            Ok(summary)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let path = config.out.join("summary.csv");
    fs::write(&path, summary_csv(&summaries)).map_err(|e| failed(format!("{}: {e}", path.display())))?;
    Ok(summaries)
}

/// Fixed-column Nash gap report of a policy file against a game file.
pub fn cmd_eval(game_path: &Path, policy_path: &Path) -> Result<String, CliError> {
    let game = load_game(game_path).map_err(|e| load_error(game_path, e))?;
    let policy = load_policy(policy_path).map_err(|e| load_error(policy_path, e))?;
    let report = nash_gap(&game, &policy).map_err(|e| match e {
        Error::Dimension(_) | Error::InvalidPolicy(_) => CliError::Config(format!("{}: {e}", policy_path.display())),
        other => failed(other),
    })?;
    let mut out = format!("{:>6} {:>20} {:>20}\n", "player", "gap", "value_at_rho");
    for (i, (gap, value)) in report.per_player_gap.iter().zip(&report.values_at_rho).enumerate() {
        writeln!(out, "{i:>6} {gap:>20.12e} {value:>20.12e}").unwrap();
    }
    writeln!(out, "{:>6} {:>20.12e}", "max", report.max_gap).unwrap();
    Ok(out)
}

/// Runs the invariant suites; the report lists one line per suite.
pub fn cmd_selftest(projector: Projector) -> (bool, String) {
    let results: Vec<SuiteResult> = run_selftest(projector);
    let mut out = String::new();
    for r in &results {
        writeln!(out, "{:<24} {} ({})", r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail).unwrap();
    }
    (results.iter().all(|r| r.passed), out)
}

/// Projection that clips without renormalizing; wired to the hidden
/// `--inject-fault projection` flag to prove the selftest can fail.
pub fn faulty_projector(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.clamp(0.0, 1.0)).collect()
}

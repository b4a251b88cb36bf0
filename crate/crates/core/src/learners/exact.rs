//! Independent projected policy-gradient ascent with exact averaged
//! action-values. Every player moves from the same snapshot:
//! `pi_i(.|s) <- Proj_simplex(pi_i(.|s) + eta * Qbar_i(s, .))`.

use crate::error::{Error, Result};
use crate::eval::{evaluate, nash_gap_with_profile, ValueProfile};
use crate::game::{JointPolicy, PlayerPolicy, TabularMarkovGame};
use crate::simplex::project_simplex_into;
use crate::trace::{LearnTrace, TraceRecord};

#[derive(Clone, Debug, PartialEq)]
pub struct ExactPgConfig {
    pub eta: f64,
    /// Number of recorded iterates `T`.
    pub iterations: usize,
    /// Gap evaluation every `cadence` iterations; `None` picks [`default_cadence`].
    pub cadence: Option<usize>,
}

impl ExactPgConfig {
    pub fn new(eta: f64, iterations: usize) -> Result<Self> {
        let config = Self { eta, iterations, cadence: None };
        config.validate()?;
        Ok(config)
    }

    pub fn with_cadence(mut self, cadence: usize) -> Self {
        self.cadence = Some(cadence);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::arg(format!("stepsize must be positive, got {}", self.eta)));
        }
        if self.iterations == 0 {
            return Err(Error::arg("T must be >= 1"));
        }
        if self.cadence == Some(0) {
            return Err(Error::arg("cadence must be >= 1"));
        }
        Ok(())
    }
}

/// Every iteration for `S * A^N <= 10^4`, otherwise every 100.
pub fn default_cadence(game: &TabularMarkovGame) -> usize {
    if game.num_states().saturating_mul(game.num_joint_actions()) <= 10_000 {
        1
    } else {
        100
    }
}

pub(crate) fn should_record(t: usize, total: usize, cadence: usize) -> bool {
    (t - 1) % cadence == 0 || t == total
}

/// One simultaneous update of every player. `eta = 0` returns the policy unchanged.
pub fn step_exact_pg(game: &TabularMarkovGame, policy: &JointPolicy, eta: f64) -> Result<JointPolicy> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::arg(format!("stepsize must be nonnegative and finite, got {eta}")));
    }
    let profile = evaluate(game, policy)?;
    Ok(step_with_profile(policy, &profile, eta))
}

pub(crate) fn step_with_profile(policy: &JointPolicy, profile: &ValueProfile, eta: f64) -> JointPolicy {
    let players = policy
        .players()
        .iter()
        .enumerate()
        .map(|(i, current)| {
            let (ns, na) = (current.num_states(), current.num_actions());
            let mut next = vec![0.0; ns * na];
            let mut ascent = vec![0.0; na];
            for s in 0..ns {
                for ((g, p), q) in ascent.iter_mut().zip(current.row(s)).zip(profile.averaged_row(i, s)) {
                    *g = p + eta * q;
                }
                project_simplex_into(&ascent, &mut next[s * na..(s + 1) * na]);
            }
            PlayerPolicy::from_vec_unchecked(ns, na, next)
        })
        .collect();
    JointPolicy::new(players).expect("update preserves shapes")
}

/// Runs `T` iterates starting from `init` (uniform per player is the usual
/// choice) and records exact Nash gaps at the configured cadence.
pub fn run_exact_pg(game: &TabularMarkovGame, init: &JointPolicy, config: &ExactPgConfig) -> Result<LearnTrace> {
    config.validate()?;
    game.check_policy(init)?;
    let cadence = config.cadence.unwrap_or_else(|| default_cadence(game));
    let mut trace = LearnTrace::new();
    let mut policy = init.clone();
    for t in 1..=config.iterations {
        let profile = evaluate(game, &policy)?;
        if should_record(t, config.iterations, cadence) {
            let gaps = nash_gap_with_profile(game, &policy, &profile)?;
            trace.push(TraceRecord { iteration: t, policy: policy.clone(), gaps })?;
        }
        if t < config.iterations {
            policy = step_with_profile(&policy, &profile, config.eta);
        }
    }
    Ok(trace)
}

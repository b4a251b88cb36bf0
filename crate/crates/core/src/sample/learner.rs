//! Independent policy gradient with linear function approximation.
//!
//! Each outer iteration collects `K` rounds from one shared rollout per round,
//! fits a linear critic per player, and takes a projected step onto the
//! `xi`-greedy simplex.

use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::nash_gap;
use crate::game::{JointPolicy, PlayerPolicy, TabularMarkovGame};
use crate::learners::exact::{default_cadence, should_record};
use crate::sample::features::{check_feature_norms, FeatureMap};
use crate::sample::geometric::HorizonSampler;
use crate::sample::regression::{default_weight_bound, spgd_regress, RegressionConfig};
use crate::simplex::project_xi_simplex_into;
use crate::trace::{LearnTrace, TraceRecord};

/// Slack on the regression weight bound accepted by the policy step.
pub const WEIGHT_BOUND_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleTuple {
    pub state: usize,
    pub action: usize,
    /// Undiscounted reward sum over the sampled window.
    pub ret: f64,
}

fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding: fall back to the last positive entry
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

fn rollout_round(
    game: &TabularMarkovGame,
    policy: &JointPolicy,
    sampler: &HorizonSampler,
    rng: &mut ChaCha8Rng,
) -> Vec<SampleTuple> {
    let n = game.num_players();
    let starts: Vec<usize> = (0..n).map(|_| sampler.start(rng)).collect();
    let windows: Vec<usize> = (0..n).map(|_| sampler.window(rng)).collect();
    let horizon = starts.iter().zip(&windows).map(|(h, w)| h + w).max().unwrap_or(0);

    let mut tuples: Vec<SampleTuple> = starts.iter().map(|_| SampleTuple { state: 0, action: 0, ret: 0.0 }).collect();
    let mut actions = vec![0usize; n];
    let mut s = sample_index(game.initial_dist(), rng.random());
    for step in 0..horizon {
        for (i, a) in actions.iter_mut().enumerate() {
            *a = sample_index(policy.player(i).row(s), rng.random());
        }
        let joint = game.joint_index(&actions);
        for i in 0..n {
            if step == starts[i] {
                tuples[i].state = s;
                tuples[i].action = actions[i];
            }
            if step >= starts[i] && step < starts[i] + windows[i] {
                tuples[i].ret += game.reward(i, s, joint);
            }
        }
        s = sample_index(game.transition_row(s, joint), rng.random());
    }
    tuples
}

/// Draws `rounds` rollouts under `policy`; returns tuples indexed `[player][round]`.
///
/// One base seed is drawn from `rng`; round `k` uses its own ChaCha stream,
/// so the result does not depend on the number of worker threads.
pub fn collect_batch<R: Rng + ?Sized>(
    game: &TabularMarkovGame,
    policy: &JointPolicy,
    rounds: usize,
    rng: &mut R,
) -> Result<Vec<Vec<SampleTuple>>> {
    game.check_policy(policy)?;
    let sampler = HorizonSampler::new(game.discount())?;
    let base = rng.next_u64();
    let per_round: Vec<Vec<SampleTuple>> = (0..rounds)
        .into_par_iter()
        .map(|k| {
            let mut round_rng = ChaCha8Rng::seed_from_u64(base);
            round_rng.set_stream(k as u64);
            rollout_round(game, policy, &sampler, &mut round_rng)
        })
        .collect();
    let mut by_player = vec![Vec::with_capacity(rounds); game.num_players()];
    for round in per_round {
        for (i, tuple) in round.into_iter().enumerate() {
            by_player[i].push(tuple);
        }
    }
    Ok(by_player)
}

/// Fits player `player`'s critic weights from its tuples.
pub fn regress_player<R: Rng + ?Sized>(
    samples: &[SampleTuple],
    player: usize,
    features: &dyn FeatureMap,
    config: &RegressionConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let phis: Vec<Vec<f64>> = samples.iter().map(|t| features.features(player, t.state, t.action)).collect();
    let targets: Vec<f64> = samples.iter().map(|t| t.ret).collect();
    spgd_regress(&phis, &targets, config, rng)
}

/// `Proj_{Delta_xi}(pi_i(.|s) + eta * <phi_i(s, .), w_i>)` for one player and state.
pub fn sample_pg_row(
    policy: &PlayerPolicy,
    player: usize,
    state: usize,
    weights: &[f64],
    features: &dyn FeatureMap,
    eta: f64,
    xi: f64,
) -> Vec<f64> {
    let ascent: Vec<f64> = policy
        .row(state)
        .iter()
        .enumerate()
        .map(|(a, p)| p + eta * features.dot(player, state, a, weights))
        .collect();
    let mut out = vec![0.0; ascent.len()];
    project_xi_simplex_into(&ascent, xi, &mut out);
    out
}

/// Policy update from fitted weights, one vector per player.
pub fn step_sample_pg(
    game: &TabularMarkovGame,
    policy: &JointPolicy,
    weights: &[Vec<f64>],
    features: &dyn FeatureMap,
    weight_bound: f64,
    eta: f64,
    xi: f64,
) -> Result<JointPolicy> {
    game.check_policy(policy)?;
    if weights.len() != game.num_players() {
        return Err(Error::dim(format!("{} weight vectors for {} players", weights.len(), game.num_players())));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::arg(format!("stepsize must be nonnegative and finite, got {eta}")));
    }
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::arg(format!("exploration rate must lie in [0, 1], got {xi}")));
    }
    for (i, w) in weights.iter().enumerate() {
        if w.len() != features.dim() {
            return Err(Error::dim(format!("player {i} weights have length {}, expected {}", w.len(), features.dim())));
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > weight_bound + WEIGHT_BOUND_TOL {
            return Err(Error::arg(format!("player {i} weight norm {norm} exceeds bound {weight_bound}")));
        }
    }
    let (ns, na) = (game.num_states(), game.num_actions());
    let players = (0..game.num_players())
        .map(|i| {
            let probs: Vec<f64> = (0..ns)
                .flat_map(|s| sample_pg_row(policy.player(i), i, s, &weights[i], features, eta, xi))
                .collect();
            PlayerPolicy::from_vec_unchecked(ns, na, probs)
        })
        .collect();
    JointPolicy::new(players)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePgConfig {
    pub iterations: usize,
    /// Rounds `K` per iteration.
    pub batch: usize,
    pub eta: f64,
    /// Exploration rate `xi` in `(0, 1]`.
    pub xi: f64,
    pub seed: u64,
    /// `None` uses `sqrt(d) / (1 - gamma)`.
    pub weight_bound: Option<f64>,
    /// `None` uses `K` gradient steps.
    pub inner_steps: Option<usize>,
    pub cadence: Option<usize>,
}

impl SamplePgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::arg("T must be >= 1"));
        }
        if self.batch == 0 {
            return Err(Error::arg("batch size K must be >= 1"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::arg(format!("stepsize must be positive, got {}", self.eta)));
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(Error::arg(format!("exploration rate must lie in (0, 1], got {}", self.xi)));
        }
        if self.cadence == Some(0) {
            return Err(Error::arg("cadence must be >= 1"));
        }
        if let Some(w) = self.weight_bound {
            RegressionConfig::new(w)?;
        }
        Ok(())
    }
}

/// `min((kappa^2 N A d / ((1-gamma)^4 K))^{1/3}, 1/2)`.
pub fn default_exploration(kappa: f64, num_players: usize, num_actions: usize, dim: usize, discount: f64, batch: usize) -> f64 {
    let num = kappa * kappa * (num_players * num_actions * dim) as f64;
    let den = (1.0 - discount).powi(4) * batch as f64;
    (num / den).cbrt().min(0.5)
}

/// `(1-gamma) / (W N A sqrt(T))`, the identical-reward regime.
pub fn sample_stepsize_cooperative(game: &TabularMarkovGame, weight_bound: f64, iterations: usize) -> f64 {
    (1.0 - game.discount())
        / (weight_bound * (game.num_players() * game.num_actions()) as f64 * (iterations as f64).sqrt())
}

/// `(1-gamma)^{3/2} / (W N sqrt(A T))`, the potential-game regime.
pub fn sample_stepsize_potential(game: &TabularMarkovGame, weight_bound: f64, iterations: usize) -> f64 {
    (1.0 - game.discount()).powf(1.5)
        / (weight_bound * game.num_players() as f64 * ((game.num_actions() * iterations) as f64).sqrt())
}

/// Runs the sample-based learner from the uniform policy. Exact Nash gaps
/// are evaluated for the trace only; the learner never sees them. When
/// `sink` is given, every tuple is written as `round,player,state,action,return`.
pub fn run_sample_pg(
    game: &TabularMarkovGame,
    features: &dyn FeatureMap,
    config: &SamplePgConfig,
    mut sink: Option<&mut dyn Write>,
) -> Result<LearnTrace> {
    config.validate()?;
    check_feature_norms(features, game)?;
    let weight_bound = config.weight_bound.unwrap_or_else(|| default_weight_bound(features.dim(), game.discount()));
    let regression = RegressionConfig { weight_bound, inner_steps: config.inner_steps };
    let cadence = config.cadence.unwrap_or_else(|| default_cadence(game));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    if let Some(out) = sink.as_deref_mut() {
        writeln!(out, "round,player,state,action,return")?;
    }

    let mut trace = LearnTrace::new();
    let mut policy = JointPolicy::uniform(game);
    for t in 1..=config.iterations {
        if should_record(t, config.iterations, cadence) {
            let gaps = nash_gap(game, &policy)?;
            trace.push(TraceRecord { iteration: t, policy: policy.clone(), gaps })?;
        }
        if t == config.iterations {
            break;
        }
        let batch = collect_batch(game, &policy, config.batch, &mut rng)?;
        if let Some(out) = sink.as_deref_mut() {
            let offset = (t - 1) * config.batch;
            for k in 0..config.batch {
                for (i, tuples) in batch.iter().enumerate() {
                    let tuple = &tuples[k];
                    writeln!(out, "{},{},{},{},{}", offset + k, i, tuple.state, tuple.action, tuple.ret)?;
                }
            }
        }
        let base = rng.next_u64();
        let weights = batch
            .par_iter()
            .enumerate()
            .map(|(i, tuples)| {
                let mut player_rng = ChaCha8Rng::seed_from_u64(base);
                player_rng.set_stream(i as u64);
                regress_player(tuples, i, features, &regression, &mut player_rng)
            })
            .collect::<Result<Vec<_>>>()?;
        policy = step_sample_pg(game, &policy, &weights, features, weight_bound, config.eta, config.xi)?;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::build_cooperative_random;
    use crate::eval::evaluate;
    use crate::learners::exact::step_exact_pg;
    use crate::sample::features::TabularFeatures;

    #[test]
    fn one_state_one_action_unbiased() {
        // r = 1, gamma = 0.5: Qbar = 2
        let game = TabularMarkovGame::new(1, 1, 1, vec![1.0], vec![1.0], 0.5, vec![1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200_000;
        let batch = collect_batch(&game, &JointPolicy::uniform(&game), n, &mut rng).unwrap();
        let returns: Vec<f64> = batch[0].iter().map(|t| t.ret).collect();
        let mean = returns.iter().sum::<f64>() / n as f64;
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 2.0).abs() < 3.0 * (var / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn zero_discount_single_reward() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        // one player: every window is the single first reward r(s0, a0)
        let game = build_cooperative_random(3, 1, 2, 0.0, &mut rng).unwrap();
        let policy = JointPolicy::uniform(&game);
        let batch = collect_batch(&game, &policy, 100, &mut rng).unwrap();
        for t in &batch[0] {
            assert_eq!(t.ret, game.reward(0, t.state, t.action));
        }
        assert!(collect_batch(&game, &policy, 0, &mut rng).unwrap().iter().all(|v| v.is_empty()));
    }

    #[test]
    fn tabular_weights_match_exact_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let game = build_cooperative_random(3, 2, 3, 0.8, &mut rng).unwrap();
        let policy = JointPolicy::uniform(&game);
        let profile = evaluate(&game, &policy).unwrap();
        let weights: Vec<Vec<f64>> = (0..2).map(|i| profile.averaged_table(i).to_vec()).collect();
        let features = TabularFeatures::for_game(&game);
        let sampled = step_sample_pg(&game, &policy, &weights, &features, 100.0, 0.05, 0.0).unwrap();
        let exact = step_exact_pg(&game, &policy, 0.05).unwrap();
        for i in 0..2 {
            for (a, b) in sampled.player(i).as_slice().iter().zip(exact.player(i).as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(step_sample_pg(&game, &policy, &weights, &features, 0.1, 0.05, 0.0).is_err());
    }

    #[test]
    fn uniform_stays_in_xi_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let game = build_cooperative_random(2, 2, 2, 0.5, &mut rng).unwrap();
        let policy = JointPolicy::uniform(&game);
        let features = TabularFeatures::for_game(&game);
        let weights = vec![vec![0.3, -0.2, 0.9, 0.1]; 2];
        let next = step_sample_pg(&game, &policy, &weights, &features, 10.0, 0.0, 0.5).unwrap();
        assert_eq!(next, policy);
    }

    #[test]
    fn exploration_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let game = build_cooperative_random(3, 2, 4, 0.5, &mut rng).unwrap();
        let policy = JointPolicy::uniform(&game);
        let features = TabularFeatures::for_game(&game);
        for _ in 0..20 {
            let weights: Vec<Vec<f64>> =
                (0..2).map(|_| (0..12).map(|_| rng.random_range(-0.5..0.5)).collect()).collect();
            let next = step_sample_pg(&game, &policy, &weights, &features, 10.0, 5.0, 0.2).unwrap();
            for i in 0..2 {
                assert!(next.player(i).min_prob() >= 0.05 - 1e-10);
            }
        }
    }

    fn small_config(seed: u64) -> SamplePgConfig {
        SamplePgConfig {
            iterations: 5,
            batch: 50,
            eta: 0.05,
            xi: 0.1,
            seed,
            weight_bound: None,
            inner_steps: None,
            cadence: Some(1),
        }
    }

    #[test]
    fn seed_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let game = build_cooperative_random(2, 2, 2, 0.8, &mut rng).unwrap();
        let features = TabularFeatures::for_game(&game);
        let mut a = Vec::new();
        let mut b = Vec::new();
        let ta = run_sample_pg(&game, &features, &small_config(3), Some(&mut a)).unwrap();
        let tb = run_sample_pg(&game, &features, &small_config(3), Some(&mut b)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta.max_gaps(), tb.max_gaps());
        assert_eq!(ta.final_policy(), tb.final_policy());
        let tc = run_sample_pg(&game, &features, &small_config(4), None).unwrap();
        assert_ne!(ta.final_policy(), tc.final_policy());
        // header plus (T - 1) * K * N rows
        assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 4 * 50 * 2);
    }

    #[test]
    fn single_iteration_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let game = build_cooperative_random(2, 2, 2, 0.8, &mut rng).unwrap();
        let mut config = small_config(1);
        config.iterations = 1;
        config.batch = 1;
        let trace = run_sample_pg(&game, &TabularFeatures::for_game(&game), &config, None).unwrap();
        assert_eq!(trace.len(), 1);
        config.xi = 0.0;
        assert!(run_sample_pg(&game, &TabularFeatures::for_game(&game), &config, None).is_err());
    }

    #[test]
    fn exploration_default() {
        assert_eq!(default_exploration(1.0, 2, 2, 4, 0.9, 2000), 0.5);
        let xi = default_exploration(1.0, 1, 2, 1, 0.0, 16_000);
        assert!((xi - 0.05).abs() < 1e-12);
    }
}

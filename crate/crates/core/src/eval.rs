//! Exact evaluation: values, averaged action-values, discounted visitation,
//! best responses and Nash gaps.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{JointPolicy, PlayerPolicy, TabularMarkovGame};

/// Largest state count solved by dense LU; above it a truncated Neumann series is used.
pub const DIRECT_SOLVE_MAX_STATES: usize = 2000;

/// Stopping tolerance on the a-posteriori bound `gamma * residual / (1 - gamma)`.
pub const BEST_RESPONSE_TOL: f64 = 1e-9;

const NEUMANN_TOL: f64 = 1e-10;

/// Product weights `prod_k pi_k(a_k | s)` over joint actions at state `s`.
/// The `skip` player contributes a factor of one, which yields `pi_{-i}(a_{-i} | s)`.
pub fn joint_weights(policy: &JointPolicy, s: usize, skip: Option<usize>) -> Vec<f64> {
    let num_actions = policy.player(0).num_actions();
    let mut weights = vec![1.0];
    for (k, player) in policy.players().iter().enumerate() {
        let row = player.row(s);
        let len = weights.len();
        let mut next = Vec::with_capacity(len * num_actions);
        for &p in row {
            let factor = if skip == Some(k) { 1.0 } else { p };
            next.extend(weights.iter().map(|w| w * factor));
        }
        debug_assert_eq!(next.len(), len * num_actions);
        weights = next;
    }
    weights
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum SolveMethod {
    Direct,
    Neumann,
}

impl SolveMethod {
    fn for_states(n: usize) -> Self {
        if n <= DIRECT_SOLVE_MAX_STATES {
            SolveMethod::Direct
        } else {
            SolveMethod::Neumann
        }
    }
}

/// Solves `(I - gamma P) X = B`, or `(I - gamma P)^T X = B` when `transpose`.
pub(crate) fn discounted_solve(
    p: &DMatrix<f64>,
    gamma: f64,
    rhs: &DMatrix<f64>,
    transpose: bool,
    method: SolveMethod,
) -> Result<DMatrix<f64>> {
    let n = p.nrows();
    match method {
        SolveMethod::Direct => {
            let mut m = DMatrix::identity(n, n) - p * gamma;
            if transpose {
                m.transpose_mut();
            }
            m.lu().solve(rhs).ok_or(Error::Singular)
        }
        SolveMethod::Neumann => {
            if gamma >= 1.0 {
                return Err(Error::Singular);
            }
            let op = if transpose { p.transpose() } else { p.clone() };
            let mut x = rhs.clone();
            loop {
                let next = rhs + &op * &x * gamma;
                let diff = (&next - &x).amax();
                x = next;
                if diff <= NEUMANN_TOL {
                    break;
                }
            }
            Ok(x)
        }
    }
}

/// `P_pi(s, s') = sum_a pi(a | s) P(s' | s, a)`.
pub fn policy_transition_matrix(game: &TabularMarkovGame, policy: &JointPolicy) -> DMatrix<f64> {
    let n = game.num_states();
    let mut p = DMatrix::zeros(n, n);
    for s in 0..n {
        let weights = joint_weights(policy, s, None);
        for (joint, w) in weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            for (s2, prob) in game.transition_row(s, joint).iter().enumerate() {
                p[(s, s2)] += w * prob;
            }
        }
    }
    p
}

/// Exact `V_i`, `Q_i` and averaged `Q_i` for every player under one joint policy.
#[derive(Clone, Debug)]
pub struct ValueProfile {
    num_states: usize,
    num_actions: usize,
    num_joint: usize,
    values: Vec<Vec<f64>>,
    action_values: Vec<Vec<f64>>,
    averaged: Vec<Vec<f64>>,
}

impl ValueProfile {
    pub fn num_players(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, player: usize, s: usize) -> f64 {
        self.values[player][s]
    }

    pub fn values(&self, player: usize) -> &[f64] {
        &self.values[player]
    }

    /// `V_i(mu) = sum_s mu(s) V_i(s)`.
    pub fn value_at(&self, player: usize, mu: &[f64]) -> f64 {
        self.values[player].iter().zip(mu).map(|(v, m)| v * m).sum()
    }

    pub fn action_value(&self, player: usize, s: usize, joint: usize) -> f64 {
        self.action_values[player][s * self.num_joint + joint]
    }

    pub fn averaged_q(&self, player: usize, s: usize, action: usize) -> f64 {
        self.averaged[player][s * self.num_actions + action]
    }

    /// `Qbar_i(s, .)` over player `i`'s own actions.
    pub fn averaged_row(&self, player: usize, s: usize) -> &[f64] {
        &self.averaged[player][s * self.num_actions..(s + 1) * self.num_actions]
    }

    /// Flattened `Qbar_i` laid out `[s][a]`.
    pub fn averaged_table(&self, player: usize) -> &[f64] {
        &self.averaged[player]
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }
}

pub fn evaluate(game: &TabularMarkovGame, policy: &JointPolicy) -> Result<ValueProfile> {
    evaluate_with(game, policy, SolveMethod::for_states(game.num_states()))
}

pub(crate) fn evaluate_with(game: &TabularMarkovGame, policy: &JointPolicy, method: SolveMethod) -> Result<ValueProfile> {
    game.check_policy(policy)?;
    let n = game.num_states();
    let np = game.num_players();
    let nj = game.num_joint_actions();
    let na = game.num_actions();
    let gamma = game.discount();

    let weights: Vec<Vec<f64>> = (0..n).map(|s| joint_weights(policy, s, None)).collect();
    let tensor = game.transition_tensor();
    let mut p_pi = DMatrix::zeros(n, n);
    let mut r_pi = DMatrix::zeros(n, np);
    for s in 0..n {
        let w = &weights[s];
        let mut row = vec![0.0; n];
        for (probs, &wj) in tensor[s * nj * n..(s + 1) * nj * n].chunks_exact(n).zip(w) {
            for (acc, p) in row.iter_mut().zip(probs) {
                *acc += wj * p;
            }
        }
        for (s2, x) in row.into_iter().enumerate() {
            p_pi[(s, s2)] = x;
        }
        for i in 0..np {
            r_pi[(s, i)] = game.reward_row(i, s).iter().zip(w).map(|(r, w)| r * w).sum::<f64>();
        }
    }
    let v = discounted_solve(&p_pi, gamma, &r_pi, false, method)?;
    let values: Vec<Vec<f64>> = (0..np).map(|i| (0..n).map(|s| v[(s, i)]).collect()).collect();

    // Q_i(s, joint) = r_i(s, joint) + gamma * sum_s' P(s'|s, joint) V_i(s')
    let action_values: Vec<Vec<f64>> = (0..np)
        .into_par_iter()
        .map(|i| {
            let vi = &values[i];
            let mut q = Vec::with_capacity(n * nj);
            for s in 0..n {
                let block = &tensor[s * nj * n..(s + 1) * nj * n];
                q.extend(game.reward_row(i, s).iter().zip(block.chunks_exact(n)).map(|(r, probs)| {
                    r + gamma * probs.iter().zip(vi).map(|(p, v)| p * v).sum::<f64>()
                }));
            }
            q
        })
        .collect();

    let averaged: Vec<Vec<f64>> = (0..np)
        .into_par_iter()
        .map(|i| {
            let mut qbar = vec![0.0; n * na];
            for s in 0..n {
                let others = joint_weights(policy, s, Some(i));
                let q = &action_values[i][s * nj..(s + 1) * nj];
                game.for_each_action_run(i, |a, run| {
                    qbar[s * na + a] += others[run.clone()].iter().zip(&q[run]).map(|(w, q)| w * q).sum::<f64>();
                });
            }
            qbar
        })
        .collect();
    Ok(ValueProfile { num_states: n, num_actions: na, num_joint: nj, values, action_values, averaged })
}
/// Max-norm Bellman residual `|Q_i - r_i - gamma P V_i|` over all players,
/// states and joint actions.
pub fn bellman_residual(game: &TabularMarkovGame, profile: &ValueProfile) -> f64 {
    let gamma = game.discount();
    let mut worst: f64 = 0.0;
    for i in 0..game.num_players() {
        for s in 0..game.num_states() {
            for joint in 0..game.num_joint_actions() {
                let next: f64 = game.transition_row(s, joint).iter().zip(profile.values(i)).map(|(p, v)| p * v).sum();
                let res = profile.action_value(i, s, joint) - game.reward(i, s, joint) - gamma * next;
                worst = worst.max(res.abs());
            }
        }
    }
    worst
}

/// Discounted state visitation `d_mu^pi` together with the `mu` it started from.
#[derive(Clone, Debug, PartialEq)]
pub struct VisitationDistribution {
    dist: Vec<f64>,
    mu: Vec<f64>,
}

impl VisitationDistribution {
    pub fn as_slice(&self) -> &[f64] {
        &self.dist
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }
}

/// `d = (1 - gamma) mu^T (I - gamma P_pi)^{-1}`, renormalized.
pub fn visitation(game: &TabularMarkovGame, policy: &JointPolicy, mu: &[f64]) -> Result<VisitationDistribution> {
    game.check_policy(policy)?;
    game.check_distribution(mu)?;
    let p = policy_transition_matrix(game, policy);
    visitation_from_matrix(&p, game.discount(), mu)
}

pub(crate) fn visitation_from_matrix(p: &DMatrix<f64>, gamma: f64, mu: &[f64]) -> Result<VisitationDistribution> {
    let n = p.nrows();
    let rhs = DMatrix::from_column_slice(n, 1, mu);
    let x = discounted_solve(p, gamma, &rhs, true, SolveMethod::for_states(n))?;
    let mut dist: Vec<f64> = x.iter().map(|v| ((1.0 - gamma) * v).max(0.0)).collect();
    let total: f64 = dist.iter().sum();
    dist.iter_mut().for_each(|d| *d /= total);
    Ok(VisitationDistribution { dist, mu: mu.to_vec() })
}

/// Single-agent MDP faced by one player when the others are fixed.
pub(crate) struct MarginalMdp {
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    /// `[s][a]`
    rewards: Vec<f64>,
    /// `[s][a][s']`
    transition: Vec<f64>,
}

impl MarginalMdp {
    pub(crate) fn new(game: &TabularMarkovGame, policy: &JointPolicy, player: usize) -> Self {
        let n = game.num_states();
        let na = game.num_actions();
        let mut rewards = vec![0.0; n * na];
        let nj = game.num_joint_actions();
        let tensor = game.transition_tensor();
        let mut transition = vec![0.0; n * na * n];
        for s in 0..n {
            let others = joint_weights(policy, s, Some(player));
            let r = game.reward_row(player, s);
            game.for_each_action_run(player, |a, run| {
                let base = (s * na + a) * n;
                let out = &mut transition[base..base + n];
                let block = &tensor[(s * nj + run.start) * n..(s * nj + run.end) * n];
                for (probs, &w) in block.chunks_exact(n).zip(&others[run.clone()]) {
                    for (acc, p) in out.iter_mut().zip(probs) {
                        *acc += w * p;
                    }
                }
                rewards[s * na + a] += others[run.clone()].iter().zip(&r[run]).map(|(w, r)| w * r).sum::<f64>();
            });
        }
        Self { num_states: n, num_actions: na, gamma: game.discount(), rewards, transition }
    }

    fn backup(&self, s: usize, a: usize, values: &[f64]) -> f64 {
        let base = (s * self.num_actions + a) * self.num_states;
        let next: f64 = self.transition[base..base + self.num_states].iter().zip(values).map(|(p, v)| p * v).sum();
        self.rewards[s * self.num_actions + a] + self.gamma * next
    }

    /// Greedy action with ties broken toward the lowest index.
    fn greedy(&self, s: usize, values: &[f64]) -> (usize, f64) {
        let mut best = (0, self.backup(s, 0, values));
        for a in 1..self.num_actions {
            let q = self.backup(s, a, values);
            if q > best.1 {
                best = (a, q);
            }
        }
        best
    }

    /// Value iteration from zero until `gamma * ||V_{k+1} - V_k|| / (1 - gamma) <= tol`.
    pub(crate) fn value_iteration(&self, tol: f64) -> Vec<f64> {
        let mut values = vec![0.0; self.num_states];
        if self.gamma == 0.0 {
            return (0..self.num_states).map(|s| self.greedy(s, &values).1).collect();
        }
        let scale = self.gamma / (1.0 - self.gamma);
        // Contraction guarantees termination; the cap only guards against
        // a residual that stalls at floating-point resolution.
        let cap = ((tol / (scale * 2.0 / (1.0 - self.gamma))).ln() / self.gamma.ln()).ceil().max(0.0) as usize + 100;
        for _ in 0..cap {
            let next: Vec<f64> = (0..self.num_states).map(|s| self.greedy(s, &values).1).collect();
            let residual = next.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            values = next;
            if scale * residual <= tol {
                return values;
            }
        }
        log::warn!("value iteration hit its iteration cap before reaching tolerance {tol}");
        values
    }

    pub(crate) fn greedy_policy(&self, values: &[f64]) -> Vec<usize> {
        (0..self.num_states).map(|s| self.greedy(s, values).0).collect()
    }

    /// Exact state values of a deterministic policy.
    pub(crate) fn evaluate_deterministic(&self, actions: &[usize]) -> Result<Vec<f64>> {
        let n = self.num_states;
        let mut p = DMatrix::zeros(n, n);
        let mut r = DMatrix::zeros(n, 1);
        for s in 0..n {
            let base = (s * self.num_actions + actions[s]) * n;
            for s2 in 0..n {
                p[(s, s2)] = self.transition[base + s2];
            }
            r[(s, 0)] = self.rewards[s * self.num_actions + actions[s]];
        }
        let v = discounted_solve(&p, self.gamma, &r, false, SolveMethod::for_states(n))?;
        Ok(v.iter().copied().collect())
    }
}

/// Optimal response of one player against the others' fixed policies.
#[derive(Clone, Debug)]
pub struct BestResponse {
    /// `max_{pi_i'} V_i^{pi_i', pi_{-i}}(rho)`.
    pub value: f64,
    pub policy: PlayerPolicy,
    pub state_values: Vec<f64>,
}

/// Solves the marginal MDP by value iteration, then reports the exact value
/// of the greedy policy so the result is the value of an actual policy.
pub fn best_response(game: &TabularMarkovGame, policy: &JointPolicy, player: usize) -> Result<BestResponse> {
    game.check_policy(policy)?;
    if player >= game.num_players() {
        return Err(Error::arg(format!("player {player} out of range for {} players", game.num_players())));
    }
    let mdp = MarginalMdp::new(game, policy, player);
    let approx = mdp.value_iteration(BEST_RESPONSE_TOL);
    let actions = mdp.greedy_policy(&approx);
    let state_values = mdp.evaluate_deterministic(&actions)?;
    let value = state_values.iter().zip(game.initial_dist()).map(|(v, r)| v * r).sum();
    Ok(BestResponse { value, policy: PlayerPolicy::deterministic(&actions, game.num_actions())?, state_values })
}

/// Per-player best-response gaps at the initial distribution.
#[derive(Clone, Debug)]
pub struct NashGapReport {
    pub per_player_gap: Vec<f64>,
    pub max_gap: f64,
    pub best_response_policies: Vec<PlayerPolicy>,
    /// `V_i^pi(rho)` for each player.
    pub values_at_rho: Vec<f64>,
}

pub fn nash_gap(game: &TabularMarkovGame, policy: &JointPolicy) -> Result<NashGapReport> {
    let profile = evaluate(game, policy)?;
    nash_gap_with_profile(game, policy, &profile)
}

/// As [`nash_gap`], reusing an already computed profile of `policy`.
pub fn nash_gap_with_profile(
    game: &TabularMarkovGame,
    policy: &JointPolicy,
    profile: &ValueProfile,
) -> Result<NashGapReport> {
    let rho = game.initial_dist();
    let responses: Vec<BestResponse> =
        (0..game.num_players()).into_par_iter().map(|i| best_response(game, policy, i)).collect::<Result<_>>()?;
    let values_at_rho: Vec<f64> = (0..game.num_players()).map(|i| profile.value_at(i, rho)).collect();
    let per_player_gap: Vec<f64> = responses.iter().zip(&values_at_rho).map(|(br, v)| br.value - v).collect();
    let max_gap = per_player_gap.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(NashGapReport {
        per_player_gap,
        max_gap,
        best_response_policies: responses.into_iter().map(|br| br.policy).collect(),
        values_at_rho,
    })
}

/// Default enumeration budget for [`estimate_kappa`].
pub const KAPPA_DEFAULT_BUDGET: u128 = 200_000;

/// Distribution mismatch `max_pi ||d_mu^pi / mu||_inf`, estimated over all
/// deterministic joint policies. This is an estimate of the supremum over
/// stochastic policies, not a certified value.
pub fn estimate_kappa(game: &TabularMarkovGame, mu: &[f64], budget: u128) -> Result<f64> {
    game.check_distribution(mu)?;
    if let Some(s) = mu.iter().position(|m| *m <= 0.0) {
        return Err(Error::arg(format!("mu({s}) must be positive to estimate kappa")));
    }
    let n = game.num_states();
    let nj = game.num_joint_actions();
    let count = (nj as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > budget {
        return Err(Error::BudgetExceeded { count, budget });
    }
    let mut choice = vec![0usize; n];
    let mut kappa: f64 = 0.0;
    let mut p = DMatrix::zeros(n, n);
    loop {
        for s in 0..n {
            for (s2, prob) in game.transition_row(s, choice[s]).iter().enumerate() {
                p[(s, s2)] = *prob;
            }
        }
        let d = visitation_from_matrix(&p, game.discount(), mu)?;
        let ratio = d.as_slice().iter().zip(mu).map(|(d, m)| d / m).fold(0.0, f64::max);
        kappa = kappa.max(ratio);

        // odometer over per-state joint actions
        let mut s = 0;
        loop {
            if s == n {
                return Ok(kappa);
            }
            choice[s] += 1;
            if choice[s] < nj {
                break;
            }
            choice[s] = 0;
            s += 1;
        }
    }
}

/// Visitation-weighted helper used by oracles: `sum_s d(s) <f(s, .), g(s, .)>`.
pub(crate) fn weighted_inner(dist: &[f64], num_actions: usize, f: &[f64], g: &[f64]) -> f64 {
    dist.iter()
        .enumerate()
        .map(|(s, d)| {
            let row = s * num_actions..(s + 1) * num_actions;
            d * f[row.clone()].iter().zip(&g[row]).map(|(a, b)| a * b).sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{build_cooperative_random, build_matrix_game, MatrixGameMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(r: f64, gamma: f64) -> TabularMarkovGame {
        TabularMarkovGame::new(1, 1, 1, vec![1.0], vec![r], gamma, vec![1.0]).unwrap()
    }

    /// s0 -> s1 -> s1 deterministic, rewards (0, 1).
    fn chain(gamma: f64) -> TabularMarkovGame {
        TabularMarkovGame::new(1, 2, 1, vec![0.0, 1.0, 0.0, 1.0], vec![0.0, 1.0], gamma, vec![1.0, 0.0]).unwrap()
    }

    fn random_policy(game: &TabularMarkovGame, rng: &mut impl Rng) -> JointPolicy {
        let players = (0..game.num_players())
            .map(|_| {
                let rows: Vec<Vec<f64>> = (0..game.num_states())
                    .map(|_| {
                        let raw: Vec<f64> = (0..game.num_actions()).map(|_| rng.random::<f64>() + 1e-3).collect();
                        let t: f64 = raw.iter().sum();
                        raw.iter().map(|x| x / t).collect()
                    })
                    .collect();
                PlayerPolicy::from_rows(&rows).unwrap()
            })
            .collect();
        JointPolicy::new(players).unwrap()
    }

    #[test]
    fn geometric_series_single_state() {
        let game = single(1.0, 0.5);
        let profile = evaluate(&game, &JointPolicy::uniform(&game)).unwrap();
        assert!((profile.value(0, 0) - 2.0).abs() < 1e-12);
        assert!((profile.action_value(0, 0, 0) - 2.0).abs() < 1e-12);
        assert!((profile.averaged_q(0, 0, 0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_opponent_marginalization() {
        let game = TabularMarkovGame::new(2, 1, 1, vec![1.0], vec![0.3, 0.7], 0.5, vec![1.0]).unwrap();
        let profile = evaluate(&game, &JointPolicy::uniform(&game)).unwrap();
        for i in 0..2 {
            assert_eq!(profile.averaged_q(i, 0, 0), profile.action_value(i, 0, 0));
        }
    }

    #[test]
    fn deterministic_chain_matches_rollout() {
        let gamma = 0.9;
        let profile = evaluate(&chain(gamma), &JointPolicy::uniform(&chain(gamma))).unwrap();
        // truncated rollout oracle: rewards 0, 1, 1, ...
        let rollout = |start_reward_zero: bool| -> f64 {
            (0..10_000)
                .map(|t| {
                    let r = if start_reward_zero && t == 0 { 0.0 } else { 1.0 };
                    gamma.powi(t) * r
                })
                .sum()
        };
        assert!((profile.value(0, 0) - 9.0).abs() < 1e-10);
        assert!((profile.value(0, 1) - 10.0).abs() < 1e-10);
        assert!((profile.value(0, 0) - rollout(true)).abs() < 1e-9);
        assert!((profile.value(0, 1) - rollout(false)).abs() < 1e-9);
    }

    #[test]
    fn neumann_agrees_with_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let game = build_cooperative_random(4, 2, 2, 0.9, &mut rng).unwrap();
        let policy = random_policy(&game, &mut rng);
        let a = evaluate_with(&game, &policy, SolveMethod::Direct).unwrap();
        let b = evaluate_with(&game, &policy, SolveMethod::Neumann).unwrap();
        for s in 0..4 {
            assert!((a.value(0, s) - b.value(0, s)).abs() < 1e-8);
        }
    }

    #[test]
    fn profile_invariants_on_random_games() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let (s, n, a) = (rng.random_range(1..=3), rng.random_range(1..=3), rng.random_range(1..=3));
            let gamma = if rng.random::<bool>() { 0.5 } else { 0.9 };
            let game = build_cooperative_random(s, n, a, gamma, &mut rng).unwrap();
            let policy = random_policy(&game, &mut rng);
            let profile = evaluate(&game, &policy).unwrap();
            assert!(bellman_residual(&game, &profile) <= 1e-8);
            let bound = 1.0 / (1.0 - gamma) + 1e-9;
            for i in 0..n {
                for st in 0..s {
                    let w = joint_weights(&policy, st, None);
                    let v: f64 = (0..game.num_joint_actions()).map(|j| w[j] * profile.action_value(i, st, j)).sum();
                    assert!((v - profile.value(i, st)).abs() <= 1e-8);
                    assert!((-1e-9..=bound).contains(&profile.value(i, st)));
                    for act in 0..a {
                        assert!((-1e-9..=bound).contains(&profile.averaged_q(i, st, act)));
                    }
                }
            }
        }
    }

    #[test]
    fn visitation_examples() {
        let game = single(0.5, 0.7);
        let d = visitation(&game, &JointPolicy::uniform(&game), &[1.0]).unwrap();
        assert!((d.as_slice()[0] - 1.0).abs() < 1e-15);

        // identity dynamics: chain never moves
        let stay = TabularMarkovGame::new(1, 3, 1, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.], vec![0.0; 3], 0.8, vec![1.0; 3].iter().map(|x| x / 3.0).collect()).unwrap();
        let mu = [0.2, 0.5, 0.3];
        let d = visitation(&stay, &JointPolicy::uniform(&stay), &mu).unwrap();
        for (x, y) in d.as_slice().iter().zip(&mu) {
            assert!((x - y).abs() < 1e-12);
        }

        // swap chain, mu = (1, 0), gamma = 0.5: d = (2/3, 1/3)
        let swap = TabularMarkovGame::new(1, 2, 1, vec![0.0, 1.0, 1.0, 0.0], vec![0.0; 2], 0.5, vec![1.0, 0.0]).unwrap();
        let d = visitation(&swap, &JointPolicy::uniform(&swap), &[1.0, 0.0]).unwrap();
        // truncated power-series oracle
        let mut series = [0.0, 0.0];
        let mut occ = [1.0, 0.0];
        for t in 0..200 {
            let w = (1.0 - 0.5) * 0.5f64.powi(t);
            series[0] += w * occ[0];
            series[1] += w * occ[1];
            occ = [occ[1], occ[0]];
        }
        assert!((d.as_slice()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((d.as_slice()[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((series[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn visitation_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let game = build_cooperative_random(3, 2, 2, 0.9, &mut rng).unwrap();
            let policy = random_policy(&game, &mut rng);
            let raw: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let mu: Vec<f64> = raw.iter().map(|x| x / raw.iter().sum::<f64>()).collect();
            let d = visitation(&game, &policy, &mu).unwrap();
            assert!((d.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-10);
            for (x, m) in d.as_slice().iter().zip(&mu) {
                assert!(*x >= (1.0 - 0.9) * m - 1e-10);
            }
        }
    }

    #[test]
    fn one_state_best_response_is_best_row() {
        // player 0 faces opponent mixing (0.25, 0.75)
        let payoff = vec![vec![0.2, 0.6], vec![0.9, 0.1]];
        let game = build_matrix_game(&payoff, MatrixGameMode::Cooperative, 0.5).unwrap();
        let policy = JointPolicy::new(vec![
            PlayerPolicy::uniform(1, 2),
            PlayerPolicy::from_rows(&[vec![0.25, 0.75]]).unwrap(),
        ])
        .unwrap();
        let br = best_response(&game, &policy, 0).unwrap();
        let row0: f64 = 0.25 * 0.2 + 0.75 * 0.6;
        let row1 = 0.25 * 0.9 + 0.75 * 0.1;
        assert!((br.value - row0.max(row1) / 0.5).abs() < 1e-10);
        assert_eq!(br.policy.row(0), &[1.0, 0.0]);
    }

    #[test]
    fn best_response_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let game = build_cooperative_random(3, 1, 2, 0.9, &mut rng).unwrap();
            let policy = JointPolicy::uniform(&game);
            let br = best_response(&game, &policy, 0).unwrap();
            let mut best = f64::NEG_INFINITY;
            for code in 0..8usize {
                let actions: Vec<usize> = (0..3).map(|s| (code >> s) & 1).collect();
                let pol = JointPolicy::new(vec![PlayerPolicy::deterministic(&actions, 2).unwrap()]).unwrap();
                let v = evaluate(&game, &pol).unwrap().value_at(0, game.initial_dist());
                best = best.max(v);
            }
            assert!((br.value - best).abs() < 1e-8, "{} vs {best}", br.value);
        }
    }

    #[test]
    fn best_responding_player_has_zero_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let game = build_cooperative_random(3, 2, 2, 0.9, &mut rng).unwrap();
        let policy = random_policy(&game, &mut rng);
        let br = best_response(&game, &policy, 1).unwrap();
        let responded = policy.with_player(1, br.policy.clone()).unwrap();
        let again = best_response(&game, &responded, 1).unwrap();
        let v = evaluate(&game, &responded).unwrap().value_at(1, game.initial_dist());
        assert!((again.value - v).abs() < 1e-8);
        assert!((br.value - v).abs() < 1e-8);
    }

    #[test]
    fn best_response_dominates_random_policies() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..30 {
            let game = build_cooperative_random(3, 2, 3, 0.9, &mut rng).unwrap();
            let policy = random_policy(&game, &mut rng);
            let report = nash_gap(&game, &policy).unwrap();
            assert!(report.per_player_gap.iter().all(|g| *g >= -1e-8));
        }
    }

    #[test]
    fn gap_zero_at_cooperative_optimum() {
        let payoff = vec![vec![0.1, 0.3], vec![0.2, 0.95]];
        let game = build_matrix_game(&payoff, MatrixGameMode::Cooperative, 0.9).unwrap();
        let vertex = PlayerPolicy::deterministic(&[1], 2).unwrap();
        let policy = JointPolicy::new(vec![vertex.clone(), vertex]).unwrap();
        let report = nash_gap(&game, &policy).unwrap();
        assert!(report.per_player_gap.iter().all(|g| g.abs() < 1e-10));
    }

    #[test]
    fn dominant_action_gap() {
        // prisoners-dilemma-like payoffs in [0, 1]; action 1 strictly dominant
        // for both players with advantage 0.2 against any opponent action.
        let gamma = 0.5;
        let r1 = [[0.6, 0.0], [0.8, 0.2]]; // r1[a1][a2]
        let mut rewards = vec![0.0; 8];
        for a1 in 0..2 {
            for a2 in 0..2 {
                rewards[a1 + 2 * a2] = r1[a1][a2];
                rewards[4 + a1 + 2 * a2] = r1[a2][a1];
            }
        }
        let game = TabularMarkovGame::new(2, 1, 2, vec![1.0; 4], rewards, gamma, vec![1.0]).unwrap();
        let report = nash_gap(&game, &JointPolicy::uniform(&game)).unwrap();
        // uniform gives each player half the advantage: 0.5 * 0.2 / (1 - gamma)
        for g in &report.per_player_gap {
            assert!((g - 0.1 / (1.0 - gamma)).abs() < 1e-10, "{g}");
        }
    }

    #[test]
    fn kappa_examples() {
        let game = single(0.5, 0.9);
        assert!((estimate_kappa(&game, &[1.0], KAPPA_DEFAULT_BUDGET).unwrap() - 1.0).abs() < 1e-12);

        // action-independent transitions, mu stationary => kappa = 1
        let row = [0.3, 0.7];
        let t: Vec<f64> = (0..2 * 2).flat_map(|_| row).collect();
        let game = TabularMarkovGame::new(1, 2, 2, t, vec![0.0; 4], 0.9, vec![0.3, 0.7]).unwrap();
        let k = estimate_kappa(&game, &[0.3, 0.7], KAPPA_DEFAULT_BUDGET).unwrap();
        assert!((k - 1.0).abs() < 1e-12, "{k}");
    }

    #[test]
    fn kappa_matches_enumeration_and_dominates_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let game = build_cooperative_random(2, 1, 2, 0.8, &mut rng).unwrap();
        let mu = [0.4, 0.6];
        let k = estimate_kappa(&game, &mu, KAPPA_DEFAULT_BUDGET).unwrap();
        let mut brute: f64 = 0.0;
        for code in 0..4usize {
            let actions = [code & 1, code >> 1];
            let pol = JointPolicy::new(vec![PlayerPolicy::deterministic(&actions, 2).unwrap()]).unwrap();
            let d = visitation(&game, &pol, &mu).unwrap();
            brute = brute.max(d.as_slice().iter().zip(&mu).map(|(d, m)| d / m).fold(0.0, f64::max));
        }
        assert!((k - brute).abs() < 1e-12);
        for _ in 0..200 {
            let pol = random_policy(&game, &mut rng);
            let d = visitation(&game, &pol, &mu).unwrap();
            let ratio = d.as_slice().iter().zip(&mu).map(|(d, m)| d / m).fold(0.0, f64::max);
            assert!(ratio <= k + 1e-12);
        }
    }

    #[test]
    fn kappa_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let game = build_cooperative_random(3, 3, 3, 0.9, &mut rng).unwrap();
        match estimate_kappa(&game, &[1.0 / 3.0; 3], 1000) {
            Err(Error::BudgetExceeded { count, .. }) => assert_eq!(count, 27u128.pow(3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(estimate_kappa(&game, &[0.5, 0.5, 0.0], u128::MAX).is_err());
    }
}

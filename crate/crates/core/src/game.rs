//! Tabular Markov games and joint policies.
//!
//! Joint actions are encoded as base-`A` integers with player 0 as the
//! least-significant digit: `joint = a_0 + A * a_1 + A^2 * a_2 + ...`.
//! Every module relies on this layout.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

/// Tolerance within which a probability row is renormalized instead of rejected.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// Rows within this of summing to one are accepted unchanged.
const EXACT_SUM_TOL: f64 = 1e-12;

/// A finite-horizon-free, discounted Markov game with `N` players sharing an
/// action count `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMarkovGame {
    num_players: usize,
    num_states: usize,
    num_actions: usize,
    num_joint: usize,
    /// Layout `[s][joint][s']`.
    transition: Vec<f64>,
    /// Layout `[player][s][joint]`.
    rewards: Vec<f64>,
    discount: f64,
    initial_dist: Vec<f64>,
    powers: Vec<usize>,
}

/// Number of joint actions `A^N`, or an error on overflow.
pub fn joint_action_count(num_players: usize, num_actions: usize) -> Result<usize> {
    (0..num_players).try_fold(1usize, |acc, _| acc.checked_mul(num_actions)).ok_or_else(|| {
        Error::arg(format!("{num_actions}^{num_players} joint actions overflows usize"))
    })
}

fn normalize_row(row: &mut [f64], what: impl Fn() -> String) -> Result<()> {
    for (k, p) in row.iter_mut().enumerate() {
        if !p.is_finite() || *p < 0.0 {
            if p.is_finite() && *p > -1e-12 {
                *p = 0.0;
            } else {
                return Err(Error::InvalidGame(format!("{} entry {k} is {p}", what())));
            }
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > RENORMALIZE_TOL {
        return Err(Error::InvalidGame(format!("{} sums to {sum}, expected 1", what())));
    }
    // rounding-level deviations are kept so stored rows load back bit-exact
    if (sum - 1.0).abs() > EXACT_SUM_TOL {
        row.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(())
}

impl TabularMarkovGame {
    /// Validates all invariants and renormalizes probability rows that are
    /// within [`RENORMALIZE_TOL`] of summing to one.
    pub fn new(
        num_players: usize,
        num_states: usize,
        num_actions: usize,
        mut transition: Vec<f64>,
        rewards: Vec<f64>,
        discount: f64,
        mut initial_dist: Vec<f64>,
    ) -> Result<Self> {
        if num_players == 0 || num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidGame(format!(
                "sizes must be positive (players={num_players}, states={num_states}, actions={num_actions})"
            )));
        }
        let num_joint = joint_action_count(num_players, num_actions)?;
        let expected_t = num_states * num_joint * num_states;
        if transition.len() != expected_t {
            return Err(Error::dim(format!(
                "transition has {} entries, expected {expected_t}",
                transition.len()
            )));
        }
        let expected_r = num_players * num_states * num_joint;
        if rewards.len() != expected_r {
            return Err(Error::dim(format!("rewards have {} entries, expected {expected_r}", rewards.len())));
        }
        if initial_dist.len() != num_states {
            return Err(Error::dim(format!(
                "initial distribution has {} entries, expected {num_states}",
                initial_dist.len()
            )));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidGame(format!("discount {discount} outside [0, 1)")));
        }
        for s in 0..num_states {
            for a in 0..num_joint {
                let start = (s * num_joint + a) * num_states;
                normalize_row(&mut transition[start..start + num_states], || {
                    format!("transition row (state {s}, joint action {a})")
                })?;
            }
        }
        for (idx, r) in rewards.iter().enumerate() {
            if !(0.0..=1.0).contains(r) {
                let player = idx / (num_states * num_joint);
                let s = (idx / num_joint) % num_states;
                let a = idx % num_joint;
                return Err(Error::InvalidGame(format!(
                    "reward (player {player}, state {s}, joint action {a}) = {r} outside [0, 1]"
                )));
            }
        }
        normalize_row(&mut initial_dist, || "initial distribution".to_string())?;
        let powers = (0..num_players).map(|k| num_actions.pow(k as u32)).collect();
        Ok(Self {
            num_players,
            num_states,
            num_actions,
            num_joint,
            transition,
            rewards,
            discount,
            initial_dist,
            powers,
        })
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_joint_actions(&self) -> usize {
        self.num_joint
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    /// Next-state distribution `P(. | s, joint)`.
    pub fn transition_row(&self, s: usize, joint: usize) -> &[f64] {
        let start = (s * self.num_joint + joint) * self.num_states;
        &self.transition[start..start + self.num_states]
    }

    pub fn reward(&self, player: usize, s: usize, joint: usize) -> f64 {
        self.rewards[(player * self.num_states + s) * self.num_joint + joint]
    }

    /// Whole transition tensor, layout `[s][joint][s']`.
    pub(crate) fn transition_tensor(&self) -> &[f64] {
        &self.transition
    }

    /// Rewards of `player` at state `s`, indexed by joint action.
    pub fn reward_row(&self, player: usize, s: usize) -> &[f64] {
        let start = (player * self.num_states + s) * self.num_joint;
        &self.rewards[start..start + self.num_joint]
    }

    pub fn joint_index(&self, actions: &[usize]) -> usize {
        debug_assert_eq!(actions.len(), self.num_players);
        actions.iter().zip(&self.powers).map(|(a, p)| a * p).sum()
    }

    /// Action of `player` inside the encoded joint action.
    pub fn action_of(&self, joint: usize, player: usize) -> usize {
        (joint / self.powers[player]) % self.num_actions
    }

    /// Joint actions sharing `player`'s action come in contiguous runs of
    /// `A^player`; calls `f(action, run)` for every run in increasing order.
    pub fn for_each_action_run(&self, player: usize, mut f: impl FnMut(usize, std::ops::Range<usize>)) {
        let stride = self.powers[player];
        let block = stride * self.num_actions;
        for base in (0..self.num_joint).step_by(block) {
            for a in 0..self.num_actions {
                let start = base + a * stride;
                f(a, start..start + stride);
            }
        }
    }

    pub fn decode_joint(&self, joint: usize) -> Vec<usize> {
        (0..self.num_players).map(|k| self.action_of(joint, k)).collect()
    }

    /// True when every player receives the same reward tensor.
    pub fn is_identical_reward(&self) -> bool {
        let block = self.num_states * self.num_joint;
        let first = &self.rewards[..block];
        (1..self.num_players).all(|i| &self.rewards[i * block..(i + 1) * block] == first)
    }

    /// Same game with a different initial distribution.
    pub fn with_initial_dist(&self, mut initial_dist: Vec<f64>) -> Result<Self> {
        if initial_dist.len() != self.num_states {
            return Err(Error::dim(format!(
                "initial distribution has length {}, expected {}",
                initial_dist.len(),
                self.num_states
            )));
        }
        normalize_row(&mut initial_dist, || "initial distribution".to_string())?;
        Ok(Self { initial_dist, ..self.clone() })
    }

    /// Checks that `policy` matches this game's shape.
    pub fn check_policy(&self, policy: &JointPolicy) -> Result<()> {
        if policy.num_players() != self.num_players {
            return Err(Error::dim(format!(
                "policy has {} players, game has {}",
                policy.num_players(),
                self.num_players
            )));
        }
        for (i, p) in policy.players().iter().enumerate() {
            self.check_player_policy(p).map_err(|e| match e {
                Error::Dimension(m) => Error::dim(format!("player {i}: {m}")),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn check_player_policy(&self, policy: &PlayerPolicy) -> Result<()> {
        if policy.num_states() != self.num_states || policy.num_actions() != self.num_actions {
            return Err(Error::dim(format!(
                "policy shape {}x{}, game expects {}x{}",
                policy.num_states(),
                policy.num_actions(),
                self.num_states,
                self.num_actions
            )));
        }
        Ok(())
    }

    pub fn check_distribution(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.num_states {
            return Err(Error::dim(format!("distribution has {} entries, game has {} states", mu.len(), self.num_states)));
        }
        let sum: f64 = mu.iter().sum();
        if mu.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::arg(format!("state distribution is not a probability vector (sum {sum})")));
        }
        Ok(())
    }
}

/// One player's stationary policy: an `S x A` row-stochastic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayerPolicy {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl PlayerPolicy {
    /// Validates rows; rows within [`RENORMALIZE_TOL`] of one are renormalized.
    pub fn new(num_states: usize, num_actions: usize, mut probs: Vec<f64>) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidPolicy("policy must have at least one state and action".into()));
        }
        if probs.len() != num_states * num_actions {
            return Err(Error::dim(format!(
                "policy has {} entries, expected {}",
                probs.len(),
                num_states * num_actions
            )));
        }
        for s in 0..num_states {
            normalize_row(&mut probs[s * num_actions..(s + 1) * num_actions], || format!("policy row {s}"))
                .map_err(|e| match e {
                    Error::InvalidGame(m) => Error::InvalidPolicy(m),
                    other => other,
                })?;
        }
        Ok(Self { num_states, num_actions, probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_actions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_actions) {
            return Err(Error::dim("policy rows have different lengths"));
        }
        Self::new(rows.len(), num_actions, rows.concat())
    }

    /// Rows must already be valid distributions; used on projection output.
    pub(crate) fn from_vec_unchecked(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), num_states * num_actions);
        Self { num_states, num_actions, probs }
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self::from_vec_unchecked(num_states, num_actions, vec![1.0 / num_actions as f64; num_states * num_actions])
    }

    /// Rows drawn uniformly from the simplex (Dirichlet(1)).
    pub fn random<R: Rng + ?Sized>(num_states: usize, num_actions: usize, rng: &mut R) -> Self {
        let mut probs = Vec::with_capacity(num_states * num_actions);
        for _ in 0..num_states {
            let row: Vec<f64> = (0..num_actions).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = row.iter().sum();
            probs.extend(row.iter().map(|x| x / total));
        }
        Self::from_vec_unchecked(num_states, num_actions, probs)
    }

    /// Deterministic policy playing `actions[s]` at state `s`.
    pub fn deterministic(actions: &[usize], num_actions: usize) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * num_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= num_actions {
                return Err(Error::InvalidPolicy(format!("action {a} at state {s} out of range")));
            }
            probs[s * num_actions + a] = 1.0;
        }
        Ok(Self::from_vec_unchecked(actions.len(), num_actions, probs))
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.num_actions + a]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.num_actions)
    }

    /// Entrywise L1 distance summed over all states.
    pub fn l1_distance(&self, other: &PlayerPolicy) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Product policy `pi = (pi_1, ..., pi_N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPolicy {
    players: Vec<PlayerPolicy>,
}

impl JointPolicy {
    pub fn new(players: Vec<PlayerPolicy>) -> Result<Self> {
        let first = players.first().ok_or_else(|| Error::InvalidPolicy("joint policy needs a player".into()))?;
        let shape = (first.num_states, first.num_actions);
        if players.iter().any(|p| (p.num_states, p.num_actions) != shape) {
            return Err(Error::dim("players' policies have different shapes"));
        }
        Ok(Self { players })
    }

    /// Independent [`PlayerPolicy::random`] draws, in player order.
    pub fn random<R: Rng + ?Sized>(game: &TabularMarkovGame, rng: &mut R) -> Self {
        Self {
            players: (0..game.num_players())
                .map(|_| PlayerPolicy::random(game.num_states(), game.num_actions(), rng))
                .collect(),
        }
    }

    /// Uniform policy for every player, the standard initialization.
    pub fn uniform(game: &TabularMarkovGame) -> Self {
        Self {
            players: (0..game.num_players())
                .map(|_| PlayerPolicy::uniform(game.num_states(), game.num_actions()))
                .collect(),
        }
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn players(&self) -> &[PlayerPolicy] {
        &self.players
    }

    pub fn player(&self, i: usize) -> &PlayerPolicy {
        &self.players[i]
    }

    /// Copy with player `i`'s policy replaced.
    pub fn with_player(&self, i: usize, policy: PlayerPolicy) -> Result<Self> {
        if i >= self.players.len() {
            return Err(Error::arg(format!("player {i} out of range")));
        }
        let mut players = self.players.clone();
        players[i] = policy;
        Self::new(players)
    }

    /// `(1/N) sum_i ||pi_i - other_i||_1`, each norm taken over all states and actions.
    pub fn mean_l1_distance(&self, other: &JointPolicy) -> f64 {
        let total: f64 = self.players.iter().zip(&other.players).map(|(a, b)| a.l1_distance(b)).sum();
        total / self.players.len() as f64
    }

    pub fn into_players(self) -> Vec<PlayerPolicy> {
        self.players
    }
}

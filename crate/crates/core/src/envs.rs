//! Constructive game families: a two-state congestion game, random
//! identical-reward games, and one-state matrix games.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::game::TabularMarkovGame;

pub const SAFE: usize = 0;
pub const DISTANCING: usize = 1;

/// Two-state congestion game. Each state is a congestion game with
/// positive externalities; crowding more than half of the players onto one
/// action moves the system to the penalized `DISTANCING` state.
#[derive(Clone, Debug, PartialEq)]
pub struct CongestionSpec {
    pub num_players: usize,
    /// Action weights in the safe state, strictly increasing.
    pub safe_weights: Vec<f64>,
    /// Action weights in the distancing state, strictly increasing.
    pub distancing_weights: Vec<f64>,
    /// Penalty subtracted from every distancing reward. `None` uses half
    /// of the largest raw distancing reward.
    pub penalty: Option<f64>,
    pub discount: f64,
    /// `None` means uniform over the two states.
    pub initial_dist: Option<Vec<f64>>,
}

impl Default for CongestionSpec {
    fn default() -> Self {
        Self {
            num_players: 8,
            safe_weights: vec![1.0, 2.0, 4.0, 6.0],
            distancing_weights: vec![0.5, 1.0, 2.0, 3.0],
            penalty: None,
            discount: 0.99,
            initial_dist: None,
        }
    }
}

impl CongestionSpec {
    fn raw_distancing_max(&self) -> f64 {
        self.distancing_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max) * self.num_players as f64
    }

    pub fn effective_penalty(&self) -> f64 {
        self.penalty.unwrap_or_else(|| 0.5 * self.raw_distancing_max())
    }

    fn validate(&self) -> Result<()> {
        if self.num_players == 0 {
            return Err(Error::arg("congestion game needs at least one player"));
        }
        let na = self.safe_weights.len();
        if na == 0 || self.distancing_weights.len() != na {
            return Err(Error::arg("safe and distancing weights must be nonempty and of equal length"));
        }
        for (name, w) in [("safe", &self.safe_weights), ("distancing", &self.distancing_weights)] {
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::arg(format!("{name} weights must be finite")));
            }
            if let Some(k) = w.windows(2).position(|p| p[0] >= p[1]) {
                return Err(Error::arg(format!(
                    "{name} weights must be strictly increasing (index {k}: {} >= {})",
                    w[k],
                    w[k + 1]
                )));
            }
        }
        let c = self.effective_penalty();
        if !(c > 0.0) {
            return Err(Error::arg(format!("distancing penalty must be positive, got {c}")));
        }
        if c > self.raw_distancing_max() {
            return Err(Error::arg(format!(
                "distancing penalty {c} exceeds the largest raw distancing reward {}",
                self.raw_distancing_max()
            )));
        }
        Ok(())
    }
}

/// Raw reward `w_s^a * count(a)`, minus the penalty in the distancing state.
fn congestion_raw_reward(spec: &CongestionSpec, penalty: f64, s: usize, action: usize, count: usize) -> f64 {
    let w = if s == SAFE { &spec.safe_weights } else { &spec.distancing_weights };
    let base = w[action] * count as f64;
    if s == DISTANCING {
        base - penalty
    } else {
        base
    }
}

pub fn build_congestion(spec: &CongestionSpec) -> Result<TabularMarkovGame> {
    spec.validate()?;
    let n = spec.num_players;
    let na = spec.safe_weights.len();
    let num_joint = crate::game::joint_action_count(n, na)?;
    let penalty = spec.effective_penalty();
    let num_states = 2;

    let mut raw = vec![0.0; n * num_states * num_joint];
    let mut transition = vec![0.0; num_states * num_joint * num_states];
    let mut counts = vec![0usize; na];
    let mut actions = vec![0usize; n];
    for joint in 0..num_joint {
        let mut rest = joint;
        counts.iter_mut().for_each(|c| *c = 0);
        for a in actions.iter_mut() {
            *a = rest % na;
            rest /= na;
            counts[*a] += 1;
        }
        let crowded = counts.iter().any(|&c| 2 * c > n);
        let next = if crowded { DISTANCING } else { SAFE };
        for s in 0..num_states {
            transition[(s * num_joint + joint) * num_states + next] = 1.0;
            for (i, &a) in actions.iter().enumerate() {
                raw[(i * num_states + s) * num_joint + joint] = congestion_raw_reward(spec, penalty, s, a, counts[a]);
            }
        }
    }

    let lo = raw.iter().copied().fold(0.0, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rewards = raw.iter().map(|r| ((r - lo) / (hi - lo)).clamp(0.0, 1.0)).collect();
    let rho = spec.initial_dist.clone().unwrap_or_else(|| vec![0.5, 0.5]);
    TabularMarkovGame::new(n, num_states, na, transition, rewards, spec.discount, rho)
}

/// Random identical-reward game: Dirichlet(1) transition rows, uniform
/// rewards in `[0, 1]` shared by every player, uniform initial distribution.
pub fn build_cooperative_random<R: Rng + ?Sized>(
    num_states: usize,
    num_players: usize,
    num_actions: usize,
    discount: f64,
    rng: &mut R,
) -> Result<TabularMarkovGame> {
    if num_states == 0 || num_players == 0 || num_actions == 0 {
        return Err(Error::arg("game sizes must be positive"));
    }
    let num_joint = crate::game::joint_action_count(num_players, num_actions)?;
    let mut transition = Vec::with_capacity(num_states * num_joint * num_states);
    for _ in 0..num_states * num_joint {
        let row: Vec<f64> = (0..num_states).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = row.iter().sum();
        transition.extend(row.iter().map(|x: &f64| x / total));
    }
    let shared: Vec<f64> = (0..num_states * num_joint).map(|_| rng.random::<f64>()).collect();
    let rewards = shared.repeat(num_players);
    TabularMarkovGame::new(
        num_players,
        num_states,
        num_actions,
        transition,
        rewards,
        discount,
        vec![1.0 / num_states as f64; num_states],
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixGameMode {
    /// Both players receive the payoff.
    Cooperative,
    /// Row player receives the payoff, column player `1 - payoff`.
    ZeroSum,
}

/// Embeds an `A x A` payoff matrix (rows: player 0) as a one-state Markov game.
pub fn build_matrix_game(payoff: &[Vec<f64>], mode: MatrixGameMode, discount: f64) -> Result<TabularMarkovGame> {
    let na = payoff.len();
    if na == 0 || payoff.iter().any(|row| row.len() != na) {
        return Err(Error::arg("payoff must be a nonempty square matrix"));
    }
    for (a1, row) in payoff.iter().enumerate() {
        for (a2, v) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::arg(format!("payoff[{a1}][{a2}] = {v} outside [0, 1]")));
            }
        }
    }
    let num_joint = na * na;
    let mut rewards = vec![0.0; 2 * num_joint];
    for a1 in 0..na {
        for a2 in 0..na {
            let joint = a1 + na * a2;
            let v = payoff[a1][a2];
            rewards[joint] = v;
            rewards[num_joint + joint] = match mode {
                MatrixGameMode::Cooperative => v,
                MatrixGameMode::ZeroSum => 1.0 - v,
            };
        }
    }
    TabularMarkovGame::new(2, 1, na, vec![1.0; num_joint], rewards, discount, vec![1.0])
}

/// Matching pennies with payoffs mapped into `[0, 1]`: the row player wins on a match.
pub fn matching_pennies() -> Vec<Vec<f64>> {
    vec![vec![1.0, 0.0], vec![0.0, 1.0]]
}

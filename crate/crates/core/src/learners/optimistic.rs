//! Two-player independent optimistic gradient ascent with a smoothed value
//! critic. Per state, each player takes two proximal steps (an intermediate
//! "bar" iterate, then the played iterate) against the critic's matrix.

use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::eval::nash_gap;
use crate::game::{JointPolicy, PlayerPolicy, TabularMarkovGame};
use crate::learners::exact::{default_cadence, should_record};
use crate::simplex::project_simplex_into;
use crate::trace::{LearnTrace, TraceRecord};

const REWARD_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimisticMode {
    /// Identical rewards, both players ascend.
    Cooperative,
    /// `r_0 + r_1` constant; player 1 descends on player 0's reward.
    ZeroSum,
}

impl FromStr for OptimisticMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cooperative" => Ok(Self::Cooperative),
            "zero_sum" | "zero-sum" => Ok(Self::ZeroSum),
            other => Err(Error::arg(format!("unknown mode '{other}' (expected cooperative or zero_sum)"))),
        }
    }
}

impl fmt::Display for OptimisticMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Cooperative => "cooperative",
            Self::ZeroSum => "zero_sum",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CriticSchedule {
    /// `alpha_t = alpha` with `alpha` in `(0, 1/6)`.
    Constant(f64),
    /// `alpha_t = (H + 1) / (6 (H + t))`.
    Decaying { horizon: f64 },
}

impl CriticSchedule {
    /// Decaying schedule with `H = ceil(1 / (1 - gamma))`.
    pub fn decaying_for(discount: f64) -> Self {
        // the slack keeps 1 / (1 - 0.9) from rounding up to 11
        Self::Decaying { horizon: (1.0 / (1.0 - discount) - 1e-9).ceil() }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant(alpha) if !(alpha > 0.0 && alpha < 1.0 / 6.0) => {
                Err(Error::arg(format!("critic rate must lie in (0, 1/6), got {alpha}")))
            }
            Self::Decaying { horizon } if !(horizon >= 0.0 && horizon.is_finite()) => {
                Err(Error::arg(format!("critic horizon must be finite and >= 0, got {horizon}")))
            }
            _ => Ok(()),
        }
    }

    /// Rate at 1-based step `t`.
    pub fn rate(&self, t: usize) -> f64 {
        match *self {
            Self::Constant(alpha) => alpha,
            Self::Decaying { horizon } => (horizon + 1.0) / (6.0 * (horizon + t as f64)),
        }
    }

    /// Rate used to build the default stepsize `(1-gamma)^2 alpha / (32 sqrt(S A))`.
    pub fn reference_rate(&self) -> f64 {
        self.rate(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimisticConfig {
    pub eta: f64,
    pub schedule: CriticSchedule,
    pub mode: OptimisticMode,
    pub iterations: usize,
    pub cadence: Option<usize>,
}

impl OptimisticConfig {
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
        self.schedule.validate()
    }
}

/// `(1-gamma)^2 alpha / (32 sqrt(S A))`.
pub fn optimistic_stepsize(game: &TabularMarkovGame, alpha: f64) -> f64 {
    let gap = 1.0 - game.discount();
    gap * gap * alpha / (32.0 * ((game.num_states() * game.num_actions()) as f64).sqrt())
}

/// Per-state iterates `x, x_bar, y, y_bar` (row-major `S x A`) and critic values.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimisticState {
    num_actions: usize,
    x: Vec<f64>,
    x_bar: Vec<f64>,
    y: Vec<f64>,
    y_bar: Vec<f64>,
    critic: Vec<f64>,
    t: usize,
}

impl OptimisticState {
    /// Uniform iterates and a zero critic.
    pub fn initial(game: &TabularMarkovGame) -> Self {
        let (s, a) = (game.num_states(), game.num_actions());
        let uniform = vec![1.0 / a as f64; s * a];
        Self {
            num_actions: a,
            x: uniform.clone(),
            x_bar: uniform.clone(),
            y: uniform.clone(),
            y_bar: uniform,
            critic: vec![0.0; s],
            t: 0,
        }
    }

    /// Iterates `x = x_bar` and `y = y_bar` taken from a two-player policy,
    /// with a zero critic.
    pub fn from_policy(game: &TabularMarkovGame, policy: &JointPolicy) -> Result<Self> {
        game.check_policy(policy)?;
        if policy.num_players() != 2 {
            return Err(Error::arg("optimistic learner needs a two-player policy"));
        }
        let x = policy.player(0).as_slice().to_vec();
        let y = policy.player(1).as_slice().to_vec();
        Ok(Self {
            num_actions: game.num_actions(),
            x_bar: x.clone(),
            x,
            y_bar: y.clone(),
            y,
            critic: vec![0.0; game.num_states()],
            t: 0,
        })
    }

    /// Number of completed steps.
    pub fn step_count(&self) -> usize {
        self.t
    }

    pub fn critic(&self) -> &[f64] {
        &self.critic
    }

    pub fn x(&self, s: usize) -> &[f64] {
        self.row(&self.x, s)
    }

    pub fn y(&self, s: usize) -> &[f64] {
        self.row(&self.y, s)
    }

    pub fn x_bar(&self, s: usize) -> &[f64] {
        self.row(&self.x_bar, s)
    }

    pub fn y_bar(&self, s: usize) -> &[f64] {
        self.row(&self.y_bar, s)
    }

    fn row<'a>(&self, v: &'a [f64], s: usize) -> &'a [f64] {
        &v[s * self.num_actions..(s + 1) * self.num_actions]
    }

    /// The played pair `(x, y)` as a joint policy.
    pub fn policy(&self) -> JointPolicy {
        let s = self.critic.len();
        let a = self.num_actions;
        JointPolicy::new(vec![
            PlayerPolicy::from_vec_unchecked(s, a, self.x.clone()),
            PlayerPolicy::from_vec_unchecked(s, a, self.y.clone()),
        ])
        .expect("two players of equal shape")
    }
}

/// Checks the two-player structure required by `mode`.
pub fn check_optimistic_game(game: &TabularMarkovGame, mode: OptimisticMode) -> Result<()> {
    if game.num_players() != 2 {
        return Err(Error::InvalidGame(format!(
            "optimistic learning needs exactly 2 players, got {}",
            game.num_players()
        )));
    }
    match mode {
        OptimisticMode::Cooperative => {
            if !game.is_identical_reward() {
                return Err(Error::InvalidGame("cooperative mode needs identical rewards".into()));
            }
        }
        OptimisticMode::ZeroSum => {
            let c = game.reward(0, 0, 0) + game.reward(1, 0, 0);
            for s in 0..game.num_states() {
                for j in 0..game.num_joint_actions() {
                    let total = game.reward(0, s, j) + game.reward(1, s, j);
                    if (total - c).abs() > REWARD_TOL {
                        return Err(Error::InvalidGame(format!(
                            "zero-sum mode needs constant r_0 + r_1; state {s}, joint action {j} sums to {total}, expected {c}"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_stepsize(game: &TabularMarkovGame, eta: f64) {
    let limit = (1.0 - game.discount()) / (32.0 * (game.num_actions() as f64).sqrt());
    if eta > limit {
        warn!("stepsize {eta} exceeds the convergent range (0, {limit}]");
    }
}

/// One step `t -> t + 1`.
pub fn step_optimistic(
    game: &TabularMarkovGame,
    state: &OptimisticState,
    config: &OptimisticConfig,
) -> Result<OptimisticState> {
    config.validate()?;
    check_optimistic_game(game, config.mode)?;
    if state.critic.len() != game.num_states() || state.num_actions != game.num_actions() {
        return Err(Error::dim(format!(
            "state shaped for {} states x {} actions, game has {} x {}",
            state.critic.len(),
            state.num_actions,
            game.num_states(),
            game.num_actions()
        )));
    }
    check_stepsize(game, config.eta);
    Ok(advance(game, state, config))
}

fn advance(game: &TabularMarkovGame, state: &OptimisticState, config: &OptimisticConfig) -> OptimisticState {
    let a = game.num_actions();
    let gamma = game.discount();
    let eta = config.eta;
    let y_sign = match config.mode {
        OptimisticMode::Cooperative => 1.0,
        OptimisticMode::ZeroSum => -1.0,
    };
    let t = state.t + 1;
    let alpha = config.schedule.rate(t);
    let mut next = state.clone();
    next.t = t;

    let mut q = vec![0.0; a * a];
    let mut gx = vec![0.0; a];
    let mut gy = vec![0.0; a];
    let mut buf = vec![0.0; a];
    for s in 0..game.num_states() {
        // critic matrix q[a1 * A + a2]
        for a1 in 0..a {
            for a2 in 0..a {
                let j = a1 + a * a2;
                let future: f64 = game.transition_row(s, j).iter().zip(&state.critic).map(|(p, v)| p * v).sum();
                q[a1 * a + a2] = game.reward(0, s, j) + gamma * future;
            }
        }
        let (x, y) = (state.x(s), state.y(s));
        for a1 in 0..a {
            gx[a1] = (0..a).map(|a2| q[a1 * a + a2] * y[a2]).sum();
        }
        for a2 in 0..a {
            gy[a2] = y_sign * (0..a).map(|a1| x[a1] * q[a1 * a + a2]).sum::<f64>();
        }
        let value: f64 = (0..a).map(|a1| x[a1] * gx[a1]).sum();
        let range = s * a..(s + 1) * a;

        prox(state.x_bar(s), &gx, eta, &mut buf, &mut next.x_bar[range.clone()]);
        let xb = next.x_bar[range.clone()].to_vec();
        prox(&xb, &gx, eta, &mut buf, &mut next.x[range.clone()]);
        prox(state.y_bar(s), &gy, eta, &mut buf, &mut next.y_bar[range.clone()]);
        let yb = next.y_bar[range.clone()].to_vec();
        prox(&yb, &gy, eta, &mut buf, &mut next.y[range]);

        next.critic[s] = (1.0 - alpha) * state.critic[s] + alpha * value;
    }
    next
}

/// `argmax_z <z, g> - |z - center|^2 / (2 eta)` over the simplex.
fn prox(center: &[f64], grad: &[f64], eta: f64, buf: &mut [f64], out: &mut [f64]) {
    for ((b, c), g) in buf.iter_mut().zip(center).zip(grad) {
        *b = c + eta * g;
    }
    project_simplex_into(buf, out);
}

/// Runs `T` iterates from the uniform initialization, recording the exact
/// Nash gap of the played pair `(x^(t), y^(t))` at the configured cadence.
pub fn run_optimistic(game: &TabularMarkovGame, config: &OptimisticConfig) -> Result<LearnTrace> {
    run_optimistic_from(game, OptimisticState::initial(game), config)
}

/// As [`run_optimistic`], starting from `state`.
pub fn run_optimistic_from(
    game: &TabularMarkovGame,
    mut state: OptimisticState,
    config: &OptimisticConfig,
) -> Result<LearnTrace> {
    config.validate()?;
    check_optimistic_game(game, config.mode)?;
    check_stepsize(game, config.eta);
    if state.critic.len() != game.num_states() || state.num_actions != game.num_actions() {
        return Err(Error::dim("optimistic state does not match the game"));
    }
    let cadence = config.cadence.unwrap_or_else(|| default_cadence(game));
    let mut trace = LearnTrace::new();
    for t in 1..=config.iterations {
        if should_record(t, config.iterations, cadence) {
            let policy = state.policy();
            let gaps = nash_gap(game, &policy)?;
            trace.push(TraceRecord { iteration: t, policy, gaps })?;
        }
        if t < config.iterations {
            state = advance(game, &state, config);
        }
    }
    Ok(trace)
}

//! JSON game and policy files.
//!
//! Games are stored sparsely:
//!
//! ```json
//! {"n_players": 2, "n_states": 1, "n_actions": 2, "gamma": 0.9, "rho": [1.0],
//!  "transitions": [[s, joint, s_next, p], ...],
//!  "rewards": [[player, s, joint, r], ...]}
//! ```
//!
//! Omitted entries are zero. Policies are `{"policies": [[[p, ...], ...], ...]}`
//! indexed `[player][state][action]`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{joint_action_count, JointPolicy, PlayerPolicy, TabularMarkovGame};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    n_players: usize,
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    rho: Vec<f64>,
    transitions: Vec<(usize, usize, usize, f64)>,
    #[serde(default)]
    rewards: Vec<(usize, usize, usize, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    policies: Vec<Vec<Vec<f64>>>,
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

fn fill(table: &mut [f64], seen: &mut [bool], index: usize, value: f64, what: &str) -> Result<()> {
    if seen[index] {
        return Err(Error::Parse(format!("duplicate {what} entry")));
    }
    seen[index] = true;
    table[index] = value;
    Ok(())
}

pub fn game_from_json(text: &str) -> Result<TabularMarkovGame> {
    let file: GameFile = serde_json::from_str(text).map_err(parse_err)?;
    let (n, s, a) = (file.n_players, file.n_states, file.n_actions);
    if n == 0 || s == 0 || a == 0 {
        return Err(Error::Parse("n_players, n_states and n_actions must be positive".into()));
    }
    let nj = joint_action_count(n, a).map_err(|e| Error::Parse(e.to_string()))?;

    let mut transition = vec![0.0; s * nj * s];
    let mut seen = vec![false; transition.len()];
    for (k, &(from, joint, to, p)) in file.transitions.iter().enumerate() {
        if from >= s || joint >= nj || to >= s {
            return Err(Error::Parse(format!("transitions[{k}] = [{from}, {joint}, {to}, {p}] is out of range")));
        }
        fill(&mut transition, &mut seen, (from * nj + joint) * s + to, p, &format!("transitions[{k}]"))?;
    }
    let mut rewards = vec![0.0; n * s * nj];
    let mut seen = vec![false; rewards.len()];
    for (k, &(player, state, joint, r)) in file.rewards.iter().enumerate() {
        if player >= n || state >= s || joint >= nj {
            return Err(Error::Parse(format!("rewards[{k}] = [{player}, {state}, {joint}, {r}] is out of range")));
        }
        fill(&mut rewards, &mut seen, (player * s + state) * nj + joint, r, &format!("rewards[{k}]"))?;
    }
    TabularMarkovGame::new(n, s, a, transition, rewards, file.gamma, file.rho)
}

pub fn game_to_json(game: &TabularMarkovGame) -> String {
    let (s, nj) = (game.num_states(), game.num_joint_actions());
    let mut transitions = Vec::new();
    for from in 0..s {
        for joint in 0..nj {
            for (to, &p) in game.transition_row(from, joint).iter().enumerate() {
                if p != 0.0 {
                    transitions.push((from, joint, to, p));
                }
            }
        }
    }
    let mut rewards = Vec::new();
    for i in 0..game.num_players() {
        for state in 0..s {
            for (joint, &r) in game.reward_row(i, state).iter().enumerate() {
                if r != 0.0 {
                    rewards.push((i, state, joint, r));
                }
            }
        }
    }
    let file = GameFile {
        n_players: game.num_players(),
        n_states: s,
        n_actions: game.num_actions(),
        gamma: game.discount(),
        rho: game.initial_dist().to_vec(),
        transitions,
        rewards,
    };
    serde_json::to_string(&file).expect("game file serializes")
}

pub fn load_game(path: &Path) -> Result<TabularMarkovGame> {
    game_from_json(&fs::read_to_string(path)?)
}

pub fn save_game(game: &TabularMarkovGame, path: &Path) -> Result<()> {
    fs::write(path, game_to_json(game))?;
    Ok(())
}

pub fn policy_from_json(text: &str) -> Result<JointPolicy> {
    let file: PolicyFile = serde_json::from_str(text).map_err(parse_err)?;
    let players = file
        .policies
        .iter()
        .enumerate()
        .map(|(i, rows)| {
            PlayerPolicy::from_rows(rows).map_err(|e| Error::InvalidPolicy(format!("player {i}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    JointPolicy::new(players)
}

pub fn policy_to_json(policy: &JointPolicy) -> String {
    let policies = policy.players().iter().map(|p| p.rows().map(<[f64]>::to_vec).collect()).collect();
    serde_json::to_string(&PolicyFile { policies }).expect("policy file serializes")
}

pub fn load_policy(path: &Path) -> Result<JointPolicy> {
    policy_from_json(&fs::read_to_string(path)?)
}

pub fn save_policy(policy: &JointPolicy, path: &Path) -> Result<()> {
    fs::write(path, policy_to_json(policy))?;
    Ok(())
}

//! Stepsizes prescribed by the Nash-regret bounds.
//!
//! The potential-game formulas need `Phi_max`, which is replaced by its
//! bound `N / (1 - gamma)` for rewards in `[0, 1]`, and the mismatch
//! coefficient, which callers supply as an estimate. Both substitutions make
//! the result conservative.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::game::TabularMarkovGame;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepsizeRule {
    /// `(1-gamma)^{5/2} sqrt(Phi_max) / (N A sqrt(T))`, the `T^{-1/4}` regime.
    PotentialFast,
    /// `(1-gamma)^4 / (8 kappa^3 N A)`, the `T^{-1/2}` regime.
    PotentialTight,
    /// `(1-gamma) / (2 N A)` for identical-reward games.
    Cooperative,
}

impl FromStr for StepsizeRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "potential_fast" => Ok(Self::PotentialFast),
            "potential_tight" => Ok(Self::PotentialTight),
            "cooperative" => Ok(Self::Cooperative),
            other => Err(Error::arg(format!(
                "unknown stepsize rule '{other}' (expected potential_fast, potential_tight or cooperative)"
            ))),
        }
    }
}

impl fmt::Display for StepsizeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PotentialFast => "potential_fast",
            Self::PotentialTight => "potential_tight",
            Self::Cooperative => "cooperative",
        })
    }
}

/// Upper bound `N / (1 - gamma)` on the potential's range.
pub fn potential_bound(game: &TabularMarkovGame) -> f64 {
    game.num_players() as f64 / (1.0 - game.discount())
}

pub fn cooperative_stepsize(game: &TabularMarkovGame) -> f64 {
    (1.0 - game.discount()) / (2.0 * (game.num_players() * game.num_actions()) as f64)
}

pub fn suggest_stepsize(game: &TabularMarkovGame, kappa_hat: f64, rule: StepsizeRule, iterations: usize) -> Result<f64> {
    let n_a = (game.num_players() * game.num_actions()) as f64;
    let gap = 1.0 - game.discount();
    match rule {
        StepsizeRule::PotentialFast => {
            if iterations == 0 {
                return Err(Error::arg("T must be >= 1"));
            }
            Ok(gap.powf(2.5) * potential_bound(game).sqrt() / (n_a * (iterations as f64).sqrt()))
        }
        StepsizeRule::PotentialTight => {
            if !(kappa_hat >= 1.0) {
                return Err(Error::arg(format!("mismatch coefficient must be >= 1, got {kappa_hat}")));
            }
            Ok(gap.powi(4) / (8.0 * kappa_hat.powi(3) * n_a))
        }
        StepsizeRule::Cooperative => Ok(cooperative_stepsize(game)),
    }
}

//! Numerical identities used as test oracles: the per-player performance
//! difference identity and the multivariate difference decomposition.
//! Nothing in the learners branches on these.

use crate::error::{Error, Result};
use crate::eval::{evaluate, visitation, weighted_inner};
use crate::game::{JointPolicy, PlayerPolicy, TabularMarkovGame};

/// `|LHS - RHS|` of the performance difference identity for player `player`:
///
/// `V_i^{hat, -i}(mu) - V_i^{bar, -i}(mu)
///   = 1/(1-gamma) sum_{s,a} d_mu^{hat, -i}(s) (hat - bar)(a|s) Qbar_i^{bar, -i}(s, a)`.
///
/// The entry of `others` at index `player` is ignored.
pub fn performance_difference_residual(
    game: &TabularMarkovGame,
    player: usize,
    policy_hat: &PlayerPolicy,
    policy_bar: &PlayerPolicy,
    others: &JointPolicy,
    mu: &[f64],
) -> Result<f64> {
    game.check_player_policy(policy_hat)?;
    game.check_player_policy(policy_bar)?;
    game.check_distribution(mu)?;
    let joint_hat = others.with_player(player, policy_hat.clone())?;
    let joint_bar = others.with_player(player, policy_bar.clone())?;
    let hat_profile = evaluate(game, &joint_hat)?;
    let bar_profile = evaluate(game, &joint_bar)?;
    let lhs = hat_profile.value_at(player, mu) - bar_profile.value_at(player, mu);

    let d = visitation(game, &joint_hat, mu)?;
    let diff: Vec<f64> = policy_hat.as_slice().iter().zip(policy_bar.as_slice()).map(|(a, b)| a - b).collect();
    let rhs = weighted_inner(d.as_slice(), game.num_actions(), &diff, bar_profile.averaged_table(player))
        / (1.0 - game.discount());
    Ok((lhs - rhs).abs())
}

/// `|LHS - RHS|` of the multivariate difference decomposition on an abstract
/// table `psi` over `{old, new}^N` labels.
///
/// `psi[mask]` is the function value when player `k` uses its new policy iff
/// bit `k` of `mask` is set. The right-hand side is the sum of single-player
/// differences plus, for each pair `i < j`, the second-order difference with
/// players above `j` on their new policies and all others on their old ones.
pub fn decomposition_residual(psi: &[f64], num_players: usize) -> Result<f64> {
    if num_players == 0 || num_players >= usize::BITS as usize {
        return Err(Error::arg(format!("unsupported player count {num_players}")));
    }
    let expected = 1usize << num_players;
    if psi.len() != expected {
        return Err(Error::IncompleteTable { expected, actual: psi.len() });
    }
    let all_new = expected - 1;
    let lhs = psi[all_new] - psi[0];

    let mut rhs: f64 = (0..num_players).map(|i| psi[1 << i] - psi[0]).sum();
    for j in 0..num_players {
        // players strictly after j are on their new policies
        let above = all_new & !((1usize << (j + 1)) - 1);
        for i in 0..j {
            let (bi, bj) = (1usize << i, 1usize << j);
            rhs += psi[above | bi | bj] - psi[above | bj] - psi[above | bi] + psi[above];
        }
    }
    Ok((lhs - rhs).abs())
}

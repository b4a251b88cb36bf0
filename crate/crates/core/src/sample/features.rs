use crate::error::{Error, Result};
use crate::game::TabularMarkovGame;

/// Slack on the unit-norm feature bound.
pub const FEATURE_NORM_TOL: f64 = 1e-9;

/// Per-player feature map `phi_i(s, a_i)` of dimension `d`, with `|phi| <= 1`.
pub trait FeatureMap: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `phi_player(state, action)` into `out` (length `dim()`).
    fn features_into(&self, player: usize, state: usize, action: usize, out: &mut [f64]);

    fn features(&self, player: usize, state: usize, action: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.features_into(player, state, action, &mut out);
        out
    }

    /// `<phi_player(state, action), w>`.
    fn dot(&self, player: usize, state: usize, action: usize, w: &[f64]) -> f64 {
        self.features(player, state, action).iter().zip(w).map(|(a, b)| a * b).sum()
    }
}

/// Indicator features: `d = S * A`, coordinate `s * A + a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TabularFeatures {
    num_states: usize,
    num_actions: usize,
}

impl TabularFeatures {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self { num_states, num_actions }
    }

    pub fn for_game(game: &TabularMarkovGame) -> Self {
        Self::new(game.num_states(), game.num_actions())
    }
}

impl FeatureMap for TabularFeatures {
    fn dim(&self) -> usize {
        self.num_states * self.num_actions
    }

    fn features_into(&self, _player: usize, state: usize, action: usize, out: &mut [f64]) {
        out.fill(0.0);
        out[state * self.num_actions + action] = 1.0;
    }

    fn dot(&self, _player: usize, state: usize, action: usize, w: &[f64]) -> f64 {
        w[state * self.num_actions + action]
    }
}

/// Verifies `|phi_i(s, a)| <= 1` on every player, state and action of `game`.
pub fn check_feature_norms(map: &dyn FeatureMap, game: &TabularMarkovGame) -> Result<()> {
    if map.dim() == 0 {
        return Err(Error::arg("feature dimension must be positive"));
    }
    let mut phi = vec![0.0; map.dim()];
    for i in 0..game.num_players() {
        for s in 0..game.num_states() {
            for a in 0..game.num_actions() {
                map.features_into(i, s, a, &mut phi);
                let norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(norm <= 1.0 + FEATURE_NORM_TOL) {
                    return Err(Error::arg(format!(
                        "feature norm {norm} exceeds 1 at player {i}, state {s}, action {a}"
                    )));
                }
            }
        }
    }
    Ok(())
}

//! Independent policy-gradient learning in tabular Markov potential games,
//! with exact evaluation (values, visitation, best responses, Nash gaps).

pub mod envs;
pub mod error;
pub mod eval;
pub mod game;
pub mod io;
pub mod learners;
pub mod oracles;
pub mod sample;
pub mod selftest;
pub mod simplex;
pub mod trace;

pub use error::{Error, Result};
pub use eval::{
    best_response, estimate_kappa, evaluate, nash_gap, visitation, BestResponse, NashGapReport, ValueProfile,
    VisitationDistribution,
};
pub use game::{JointPolicy, PlayerPolicy, TabularMarkovGame};
pub use simplex::{project_simplex, project_xi_simplex, SimplexPoint, XiSimplexPoint};
pub use trace::{nash_regret, LearnTrace, TraceRecord};

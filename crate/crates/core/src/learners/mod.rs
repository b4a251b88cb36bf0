//! Exact-gradient learners and stepsize rules.

pub mod exact;
pub mod optimistic;
pub mod stepsize;

pub use exact::{default_cadence, run_exact_pg, step_exact_pg, ExactPgConfig};
pub use optimistic::{
    optimistic_stepsize, run_optimistic, run_optimistic_from, step_optimistic, CriticSchedule, OptimisticConfig, OptimisticMode,
    OptimisticState,
};
pub use stepsize::{cooperative_stepsize, potential_bound, suggest_stepsize, StepsizeRule};

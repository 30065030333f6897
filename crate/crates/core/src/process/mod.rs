//! The urn Markov chain.
//!
//! From state `μ`, a step draws `s ~ μ/μ(S)`, evaluates the replacement
//! (`R_s`, or `f(s, u)` with a fresh uniform for random kernels) and moves to
//! `μ + R`. A state of zero mass is absorbing.

mod run;
mod spec;
mod statistic;

pub use run::{
    apply_draw, check_balanced, draw, monte_carlo, par_replicates, run, step, step_traced, Draw,
    RunOptions, Trajectory, UrnState,
};
pub(crate) use run::Recorder;
pub use spec::{Admissibility, UrnSpec};
pub use statistic::Statistic;

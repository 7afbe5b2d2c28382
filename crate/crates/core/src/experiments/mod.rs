//! Monte Carlo harnesses for the theorem-level checks and the statistics
//! behind them.

pub mod report;
pub mod runner;
pub mod stats;
pub mod williams;

pub use report::{Check, Op, Outcome, Provenance, SeedRange, Statistic, Table, TestReport, Verdict};
pub use runner::{AcceptanceFloor, Accepted, Runner};
pub use stats::{dkw_epsilon, ks_one_sample, ks_two_sample, EmpiricalSample, MeanEstimate};
pub use williams::{bes3_pinned_occupation, bes3_total_occupation, williams_and_raylaw_suite, WilliamsParams};
pub mod formulas;
pub use formulas::{identity_time_change_check, qm_formula_check, IdentityParams, QmParams};
pub mod convergence;
pub mod families;
pub use convergence::{converse_tightness_check, convergence_experiment, ConvergenceParams, ConverseParams};
pub mod dichotomy;
pub use dichotomy::{dichotomy_experiment, DichotomyParams, Expectation};
pub mod limit;
pub use limit::{
    clocked_excursion, conditional_limit_experiment, meander_marginals, meander_report, meander_sampler,
    u_of_lambda, ClockTrace, LimitParams, MeanderParams, Reference, Route,
};

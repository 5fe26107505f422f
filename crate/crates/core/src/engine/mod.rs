//! Accelerated dual ascent: the deterministic method, its stochastic-network
//! variant, the momentum-free baseline and the diagnostics that check the
//! convergence inequalities along a run.

mod diagnostics;
mod dual;
mod run;
mod theta;
mod trace;

pub use diagnostics::{
    check_descent_inequality, check_lyapunov_step, check_quadratic_model, lyapunov_value,
    omega, rate_constant,
};
pub use dual::{
    eval_dual, local_gradient, local_multipliers, split_multipliers, stack_multipliers,
    DualEvaluation,
};
pub use run::{run_alg1, run_alg2, run_unaccelerated};
pub use theta::{theta_next, ThetaSequence};
pub use trace::{Algorithm, DualReference, RunOptions, RunTrace, TraceRow};

//! Newton continuation for the radial reduction of the sigma_k equation with a
//! Neumann-type boundary condition on the unit ball.

pub mod continuation;
pub mod newton;
pub mod radial;
pub mod report;

pub use continuation::{
    run_continuation, run_continuation_on, ContinuationOptions, ContinuationReport, ContinuationStep,
};
pub use newton::{newton_solve, NewtonOptions, NewtonRecord};
pub use radial::{
    assemble_residual, fd_jacobian, linearized_operator, radial_hessian_spectrum, zeta, Evaluation, PathKind, PathSpec,
    RadialFn, RadialProblem, Target,
};
pub use report::{
    extremal_diagnostics, manufactured_problem, solve_report, write_profile_csv, write_trace_csv, ExtremalSummary,
    SolveReport,
};

//! Numerical tolerances and default parameters, pinned in one place.

/// Relative scale for cone membership: sigma_i > CONE_TAU * (1 + |lambda|_inf)^i.
pub const CONE_TAU: f64 = 1e-12;

/// Largest Hessian eigenvalue of F still counted as concave.
pub const CONCAVITY_SLACK: f64 = 1e-8;

/// Slack on the epsilon and rho margins of the structure conditions.
pub const STRUCTURE_SLACK: f64 = 1e-8;

/// Retry cap of the rejection sampler for the positive cones.
pub const SAMPLER_RETRIES: usize = 100_000;

/// Sampling box for cone points.
pub const SAMPLER_BOX: (f64, f64) = (-1.0, 2.0);

/// Exact algebraic identities, relative residual.
pub const IDENTITY_REL: f64 = 1e-9;

/// Identities checked through finite differences.
pub const FD_REL: f64 = 1e-6;

/// Finite-difference step used for matrix-entry derivatives.
pub const FD_MATRIX_STEP: f64 = 1e-5;

/// General vs umbilic boundary term agreement.
pub const BK_AGREEMENT: f64 = 1e-10;

/// Relative tolerance of the hemisphere functional against 2 pi^2.
pub const HEMISPHERE_REL: f64 = 1e-3;

/// Allowed ratio of conformal drift to the Richardson error estimate.
pub const DRIFT_FACTOR: f64 = 3.0;

/// Minimal observed convergence order in refinement studies.
pub const MIN_ORDER: f64 = 2.0;

/// Relative residual of the first-variation formula at the finest step.
pub const VARIATION_REL: f64 = 1e-4;

/// Absolute bound on the derivative of the middle-dimension functional.
pub const VARIATION_ABS_CRITICAL: f64 = 1e-4;

/// Steps of the central differences in t.
pub const VARIATION_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Newton tolerance on the max-norm residual.
pub const NEWTON_TOL: f64 = 1e-11;

/// Constant-solution recovery bound.
pub const CONSTANT_SOLUTION_TOL: f64 = 1e-8;

/// Iteration budget for the constant-solution regression.
pub const CONSTANT_SOLUTION_ITERS: usize = 8;

/// Armijo sufficient-decrease constant.
pub const ARMIJO_C: f64 = 1e-4;

/// Smallest damping factor tried by the line search.
pub const MIN_DAMPING: f64 = 1.0 / 1_048_576.0;

/// Continuation step underflow.
pub const MIN_CONTINUATION_STEP: f64 = 1e-6;

/// Default number of radial nodes.
pub const DEFAULT_NODES: usize = 201;

/// Minimal eigenvalue required of the deformed tensor at the start of a path.
pub const THETA_MIN_EIGENVALUE: f64 = 0.1;

/// Jacobian vs finite differences.
pub const JACOBIAN_REL: f64 = 1e-6;

/// Four-dimensional boundary identity between B2 and the Gauss-Bonnet terms.
pub const GB4_IDENTITY: f64 = 1e-8;

/// Weyl norm above which a chart is rejected as not conformally flat.
pub const LCF_WEYL_MAX: f64 = 1e-4;

//! Conformal change machinery and boundary curvature functionals.

pub mod bk;
pub mod deformed;
pub mod gauss_bonnet;
pub mod state;

pub use bk::{
    boundary_b2, boundary_bk, boundary_bk_general, boundary_bk_umbilic, boundary_gb4, c1, c2, check_form_agreement,
    check_vanishing, double_factorial, BkForm, Gb4Terms, VanishingReport,
};
pub use deformed::{deform, deformed_spectrum, deformed_tensor, DeformedTensor};
pub use gauss_bonnet::{gauss_bonnet_integrands, GaussBonnetIntegrands};
pub use state::{
    apply_conformal, functional_fk, functional_fk_once, integrate_boundary, integrate_volume, sample_nodes,
    weighted_fk, BallQuadrature, ConformalState, FunctionalValue, HatBoundary, QuadratureNodes, RadialRule,
};

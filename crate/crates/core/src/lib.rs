//! Discrete choice prox-functions on the probability simplex.
//!
//! The convex conjugate of a GNL surplus function is a strongly convex
//! prox-function on the simplex whose prox-mapping is a choice-probability
//! evaluation. The crate provides the models, the conjugate, curvature
//! certificates, a dual averaging solver and the Lancaster consumption cycle
//! built on top of them. Everything numerical is generic over [`Scalar`]
//! (`f32` or `f64`); the aliases below fix the common `f64` case.

pub mod conjugate;
pub mod dual_averaging;
pub mod error;
pub mod gev;
pub mod hessian;
pub mod io;
pub mod lancaster;
pub mod matrix;
pub mod montecarlo;
pub mod scalar;
pub mod simplex;
pub mod verify;

pub use conjugate::{
    conjugate, conjugate_at_vertex, conjugate_ml, conjugate_nl, conjugate_numeric, prox_center,
    prox_diameter, ConjugateSolution, ProxFunction,
};
pub use dual_averaging::{da_run, empirical_gap, gap_bound, DaState, DualAveraging, GapBoundInputs};
pub use error::{Error, Result};
pub use gev::{GnlModel, IidShockSpec, ModelKind, ModelSpec, NestProbabilities, NestSpec, PodDimension};
pub use hessian::{
    check_class_a, hessian_surplus, norm_inf1_exact, norm_inf1_trace_bound, smoothness_certificate,
    ClassAMatrix, HessianDecomposition, InfOneNorm, SmoothnessCertificate,
};
pub use lancaster::{
    certified_diameter, gap_certificate, run_cycle, CycleRecord, CycleTrace, GapCertificate, InstanceSpec,
    LancasterInstance, OracleOutput,
};
pub use matrix::Matrix;
pub use montecarlo::{
    mc_choice_frequencies, mc_choice_frequencies_gumbel, mc_surplus_ml, sample_gumbel, GumbelSpec, McEstimate,
};
pub use scalar::{Scalar, EULER_GAMMA};
pub use simplex::{SimplexPoint, UtilityVector};

pub type Model = GnlModel<f64>;
pub type Model32 = GnlModel<f32>;
pub type Point = SimplexPoint<f64>;
pub type Point32 = SimplexPoint<f32>;
pub type Prox = ProxFunction<f64>;
pub type Instance = LancasterInstance<f64>;
pub type Trace = CycleTrace<f64>;

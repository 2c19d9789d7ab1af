//! Generalized proximal point iterations for maximal monotone operators.
//!
//! The crate provides:
//!
//! - operators accessed through their resolvents ([`operators`]),
//! - exact and inexact relaxed proximal point drivers ([`engine`]),
//! - the generalized augmented Lagrangian method ([`alm`]) and ADMM ([`admm`]),
//!   each checked against the proximal point iteration on its dual operator,
//! - linear-rate diagnostics ([`rates`]).
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`.

pub mod admm;
pub mod alm;
pub mod engine;
pub mod equivalence;
pub mod error;
pub mod linalg;
pub mod operators;
pub mod rates;
pub mod sampling;
pub mod scalar;

pub use admm::{
    admm_init_from_z, extract_primal_dual, make_dr_splitting_operator, run_generalized_admm,
    verify_admm_dr_correspondence, AdmmConfig, AdmmRecord, AdmmTrace, DouglasRachfordOperator,
    PrimalDualEstimate, SeparableQp, TailRatios,
};
pub use alm::{
    alm_x_subproblem, kkt_residual, make_dual_alm_operator, run_generalized_alm,
    verify_alm_ppa_equivalence, AlmConfig, AlmRecord, AlmTrace, AugmentedSubproblem,
    LinearlyConstrainedQp,
};
pub use engine::{
    run_exact_gppa, run_gppa, run_inexact_gppa, run_inexact_gppa_with, step_exact, step_inexact,
    CSchedule, ControlledPerturbation, DeltaSchedule, GppaConfig, InexactOracle, IterationRecord,
    IterationTrace, Termination,
};
pub use equivalence::EquivalenceReport;
pub use error::{Error, Result};
pub use operators::{
    check_firm_nonexpansive, check_representation_identity, make_affine_operator,
    make_rotation_operator, resolvent, AffineOperator, MonotoneOperator, OperatorHandle,
    RotationOperator,
};
pub use rates::{
    estimate_empirical_rate, estimate_resolvent_lipschitz, superlinear_probe,
    theoretical_exact_rate, theoretical_inexact_factor, tightness_check_rotation, RateReport,
};
pub use sampling::Sampler;
pub use scalar::Scalar;

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;
pub type Rotation = RotationOperator<f64>;
pub type Affine = AffineOperator<f64>;
pub type Config = GppaConfig<f64>;
pub type Trace = IterationTrace<f64>;
pub type Schedule = CSchedule<f64>;
pub type Qp = LinearlyConstrainedQp<f64>;
pub type SplitQp = SeparableQp<f64>;

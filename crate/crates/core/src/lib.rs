//! Dominance and differential dissipativity certificates for nonlinear systems.
//!
//! Jacobian hulls are reduced to vertex families, certified through LMIs
//! solved by an in-house barrier method, composed across feedback
//! interconnections and cross-checked against simulated trajectories.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod dissipativity;
pub mod dominance;
pub mod error;
pub mod interconnect;
pub mod linalg;
pub mod models;
pub mod scalar;
pub mod sdp;

pub use dissipativity::{
    gain_supply, min_gain, passivity_supply, pi_degree, scale_supply, solve_dissipativity, DissipativityCertificate,
    OpenVertex, OpenVertexFamily, SupplyRate,
};
pub use dominance::{
    check_dominance_lti, rate_search, solve_dominance, spectral_scan, DominanceCertificate, Split, SplittingReport,
    VertexFamily,
};
pub use error::{Error, Result};
pub use interconnect::{
    aggregate_certificates, build_closed_loop_family, compose_supplies, feedback_compose, small_gain_check,
    ComposedSupply, SmallGain,
};
pub use linalg::{eig_general, inertia, inertia_of, max_eig_sym, sym_eigen, Inertia, Matrix, Spectrum, SymMatrix};
pub use models::{builtin, AttractorClass, ModelDef, Trajectory};
pub use scalar::Scalar;
pub use sdp::{solve as solve_sdp, verify_solution, SdpProblem, SdpResult, SdpSettings, SdpStatus};

pub type Matrix64 = Matrix<f64>;
pub type SymMatrix64 = SymMatrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type SymMatrix32 = SymMatrix<f32>;
pub type VertexFamily64 = VertexFamily<f64>;
pub type SupplyRate64 = SupplyRate<f64>;
pub type DominanceCertificate64 = DominanceCertificate<f64>;
pub type DissipativityCertificate64 = DissipativityCertificate<f64>;
pub type ModelDef64 = ModelDef<f64>;

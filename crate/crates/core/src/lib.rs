//! Landau-de Gennes Q-tensor equilibria on uniform grids.
//!
//! The crate solves the Euler-Lagrange equations of the one-constant
//! Landau-de Gennes energy, both for the full five-component tensor and for
//! the uniaxial `(s, n)` ansatz, computes the radial hedgehog profile, and
//! audits fields for biaxiality, director constancy and rotational symmetry.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*F64` and
//! `*F32` aliases below fix the scalar.

// NaN must fail the parameter checks, hence `!(x > 0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod bulk;
pub mod el;
pub mod error;
pub mod grid;
pub mod hedgehog;
pub mod io;
pub mod scalar;
pub mod tensor;
pub mod uniaxial;
pub mod util;
pub mod vec3;

pub use audit::{audit_field, AuditOptions, AuditReport};
pub use bulk::{BulkPotential, MaterialParams};
pub use el::{relax, Scheme, SolveOptions, SolveReport};
pub use error::{Error, Result};
pub use grid::{DomainSpec, Field, Grid, NodeClass, QField, ScalarField, Shape, VectorField};
pub use hedgehog::{solve_profile, HedgehogProfile, ProfileMethod};
pub use scalar::Real;
pub use tensor::{Phase, QTensor, Rotation, SpectralData};
pub use uniaxial::{sn_relax, SNField};

pub type QTensorF64 = QTensor<f64>;
pub type QFieldF64 = QField<f64>;
pub type SNFieldF64 = SNField<f64>;
pub type GridF64 = Grid<f64>;
pub type MaterialParamsF64 = MaterialParams<f64>;
pub type SolveOptionsF64 = SolveOptions<f64>;
pub type HedgehogProfileF64 = HedgehogProfile<f64>;

pub type QTensorF32 = QTensor<f32>;
pub type QFieldF32 = QField<f32>;
pub type SNFieldF32 = SNField<f32>;
pub type GridF32 = Grid<f32>;
pub type MaterialParamsF32 = MaterialParams<f32>;
pub type SolveOptionsF32 = SolveOptions<f32>;
pub type HedgehogProfileF32 = HedgehogProfile<f32>;

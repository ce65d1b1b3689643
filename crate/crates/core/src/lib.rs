//! Synthesis and verification of harmonic maps into complex Grassmannians
//! and projective unitary groups from algebro-geometric spectral data.

pub mod config;
pub mod curve;
pub mod error;
pub mod export;
pub mod fixtures;
pub mod genjac;
pub mod laurent;
pub mod linalg;
pub mod report;
pub mod spectral;
pub mod synth;
pub mod theta;
pub mod tol;
pub mod verify;

pub use config::{Engine, RunConfig};
pub use curve::{CurvePoint, CurveSpec, Differential, PeriodData, SpectralCurve};
pub use error::{Error, Result};
pub use genjac::{FlowSpec, GeneralizedLattice};
pub use laurent::LaurentMatrix;
pub use linalg::{C64, CMatrix, CVector};
pub use report::{Check, ValidationReport};
pub use spectral::{SpectralData, Target};
pub use synth::{Domain, ExtendedFrame, KillingField, MapGrid, ProjectionField};
pub use tol::Tolerances;
pub use verify::{AlgebraicTag, AlgebraicType, ResidualReport};

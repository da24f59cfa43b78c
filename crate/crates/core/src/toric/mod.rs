//! Toric test bed: complete simplicial fans in rank 2 and 3, graded sheaf
//! cohomology of invariant divisors, and Hirzebruch–Jung resolution of
//! rank-2 fans.

mod cohomology;
mod fan;
mod resolve;

pub use cohomology::{chi, chi_with_padding, character_box, lattice_point_count, GradedCohomologyReport};
pub use fan::{Fan, FanFile, TorusDivisor};
pub use resolve::{
    export_surface_model, resolve_fan_2d, smooth_gram, sublattice_cover, support_pullback,
    ExportedModel, Resolution, SublatticeCover,
};

use crate::surface::SurfaceError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FanError {
    #[error("NotComplete: {0}")]
    NotComplete(String),
    #[error("NotPrimitive ray {0}")]
    NotPrimitive(usize),
    #[error("NotSimplicial cone {0}")]
    NotSimplicial(usize),
    #[error("DuplicateRay {0}")]
    DuplicateRay(usize),
    #[error("unsupported lattice rank {0}")]
    UnsupportedRank(usize),
    #[error("ray {0} has the wrong dimension")]
    RayDimension(usize),
    #[error("cone refers to missing ray {0}")]
    ConeIndexOutOfRange(usize),
    #[error("NotSmooth")]
    NotSmooth,
    #[error("divisor has {found} coefficients, fan has {expected} rays")]
    DivisorLength { expected: usize, found: usize },
    #[error("fan has {0} rays, at most 64 supported")]
    TooManyRays(usize),
    #[error("cover index must be positive, got {0}")]
    InvalidCoverIndex(i64),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

//! Homogenized plate models for thin periodic composites.
//!
//! The crate computes effective 6x6 plate forms from voxel cell problems,
//! solves the limiting 2D plate equations, checks 3D-to-2D convergence and
//! explores the set of reachable forms.

pub mod algebra;
pub mod cell;
pub mod convergence;
pub mod edges;
pub mod error;
pub mod fem3d;
pub mod gclosure;
pub mod microstructure;
pub mod plate2d;

pub use algebra::{
    GammaTag, HookeTensor3, PhaseLibrary, PhaseModel, PlateForm, PlateStrainPair, Sym2, Sym3, BASIS_TAG,
};
pub use edges::{Edge, EdgeSet};
pub use error::{Error, Result};
pub use microstructure::{Domain, FractionVector, Orientation, VoxelGrid};

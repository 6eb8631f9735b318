//! Toolkit for training reference-tracking control policies under
//! spacetime bounds: per-channel deviation limits that terminate an episode
//! the moment the state leaves a tube around the reference motion. Includes
//! grid reachability analysis for bound feasibility, style rewards, and
//! adaptive initial-state sampling.

pub mod bounds;
pub mod checkpoint;
pub mod dynsys;
pub mod feasible;
pub mod initstate;
pub mod geom;
pub mod nn;
pub mod config;
pub mod reference;
pub mod reference_gen;
pub mod rlcore;
pub mod style;
pub mod svg;
pub mod train;

/// Scalar type used by the trainer and CLI. Math kernels stay generic.
pub type Real = f64;

pub use bounds::{Preset, SpacetimeBoundSet};
pub use dynsys::{SystemKind, SystemSpec, SystemState};
pub use reference::{Phase, ReferenceMotion};

//! Pure algorithms behind the `gtforge` toolkit: rigid geometry, box
//! trajectories, ICP registration, semi-automatic annotation, occupancy
//! ground-truth generation, synthetic scenarios and benchmark scoring.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches the
//! filesystem, threads or the command line lives in the `gtforge` crate.

#![no_std]
#![forbid(unsafe_code)]
// NaN must fail range checks, so `!(x > y)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod autolabel;
pub mod classes;
pub mod error;
pub mod eval_det;
pub mod eval_occ;
pub mod geometry;
pub mod math;
pub mod occgen;
pub mod registration;
pub mod source;
pub mod spatial;
pub mod synth;
pub mod trajectory;
pub mod voxel;

pub use classes::{SemanticClass, FREE, IGNORE};
pub use error::{Error, Result};
pub use geometry::{Box3D, PointAttributes, PointCloud, PointKind, Pose, Size3};
pub use math::{Quat, Vec3};
pub use source::{FrameSource, MemoryClip};
pub use voxel::VoxelGrid;

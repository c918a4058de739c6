//! Depth ingestion, meshing and time-averaged body geometry.

mod depth;
pub mod io;
mod mesh;
mod transform;

pub use depth::{
    surface_at, time_average_depth, DepthFrame, DepthSequence, Intrinsics, DEFAULT_DEPTH_RATE_HZ, MAX_DEPTH_MM,
    MIN_DEPTH_MM,
};
pub use io::{load_depth_sequence, DepthFormat};
pub use mesh::{depth_to_mesh, SurfaceMesh, MIN_TRIANGLE_ANGLE};
pub use transform::ExtrinsicTransform;

/// Default depth-jump threshold separating surfaces, millimeters.
pub const DEFAULT_DISCONTINUITY_MM: f64 = 50.0;

/// Default fraction of frames in which a pixel must be valid to be averaged.
pub const DEFAULT_MIN_VALID_FRACTION: f64 = 0.5;

//! Local binary pattern codes, the extended (angular, radial,
//! center-symmetric) variants, code-to-bin mappings and histogram features.
//!
//! Ring samples are read anticlockwise starting east of the center, so the
//! unit 8-ring visits E, NE, N, NW, W, SW, S, SE. The sign function counts
//! ties as 1.

mod code;
mod histogram;
mod image;
mod mapping;
mod neighborhood;

pub use code::{cslbp_code, elbp_angular_code, elbp_radial_code, lbp_code};
pub use histogram::{histogram, Histogram};
pub use image::{lbp_image, Border};
pub use mapping::{min_rotation, transitions, LbpMapping, MappingKind};
pub use neighborhood::{sample_ring, Interpolation, NeighborhoodSpec};

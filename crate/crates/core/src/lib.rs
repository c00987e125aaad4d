//! Part-centric interaction pose annotation for articulated objects.

pub mod actioness;
pub mod antipodal;
pub mod archive;
pub mod asset;
pub mod bench;
pub mod bvh;
#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod filter;
pub mod geom;
pub mod mesh;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod ply;
pub mod sampling;
pub mod scene;
pub mod seed;

pub use error::{Error, Result};

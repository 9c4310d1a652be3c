//! Numerical laboratory for Delaunay unduloids and their conjugate cousins in S³.

pub mod classify;
pub mod config;
pub mod cousin;
pub mod delaunay;
pub mod error;
pub mod export;
pub mod fd;
pub mod index_count;
pub mod jacobi_modes;
pub mod ode;
pub mod quat_s3;
pub mod report;
pub mod verify;

pub use error::{Error, Result};

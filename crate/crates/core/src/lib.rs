//! Ricci flow on homogeneous 3-dimensional model geometries, the volume growth
//! of geodesic balls in their universal covers, and audits of the volume
//! entropy along the flow.

pub mod ball;
pub mod cli;
pub mod config;
pub mod entropy;
pub mod error;
mod fit;
pub mod flow;
pub mod geometry;
pub mod output;
pub mod quadrature;
pub mod reproduce;
pub mod rescaling;
pub mod runner;

#[cfg(test)]
mod oracle;

pub use error::{Error, Result};

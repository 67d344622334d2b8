//! Exact formal-distribution calculus for quasi modules at infinity of affine
//! vertex algebras.

pub mod config;
pub mod delta;
pub mod eocalc;
pub mod error;
pub mod exec;
pub mod liealg;
pub mod linalg;
pub mod lingroup;
pub mod pbw;
pub mod poly;
pub mod qmiverify;
pub mod report;
pub mod scalar;
pub mod series;
pub mod sparse;
pub mod suites;
pub mod vacuumva;

pub use error::{Error, Result};
pub use scalar::Q;

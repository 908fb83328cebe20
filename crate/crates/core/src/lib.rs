//! Estimation of the convex region on which a noisy planar function sits at
//! its baseline level.
//!
//! Observations are turned into approximate p-values, the p-values into stump
//! weights `Φ(·) − γ`, and the weighted empirical criterion is minimized
//! exactly over convex polygons with vertices at data points.

pub mod convex_dp;
pub mod criterion;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod kernel;
pub mod kv;
pub mod metrics;
pub mod normal;
pub mod synth;
pub mod tau;

pub use error::{Error, Result};

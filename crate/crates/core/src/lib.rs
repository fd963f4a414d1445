//! Laguerre tessellations driven by marked Poisson processes: β-, β′-,
//! Gaussian- and sectional Poisson-Voronoi models.
//!
//! The crate evaluates closed-form characteristics of these tessellations
//! (face intensities, mean cell volumes, intrinsic volumes, f-vectors and
//! their high-dimensional limits) and checks them against simulation.

pub mod closed_forms;
pub mod error;
pub mod io;
pub mod jfunc;
pub mod laguerre;
pub mod model;
pub mod montecarlo;
pub mod process;
pub mod quad;
pub mod render;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

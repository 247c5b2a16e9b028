//! The solid-on-solid interface above an attractive wall: exact small-box
//! evaluation, the cylinder and perturbation calculus, truncated cluster
//! series of the restricted ensembles, contours, Monte Carlo sampling and
//! phase-diagram data.

pub mod catalog;
pub mod cluster;
pub mod coefficients;
pub mod contour;
pub mod cylinder;
pub mod dominance;
pub mod error;
pub mod exec;
pub mod geom;
pub mod lattice;
pub mod mc;
pub mod params;
pub mod phase;
pub mod series;
pub mod shapes;
pub mod specfile;
pub mod torus;

pub use error::{Error, Result};
pub use params::ModelParams;

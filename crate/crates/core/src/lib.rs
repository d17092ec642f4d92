//! Holomorphic functional calculus for operators on `ℂⁿ` equipped with a
//! finite family of seminorms: mixed operator seminorms, radius of
//! boundedness, contour quadrature for `f(T)`, Riesz projections, Taylor
//! expansion in a commuting perturbation, and renormings that make a given
//! operator bounded.

pub mod calib;
pub mod contour;
pub mod error;
pub mod funcalc;
pub mod holofun;
pub mod instances;
pub mod io;
pub mod linalg;
pub mod perturb;
pub mod poly;
pub mod projections;
pub mod renorm;
pub mod spectral;

pub use error::{Error, Result};

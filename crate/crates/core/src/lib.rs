//! Fictitious-domain penalized Navier–Stokes–Fourier simulator for a
//! prescribed moving domain embedded in a fixed Cartesian box.
//!
//! Thermodynamics, geometry and the grid operators are generic over the
//! floating-point type; the time integrator and everything built on it run
//! in `f64`, for which the aliases below are provided.

pub mod app;
pub mod cascade;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod scalar;
pub mod solver;
pub mod thermo;

pub use error::{Error, Result};
pub use scalar::{Point, Real};

pub type Eos = thermo::EosModel<f64>;
pub type Transport = thermo::TransportCoeffs<f64>;
pub type Grid = fields::Grid<f64>;
pub type Domain = geometry::MovingDomain<f64>;
pub type VelocityField = geometry::VelocityField<f64>;

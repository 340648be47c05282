//! Structured-grid solver for compressible, viscous, resistive, heat-conducting
//! MHD together with relative-energy and measure-valued solution diagnostics.

pub mod constitutive;
pub mod eos;
pub mod grid;
pub mod harness;
pub mod numerics;
pub mod relative_energy;
pub mod tensor;
pub mod young_measure;

pub use constitutive::TransportModel;
pub use eos::{EosModel, ThermoPoint, Thermodynamics};
pub use grid::{BoundaryData, FluidState, Grid, SolverConfig};

//! Spectral laboratory for randomized dispersive data on a periodic box:
//! unit-cube (Wiener) frequency decomposition, modulation/Besov/Sobolev and
//! space-time norms, subgaussian randomization of rough data, Monte Carlo
//! tail estimation for free-evolution statistics, and a Picard fixed-point
//! solver for the cubic nonlinear Schrödinger equation driven by randomized
//! initial data.

pub mod error;
pub mod field;
pub mod grid;
pub mod manifest;
pub mod nls;
pub mod norms;
pub mod output;
pub mod probe;
pub mod randomize;
pub mod spectral;
pub mod stats;
pub mod wiener;

pub use error::{Error, Result};
pub use field::{Field, Space, SpacetimeField};
pub use grid::TorusGrid;

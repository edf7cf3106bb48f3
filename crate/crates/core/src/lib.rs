//! Dual mixed finite elements for the Poisson problem: RT0 fluxes paired with
//! continuous P1 potentials, the discrete inf-sup spectrum of that pairing,
//! spectral splitting of the discrete solution, and flux equilibration.

pub mod assembly;
pub mod equilibration;
pub mod error;
pub mod experiments;
pub mod fespace;
pub mod infsup;
pub mod mesh;
pub mod quadrature;
pub mod solvers;
pub mod sparse;

pub use assembly::Source;
pub use error::{Error, Result};
pub use fespace::{FeSpace, SpaceKind};
pub use mesh::{DomainTag, Mesh, MeshFamily, Point};
pub use sparse::CsrMatrix;

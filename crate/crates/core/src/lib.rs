//! Darboux-chart bosonization of the Schwarzian theory on Virasoro coadjoint orbits.

pub mod correlators;
pub mod corpus;
pub mod darboux;
pub mod error;
pub mod gaussian;
pub mod jet;
pub mod params;
pub mod qpfunc;
pub mod quadrature;
pub mod special;
pub mod symplectic;
pub mod util;
pub mod verify;

pub use error::{Error, Result};
pub use params::{OrbitKind, OrbitParams};

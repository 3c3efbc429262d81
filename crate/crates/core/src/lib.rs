//! Planar two-phase Muskat flow in a bounded disk: interface operators,
//! geometric evolution and linear stability of circular equilibria.

pub mod error;
pub mod evolution;
pub mod field;
pub mod geometry;
pub mod io;
pub mod operators;
pub mod spectral;
pub mod stability;
pub mod transmission;
pub mod verify;

pub use error::{MuskatError, Result};
pub use field::BoundaryField;
pub use geometry::{Circle, InterfaceCurve, InterfaceSet, Mode, Point};
pub use transmission::{Model, PhysicalParams};

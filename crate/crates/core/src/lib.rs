//! Perforated-domain approximation of relaxed Dirichlet problems
//! `Lu + μu = f` in the plane.

pub mod assembly;
pub mod calibration;
pub mod capacity;
pub mod corpus;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod measures;
pub mod mesh;
pub mod operator;
pub mod pde;
pub mod perforation;
pub mod properties;
pub mod quadrature;

pub use error::{Error, Result};
pub use geometry::{Point, Rect, Region};
pub use measures::MeasureSpec;
pub use mesh::{Field, Mesh};
pub use operator::EllipticOperator;

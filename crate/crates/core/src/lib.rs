pub mod containment;
pub mod error;
pub mod halfspace;
pub mod hull;
pub mod invariance;
pub mod io;
pub mod numerics;
#[doc(hidden)]
pub mod oracle;
pub mod pontryagin;
pub mod reach;
pub mod reduction;
mod scaling;
pub mod sets;

pub use error::{Result, SetError};
pub use nalgebra;
pub use sets::{ConstrainedZonotope, HPolytope, Halfspace, Zonotope, TOL};

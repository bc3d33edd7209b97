//! Set representations: zonotopes, matrix zonotopes and interval vectors.
//!
//! All operations are pure. Generator columns that are exactly zero are kept;
//! call [`Zonotope::compact`] to drop them explicitly.

mod interval;
mod matrix_zonotope;
mod membership;
mod zonotope;

pub use interval::IntervalVector;
pub use matrix_zonotope::MatrixZonotope;
pub use membership::{box_combination, MEMBERSHIP_TOLERANCE};
pub use zonotope::Zonotope;

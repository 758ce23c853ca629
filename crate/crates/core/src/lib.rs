pub mod affine;
pub mod blocks;
pub mod error;
pub mod inverses;
pub mod json;
pub mod lab;
pub mod matrix;
pub mod orders;
pub mod scalar;
pub mod verify;

pub use affine::{solve_affine, AffineSolutionSet, Constraint, Term};
pub use error::{Error, Result};
pub use inverses::{satisfies, solve_class, ClassSpec};
pub use matrix::Mat;
pub use orders::{decide, holds, OrderRelation, Route, Verdict, Witness};
pub use scalar::{parse_scalar, RingSpec, Scalar};

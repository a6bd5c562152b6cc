pub mod expclip;
pub mod facs;
pub mod nn;
pub mod scalar;
pub mod tead;

pub use scalar::Scalar;

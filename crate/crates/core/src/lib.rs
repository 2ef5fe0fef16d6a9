pub mod error;
pub mod bloch;
pub mod checks;
pub mod experiment;
pub mod expm;
pub mod linalg3;
pub mod montecarlo;
pub mod pulse;
pub mod quadrature;
pub mod vsystem;

pub use error::{Result, ZenoError};

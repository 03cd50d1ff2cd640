//! Small dense complex linear algebra over labelled qubit spaces.
//!
//! All composite spaces follow the fixed tensor ordering
//! signal 1 ⊗ signal 2 ⊗ meter 1 ⊗ meter 2.

mod density;
mod ket;
mod operator;
pub mod random;
mod space;

pub use density::{fidelity, Density};
pub use ket::{inner, tensor, Ket, NORM_TOL};
pub use operator::{apply, Operator, ALGEBRA_TOL};
pub use space::{Basis, Factor, Role, Space};

/// Tolerance for identities checked after chained circuit propagation.
pub const CIRCUIT_TOL: f64 = 1e-9;

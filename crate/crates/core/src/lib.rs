//! Localized sensitivities for optimal control of linear transport and
//! wave equations on long periodic domains.

pub mod analysis;
pub mod characteristics;
pub mod domain_check;
pub mod geometry;
pub mod ocp;
mod quadrature;
pub mod semigroup;

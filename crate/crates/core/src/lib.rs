//! Combinatorics and sign calculus for A-infinity functors of Lagrangian
//! correspondences.

pub mod ainfty;
pub mod gluing;
pub mod linalg;
pub mod polytopes;
pub mod relations;
pub mod signs;
pub mod trees;

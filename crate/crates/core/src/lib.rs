//! Exact and modular arithmetic for Jacobi forms, Borcherds products and
//! paramodular Fourier expansions.

pub mod field;
pub mod series;
pub mod theta;
pub mod linalg;
pub mod jacobi;
pub mod paramodular;
pub mod weak;
pub mod borcherds;
pub mod restriction;
pub mod store;

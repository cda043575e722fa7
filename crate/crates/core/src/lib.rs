//! Local identification of overcomplete dictionaries.
//!
//! The crate implements the S-response criterion
//! `max_Psi sum_n max_{|I|=S} ||Psi_I^T y_n||_1`, the ITKM algorithm
//! (iterative thresholding and K signed means) that ascends it, an `S = 1`
//! K-SVD comparator, the sparse random signal models, exact enumeration
//! oracles for the asymptotic criterion, and evaluators for the associated
//! identification bounds.

pub mod bounds;
pub mod criterion;
pub mod error;
pub mod itkm;
pub mod ksvd;
pub mod linalg;
pub mod random;
pub mod signal;

pub use error::{Error, Result};
pub use linalg::Dictionary;

//! Dictionaries, perturbations and the matrix-analytic metrics on them.

mod assignment;
mod dictionary;
mod eigen;
pub mod zoo;

pub use assignment::{bottleneck_assignment, hungarian};
pub use dictionary::{
    coherence, distance_matched, distance_raw, distance_sign_invariant, frame_stats,
    random_tangent_directions, realize_perturbation, Dictionary, FrameStats, Matching,
    Perturbation, FRAME_JACOBI_TOL, MAX_RADIUS, RANK_TOL, UNIT_NORM_TOL,
};
pub use eigen::{jacobi_eigen, power_iteration, LeadingEigen, SymmetricEigen};

//! Generating dictionaries used by the experiments.

use nalgebra::DMatrix;

use super::Dictionary;
use crate::error::{Error, Result};

/// The canonical basis of `R^d`.
pub fn canonical(d: usize) -> Result<Dictionary> {
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    Dictionary::new(DMatrix::identity(d, d))
}

/// Sylvester Hadamard matrix of order `n` (a power of two), entries +-1.
pub fn sylvester_hadamard(n: usize) -> Result<DMatrix<f64>> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid(format!("Hadamard order {n} is not a power of two")));
    }
    let mut h = DMatrix::from_element(1, 1, 1.0);
    while h.nrows() < n {
        let m = h.nrows();
        let mut next = DMatrix::zeros(2 * m, 2 * m);
        next.view_mut((0, 0), (m, m)).copy_from(&h);
        next.view_mut((0, m), (m, m)).copy_from(&h);
        next.view_mut((m, 0), (m, m)).copy_from(&h);
        next.view_mut((m, m), (m, m)).copy_from(&(-&h));
        h = next;
    }
    Ok(h)
}

/// Canonical basis followed by the first `d/2` columns of the normalised
/// Sylvester Hadamard basis: `K = 3d/2` atoms with coherence `d^(-1/2)`.
pub fn canonical_half_hadamard(d: usize) -> Result<Dictionary> {
    if d < 2 {
        return Err(Error::invalid("canonical + half Hadamard needs d >= 2"));
    }
    let h = sylvester_hadamard(d)? / (d as f64).sqrt();
    let k = d + d / 2;
    let mut atoms = DMatrix::zeros(d, k);
    atoms.view_mut((0, 0), (d, d)).fill_with_identity();
    atoms.view_mut((0, d), (d, d / 2)).copy_from(&h.columns(0, d / 2));
    Dictionary::new(atoms)
}

/// Basis of `R^3` with atoms `(e_i + t (1,1,1)) / ||e_i + t (1,1,1)||`;
/// its condition number is `1 + 3t`.
pub fn perturbed_basis_3d(t: f64) -> Result<Dictionary> {
    if !(0.0..=0.5).contains(&t) {
        return Err(Error::invalid(format!("t = {t} outside [0, 0.5]")));
    }
    let atoms = DMatrix::from_fn(3, 3, |r, c| if r == c { 1.0 + t } else { t });
    Dictionary::normalized(atoms)
}

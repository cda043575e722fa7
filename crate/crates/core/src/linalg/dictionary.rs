use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};

/// Column norms must be within this distance of one.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// A `d x K` matrix of unit-norm atoms with `d <= K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: DMatrix<f64>,
}

impl Dictionary {
    /// Wraps `atoms`, rejecting non-unit columns and `d > K`.
    pub fn new(atoms: DMatrix<f64>) -> Result<Self> {
        let (d, k) = atoms.shape();
        if d == 0 || k == 0 {
            return Err(Error::invalid("dictionary must have at least one row and one atom"));
        }
        if d > k {
            return Err(Error::invalid(format!(
                "dictionary has more rows than atoms ({d} > {k})"
            )));
        }
        for (i, col) in atoms.column_iter().enumerate() {
            let norm = col.norm();
            if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::invalid(format!(
                    "atom {i} has norm {norm}, expected 1 within {UNIT_NORM_TOL:e}"
                )));
            }
        }
        Ok(Self { atoms })
    }

    /// Builds a dictionary from atom vectors given as slices of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let d = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != d) {
            return Err(Error::invalid("atoms have different lengths"));
        }
        let data: Vec<f64> = columns.iter().flatten().copied().collect();
        Self::new(DMatrix::from_vec(d, columns.len(), data))
    }

    /// Normalises every column of `raw` and wraps the result.
    pub fn normalized(mut raw: DMatrix<f64>) -> Result<Self> {
        for (i, mut col) in raw.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm <= 0.0 || !norm.is_finite() {
                return Err(Error::invalid(format!("atom {i} cannot be normalised (norm {norm})")));
            }
            col /= norm;
        }
        Self::new(raw)
    }

    pub fn dim(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn atoms(&self) -> &DMatrix<f64> {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> DVectorView<'_, f64> {
        self.atoms.column(i)
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.atoms
    }

    /// Copy with atom `i` negated.
    pub fn with_negated_atom(&self, i: usize) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.column_mut(i).neg_mut();
        Self { atoms }
    }

    /// Copy whose atom `j` is `signs[j] * self.atom(perm[j])`.
    pub fn permuted(&self, perm: &[usize], signs: &[f64]) -> Result<Self> {
        let k = self.n_atoms();
        if perm.len() != k || signs.len() != k {
            return Err(Error::invalid("permutation/sign length must equal the atom count"));
        }
        let mut seen = vec![false; k];
        for &p in perm {
            if p >= k || std::mem::replace(&mut seen[p], true) {
                return Err(Error::invalid("not a permutation"));
            }
        }
        if signs.iter().any(|s| s.abs() != 1.0) {
            return Err(Error::invalid("signs must be +1 or -1"));
        }
        let atoms = DMatrix::from_fn(self.dim(), k, |r, c| signs[c] * self.atoms[(r, perm[c])]);
        Ok(Self { atoms })
    }
}

/// Frame bounds, coherence and condition number of a dictionary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameStats {
    /// Lower frame bound (smallest eigenvalue of `D D^T`).
    pub lower: f64,
    /// Upper frame bound (largest eigenvalue of `D D^T`).
    pub upper: f64,
    pub coherence: f64,
    /// `sqrt(upper / lower)`.
    pub condition: f64,
}

/// Maximal absolute inner product between distinct atoms.
pub fn coherence(dico: &Dictionary) -> Result<f64> {
    let k = dico.n_atoms();
    if k < 2 {
        return Err(Error::invalid("coherence needs at least two atoms"));
    }
    let gram = dico.atoms().tr_mul(dico.atoms());
    let mut mu = 0.0f64;
    for j in 0..k {
        for i in 0..j {
            mu = mu.max(gram[(i, j)].abs());
        }
    }
    Ok(mu.min(1.0))
}

/// Off-diagonal tolerance used for the frame-operator diagonalisation.
pub const FRAME_JACOBI_TOL: f64 = 1e-12;
/// Frames whose smallest frame-operator eigenvalue is below this are rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Frame bounds from a Jacobi diagonalisation of `D D^T`.
///
/// Coherence is reported as 0 for single-atom dictionaries.
pub fn frame_stats(dico: &Dictionary) -> Result<FrameStats> {
    let frame_op = dico.atoms() * dico.atoms().transpose();
    let eig = super::eigen::jacobi_eigen(&frame_op, FRAME_JACOBI_TOL)?;
    let lower = eig.values[0];
    let upper = *eig.values.last().expect("nonempty spectrum");
    if lower <= RANK_TOL {
        return Err(Error::DegenerateFrame { smallest: lower });
    }
    let mu = if dico.n_atoms() >= 2 { coherence(dico)? } else { 0.0 };
    Ok(FrameStats {
        lower,
        upper,
        coherence: mu,
        condition: (upper / lower).sqrt(),
    })
}

fn check_same_shape(a: &Dictionary, b: &Dictionary) -> Result<()> {
    if a.atoms().shape() != b.atoms().shape() {
        return Err(Error::invalid(format!(
            "dictionary shapes differ: {:?} vs {:?}",
            a.atoms().shape(),
            b.atoms().shape()
        )));
    }
    Ok(())
}

/// `max_i ||phi_i - psi_i||` with fixed atom correspondence.
pub fn distance_raw(a: &Dictionary, b: &Dictionary) -> Result<f64> {
    check_same_shape(a, b)?;
    Ok(a.atoms()
        .column_iter()
        .zip(b.atoms().column_iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}

fn sign_invariant_atom_distance(x: DVectorView<'_, f64>, y: DVectorView<'_, f64>) -> f64 {
    (x - y).norm().min((x + y).norm())
}

/// `max_i min_s ||phi_i - s psi_i||` over signs `s = +-1`.
pub fn distance_sign_invariant(a: &Dictionary, b: &Dictionary) -> Result<f64> {
    check_same_shape(a, b)?;
    Ok(a.atoms()
        .column_iter()
        .zip(b.atoms().column_iter())
        .map(|(x, y)| sign_invariant_atom_distance(x, y))
        .fold(0.0, f64::max))
}

/// Atom matching found by [`distance_matched`].
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub distance: f64,
    /// Atom `i` of the first dictionary is matched to atom `permutation[i]`
    /// of the second.
    pub permutation: Vec<usize>,
    /// Sign applied to the matched atom of the second dictionary.
    pub signs: Vec<f64>,
}

/// Distance minimised over atom permutations and signs.
///
/// Solved exactly as a bottleneck assignment on the sign-minimised pairwise
/// atom distances.
pub fn distance_matched(a: &Dictionary, b: &Dictionary) -> Result<Matching> {
    check_same_shape(a, b)?;
    let k = a.n_atoms();
    let costs: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| sign_invariant_atom_distance(a.atom(i), b.atom(j)))
                .collect()
        })
        .collect();
    let (distance, permutation) = super::assignment::bottleneck_assignment(&costs);
    let signs = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| if a.atom(i).dot(&b.atom(j)) >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    Ok(Matching {
        distance,
        permutation,
        signs,
    })
}

/// Largest admissible perturbation radius per atom.
pub const MAX_RADIUS: f64 = std::f64::consts::SQRT_2;

/// An epsilon-perturbation `psi_i = alpha_i phi_i + omega_i z_i` of a
/// dictionary, with `alpha_i = 1 - eps_i^2/2` and
/// `omega_i = (eps_i^2 - eps_i^4/4)^(1/2)`, so that `||psi_i - phi_i|| = eps_i`.
#[derive(Debug, Clone)]
pub struct Perturbation {
    base: Dictionary,
    radii: Vec<f64>,
    directions: DMatrix<f64>,
}

impl Perturbation {
    /// Validates radii in `[0, sqrt 2]` and, for every atom with a positive
    /// radius, a unit direction orthogonal to the atom (tolerance 1e-9).
    pub fn new(base: Dictionary, radii: Vec<f64>, directions: DMatrix<f64>) -> Result<Self> {
        let (d, k) = base.atoms().shape();
        if radii.len() != k {
            return Err(Error::invalid(format!("expected {k} radii, got {}", radii.len())));
        }
        if directions.shape() != (d, k) {
            return Err(Error::invalid(format!(
                "directions must be {d}x{k}, got {:?}",
                directions.shape()
            )));
        }
        for (i, &eps) in radii.iter().enumerate() {
            if !(0.0..=MAX_RADIUS).contains(&eps) {
                return Err(Error::invalid(format!(
                    "radius {eps} of atom {i} outside [0, sqrt 2]"
                )));
            }
            if eps > 0.0 {
                let z = directions.column(i);
                let norm = z.norm();
                let overlap = z.dot(&base.atom(i));
                if (norm - 1.0).abs() > UNIT_NORM_TOL || overlap.abs() > UNIT_NORM_TOL {
                    return Err(Error::invalid(format!(
                        "direction {i} must be unit norm and orthogonal to its atom (norm {norm}, overlap {overlap:e})"
                    )));
                }
            }
        }
        Ok(Self {
            base,
            radii,
            directions,
        })
    }

    /// Same radius for every atom.
    pub fn uniform(base: Dictionary, radius: f64, directions: DMatrix<f64>) -> Result<Self> {
        let k = base.n_atoms();
        Self::new(base, vec![radius; k], directions)
    }

    pub fn base(&self) -> &Dictionary {
        &self.base
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn directions(&self) -> &DMatrix<f64> {
        &self.directions
    }

    pub fn alpha(&self, i: usize) -> f64 {
        1.0 - self.radii[i] * self.radii[i] / 2.0
    }

    pub fn omega(&self, i: usize) -> f64 {
        let e2 = self.radii[i] * self.radii[i];
        (e2 - e2 * e2 / 4.0).max(0.0).sqrt()
    }

    /// The perturbed dictionary. Atoms with zero radius are copied unchanged.
    pub fn realize(&self) -> Dictionary {
        let mut atoms = self.base.atoms().clone();
        for i in 0..atoms.ncols() {
            if self.radii[i] == 0.0 {
                continue;
            }
            let (alpha, omega) = (self.alpha(i), self.omega(i));
            let z = self.directions.column(i);
            let mut col = atoms.column_mut(i);
            col *= alpha;
            col.axpy(omega, &z, 1.0);
        }
        Dictionary { atoms }
    }
}

/// Free-function form of [`Perturbation::realize`].
pub fn realize_perturbation(p: &Perturbation) -> Dictionary {
    p.realize()
}

/// Uniform random unit directions in the hyperplanes orthogonal to each atom.
pub fn random_tangent_directions<R: rand::Rng + ?Sized>(
    dico: &Dictionary,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let (d, k) = dico.atoms().shape();
    if d < 2 {
        return Err(Error::invalid("tangent directions need dimension at least 2"));
    }
    let mut z = DMatrix::zeros(d, k);
    for i in 0..k {
        let phi = dico.atom(i);
        loop {
            let mut g = DVector::zeros(d);
            crate::random::fill_standard_normal(rng, g.as_mut_slice());
            // Two projection passes bring the overlap down to rounding level.
            for _ in 0..2 {
                let overlap = phi.dot(&g);
                g.axpy(-overlap, &phi, 1.0);
            }
            let norm = g.norm();
            if norm > 1e-8 {
                g /= norm;
                let overlap = phi.dot(&g);
                g.axpy(-overlap, &phi, 1.0);
                let norm = g.norm();
                z.set_column(i, &(g / norm));
                break;
            }
        }
    }
    Ok(z)
}

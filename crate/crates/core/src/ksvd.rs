//! K-SVD with one-sparse coding.
//!
//! Every signal is assigned to the atom with the largest absolute response;
//! each atom is then replaced by the leading eigenvector of its cluster's
//! Gram matrix `Y_k Y_k^T`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::criterion::{top_s, RESPONSE_CHUNK};
use crate::error::{Error, Result};
use crate::itkm::{replacement_atom, ItkmConfig, ItkmTrace, Safeguard, StopReason};
use crate::linalg::{distance_raw, power_iteration, Dictionary};
use crate::random::unit_sphere;

pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 10_000;

/// Index of the maximal absolute response for every signal (ties go to the
/// lower index), together with the summed maximal responses.
pub fn partition(psi: &Dictionary, y: &DMatrix<f64>) -> Result<(Vec<usize>, f64)> {
    if y.nrows() != psi.dim() {
        return Err(Error::invalid("signal dimension differs from dictionary dimension"));
    }
    let k = psi.n_atoms();
    let mut labels = Vec::with_capacity(y.ncols());
    let mut top = Vec::with_capacity(1);
    let mut total = 0.0;
    let mut from = 0;
    while from < y.ncols() {
        let n = RESPONSE_CHUNK.min(y.ncols() - from);
        let responses = psi.atoms().tr_mul(&y.columns(from, n));
        for col in responses.as_slice().chunks_exact(k) {
            top_s(col, 1, &mut top);
            labels.push(top[0]);
            total += col[top[0]].abs();
        }
        from += n;
    }
    Ok((labels, total))
}

fn cluster_gram(y: &DMatrix<f64>, members: &[usize]) -> DMatrix<f64> {
    let d = y.nrows();
    let mut gram = DMatrix::zeros(d, d);
    for &j in members {
        let col = y.column(j);
        gram.ger(1.0, &col, &col, 1.0);
    }
    gram
}

fn update_atom(
    gram: &DMatrix<f64>,
    old: DVector<f64>,
    seed: u64,
) -> Result<DVector<f64>> {
    let leading = match power_iteration(gram, &old, POWER_TOL, POWER_MAX_ITER) {
        Ok(e) => e,
        Err(Error::Numerical(_)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let start = unit_sphere(&mut rng, old.len());
            power_iteration(gram, &start, POWER_TOL, POWER_MAX_ITER)?
        }
        Err(e) => return Err(e),
    };
    let mut w = leading.vector;
    if w.dot(&old) < 0.0 {
        w.neg_mut();
    }
    Ok(w)
}

/// One K-SVD update with S = 1. Returns the dictionary and the number of
/// empty clusters that were refilled by the safeguard.
pub fn ksvd1_step<R: Rng + ?Sized>(
    psi: &Dictionary,
    y: &DMatrix<f64>,
    safeguard: Safeguard,
    rng: &mut R,
) -> Result<(Dictionary, usize)> {
    if y.ncols() == 0 {
        return Err(Error::invalid("empty training batch"));
    }
    let (labels, _) = partition(psi, y)?;
    let (d, k) = psi.atoms().shape();
    let mut clusters = vec![Vec::new(); k];
    for (j, &l) in labels.iter().enumerate() {
        clusters[l].push(j);
    }
    let seeds: Vec<u64> = (0..k).map(|_| rng.random()).collect();
    let updated: Vec<Option<DVector<f64>>> = clusters
        .par_iter()
        .enumerate()
        .map(|(i, members)| {
            if members.is_empty() {
                return Ok(None);
            }
            let gram = cluster_gram(y, members);
            if gram.norm() == 0.0 {
                return Ok(None);
            }
            update_atom(&gram, psi.atom(i).into_owned(), seeds[i]).map(Some)
        })
        .collect::<Result<_>>()?;

    let mut atoms = DMatrix::zeros(d, k);
    let mut events = 0;
    for (i, atom) in updated.into_iter().enumerate() {
        let atom = match atom {
            Some(a) => a,
            None => {
                events += 1;
                replacement_atom(safeguard, d, y, rng)
            }
        };
        atoms.set_column(i, &atom);
    }
    Ok((Dictionary::normalized(atoms)?, events))
}

/// Iterates [`ksvd1_step`]; `config.sparsity` must be 1.
pub fn ksvd1_run(
    psi0: &Dictionary,
    y: &DMatrix<f64>,
    config: &ItkmConfig,
    reference: Option<&Dictionary>,
) -> Result<(Dictionary, ItkmTrace)> {
    config.validate()?;
    if config.sparsity != 1 {
        return Err(Error::invalid("K-SVD baseline supports sparsity 1 only"));
    }
    if y.ncols() == 0 {
        return Err(Error::invalid("empty training batch"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut current = psi0.clone();
    let mut trace = ItkmTrace {
        objective: Vec::new(),
        distance: Vec::new(),
        safeguard_events: Vec::new(),
        stop: StopReason::MaxIterations,
    };
    for _ in 0..config.iterations {
        let (_, total) = partition(&current, y)?;
        let (next, events) = ksvd1_step(&current, y, config.safeguard, &mut rng)?;
        trace.record(total / y.ncols() as f64, events, reference, &next)?;
        let moved = distance_raw(&current, &next)?;
        current = next;
        if events == 0 && moved == 0.0 {
            trace.stop = StopReason::FixedPoint;
            break;
        }
        if config.tol > 0.0 && moved <= config.tol {
            trace.stop = StopReason::Tolerance;
            break;
        }
    }
    Ok((current, trace))
}

//! The S-response criterion: support selection by thresholding, the
//! finite-sample objective, and exact enumeration of its expectation under
//! the simple symmetric coefficient model.

use nalgebra::{DMatrix, DVector, DVectorView};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{random_tangent_directions, Dictionary, Perturbation};
use crate::signal::SimpleSequence;

/// Signals per block when forming `Psi^T Y`.
pub(crate) const RESPONSE_CHUNK: usize = 2048;

/// Largest number of (arrangement, sign pattern) pairs the exact
/// expectation will enumerate.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

/// Thresholding result: the `S` atoms with the largest absolute responses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSelection {
    /// Ascending atom indices, `|indices| = S`.
    pub indices: Vec<usize>,
    /// `sign(<psi_k, y>)` per selected atom, with `sign(0) = +1`.
    pub signs: Vec<i8>,
}

#[inline]
pub(crate) fn sign_of(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Indices of the `s` largest `|responses|`, largest first; ties go to the
/// lower index.
pub(crate) fn top_s(responses: &[f64], s: usize, out: &mut Vec<usize>) {
    out.clear();
    for (i, r) in responses.iter().enumerate() {
        let a = r.abs();
        if out.len() == s {
            match out.last() {
                Some(&last) if a > responses[last].abs() => {
                    out.pop();
                }
                _ => continue,
            }
        }
        let pos = out
            .iter()
            .position(|&j| a > responses[j].abs())
            .unwrap_or(out.len());
        out.insert(pos, i);
    }
}

fn check_sparsity(s: usize, k: usize) -> Result<()> {
    if s == 0 || s > k {
        return Err(Error::invalid(format!("sparsity {s} outside 1..={k}")));
    }
    Ok(())
}

/// Thresholding support of `y` in `psi`.
pub fn support_threshold(
    psi: &Dictionary,
    y: DVectorView<'_, f64>,
    s: usize,
) -> Result<SupportSelection> {
    check_sparsity(s, psi.n_atoms())?;
    if y.len() != psi.dim() {
        return Err(Error::invalid("signal dimension differs from dictionary dimension"));
    }
    let responses = psi.atoms().tr_mul(&y);
    let mut top = Vec::with_capacity(s);
    top_s(responses.as_slice(), s, &mut top);
    top.sort_unstable();
    let signs = top
        .iter()
        .map(|&i| if responses[i] < 0.0 { -1 } else { 1 })
        .collect();
    Ok(SupportSelection {
        indices: top,
        signs,
    })
}

/// `(1/N) sum_n max_{|I|=S} ||Psi_I^T y_n||_1`.
pub fn objective_finite(psi: &Dictionary, signals: &DMatrix<f64>, s: usize) -> Result<f64> {
    check_sparsity(s, psi.n_atoms())?;
    let n = signals.ncols();
    if n == 0 {
        return Err(Error::invalid("objective of an empty batch"));
    }
    if signals.nrows() != psi.dim() {
        return Err(Error::invalid("signal dimension differs from dictionary dimension"));
    }
    let k = psi.n_atoms();
    let mut top = Vec::with_capacity(s);
    let mut total = 0.0;
    let mut start = 0;
    while start < n {
        let len = RESPONSE_CHUNK.min(n - start);
        let responses = psi.atoms().tr_mul(&signals.columns(start, len));
        for col in responses.as_slice().chunks_exact(k) {
            top_s(col, s, &mut top);
            total += top.iter().map(|&i| col[i].abs()).sum::<f64>();
        }
        start += len;
    }
    Ok(total / n as f64)
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Groups equal entries of a nonincreasing sequence: `(value, multiplicity)`.
fn value_classes(values: &[f64]) -> Vec<(f64, usize)> {
    let mut classes: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        match classes.last_mut() {
            Some((last, m)) if *last == v => *m += 1,
            _ => classes.push((v, 1)),
        }
    }
    classes
}

/// Number of distinct (arrangement, nonzero sign pattern) pairs of `seq`,
/// or `None` on overflow.
pub fn enumeration_count(seq: &SimpleSequence) -> Option<u128> {
    let classes = value_classes(seq.values());
    let mut remaining = seq.len() as u128;
    let mut count: u128 = 1;
    for &(_, m) in &classes {
        let mut binom: u128 = 1;
        for i in 0..m as u128 {
            binom = binom.checked_mul(remaining - i)? / (i + 1);
        }
        count = count.checked_mul(binom)?;
        remaining -= m as u128;
    }
    let nonzero = seq.values().iter().filter(|&&v| v != 0.0).count() as u32;
    count.checked_mul(2u128.checked_pow(nonzero)?)
}

/// Lexicographic next permutation; returns false after the last one.
fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Exact `E_{p, sigma} max_{|I|=S} ||Psi_I^T Phi c_{p, sigma}||_1`.
///
/// Enumerates every distinct placement of the multiset of values of `c`
/// across the `K` slots together with every sign pattern of the nonzero
/// entries; all such pairs carry equal probability.
pub fn objective_expectation_bruteforce(
    psi: &Dictionary,
    phi: &Dictionary,
    seq: &SimpleSequence,
    s: usize,
) -> Result<f64> {
    let k = phi.n_atoms();
    if psi.atoms().shape() != phi.atoms().shape() {
        return Err(Error::invalid("dictionary shapes differ"));
    }
    if seq.len() != k {
        return Err(Error::invalid(format!(
            "sequence length {} differs from atom count {k}",
            seq.len()
        )));
    }
    check_sparsity(s, k)?;
    let required = enumeration_count(seq).unwrap_or(u128::MAX);
    if required > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            required,
            budget: ENUMERATION_BUDGET,
        });
    }

    let cross = psi.atoms().tr_mul(phi.atoms());
    let classes = value_classes(seq.values());
    let mut arrangement: Vec<usize> = classes
        .iter()
        .enumerate()
        .flat_map(|(ci, &(_, m))| std::iter::repeat_n(ci, m))
        .collect();

    let mut acc = CompensatedSum::default();
    let mut responses = DVector::<f64>::zeros(k);
    let mut top = Vec::with_capacity(s);
    let mut support: Vec<(usize, f64)> = Vec::with_capacity(k);
    let mut evaluations: u128 = 0;
    loop {
        support.clear();
        support.extend(
            arrangement
                .iter()
                .enumerate()
                .map(|(slot, &ci)| (slot, classes[ci].0))
                .filter(|&(_, v)| v != 0.0),
        );
        for mask in 0u64..(1u64 << support.len()) {
            responses.fill(0.0);
            for (bit, &(slot, v)) in support.iter().enumerate() {
                let signed = if mask >> bit & 1 == 1 { -v } else { v };
                responses.axpy(signed, &cross.column(slot), 1.0);
            }
            top_s(responses.as_slice(), s, &mut top);
            acc.add(top.iter().map(|&i| responses[i].abs()).sum());
            evaluations += 1;
        }
        if !next_permutation(&mut arrangement) {
            break;
        }
    }
    if evaluations != required {
        return Err(Error::Internal(format!(
            "enumerated {evaluations} cases, expected {required}"
        )));
    }
    Ok(acc.value() / evaluations as f64)
}

/// The basis `(u_1, ..., u_{d-1}, (u_d + eps u_1)/sqrt(1 + eps^2))` built on
/// the canonical basis.
pub fn example1_dictionary(d: usize, eps: f64) -> Result<Dictionary> {
    if d < 2 {
        return Err(Error::invalid("the flat-coefficient example needs d >= 2"));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps must be finite and nonnegative"));
    }
    let mut atoms = DMatrix::identity(d, d);
    let scale = (1.0 + eps * eps).sqrt();
    atoms[(d - 1, d - 1)] = 1.0 / scale;
    atoms[(0, d - 1)] = eps / scale;
    Dictionary::new(atoms)
}

/// Closed form of `E ||U_eps^T y||_inf` for flat 2-sparse coefficients.
pub fn example1_closed_form(d: usize, eps: f64) -> f64 {
    let q = 1.0 / (d as f64 * (d as f64 - 1.0));
    std::f64::consts::FRAC_1_SQRT_2 * (1.0 - q + q * (1.0 + eps) / (1.0 + eps * eps).sqrt())
}

/// The same expectation by exhaustive enumeration.
pub fn example1_bruteforce(d: usize, eps: f64) -> Result<f64> {
    let perturbed = example1_dictionary(d, eps)?;
    let basis = crate::linalg::zoo::canonical(d)?;
    let flat = SimpleSequence::flat(2, d)?;
    objective_expectation_bruteforce(&perturbed, &basis, &flat, 1)
}

/// Outcome of a local-maximality probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    /// Exact expectation at the generating dictionary.
    pub base_value: f64,
    /// Exact expectation at each probed perturbation.
    pub perturbed_values: Vec<f64>,
    /// `max_j perturbed_values[j] - base_value`; negative means no ascent
    /// direction was found.
    pub max_difference: f64,
}

/// Expectation at the realised perturbation minus the expectation at its base.
pub fn probe_perturbation(p: &Perturbation, seq: &SimpleSequence, s: usize) -> Result<f64> {
    let phi = p.base();
    let base = objective_expectation_bruteforce(phi, phi, seq, s)?;
    let value = objective_expectation_bruteforce(&p.realize(), phi, seq, s)?;
    Ok(value - base)
}

/// Evaluates the exact expectation at `phi` and at `n_directions` random
/// perturbations with every atom moved by `eps_probe`.
///
/// A falsification probe: it can only report that no ascent was found.
pub fn local_max_probe<R: Rng + ?Sized>(
    phi: &Dictionary,
    seq: &SimpleSequence,
    s: usize,
    n_directions: usize,
    eps_probe: f64,
    rng: &mut R,
) -> Result<ProbeReport> {
    let base_value = objective_expectation_bruteforce(phi, phi, seq, s)?;
    let mut perturbed_values = Vec::with_capacity(n_directions);
    for _ in 0..n_directions {
        let z = random_tangent_directions(phi, rng)?;
        let p = Perturbation::uniform(phi.clone(), eps_probe, z)?;
        perturbed_values.push(objective_expectation_bruteforce(&p.realize(), phi, seq, s)?);
    }
    let max_difference = perturbed_values
        .iter()
        .map(|v| v - base_value)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ProbeReport {
        base_value,
        perturbed_values,
        max_difference,
    })
}

//! Iterative Thresholding and K signed Means.
//!
//! One step thresholds every signal against the current dictionary, then
//! replaces each atom by the normalised signed sum of the signals whose
//! support contains it:
//! `psi_k <- normalise(sum_{n: k in I_n} sign(<psi_k, y_n>) y_n)`.

use nalgebra::{DMatrix, DVector, DVectorView};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::criterion::{sign_of, top_s, RESPONSE_CHUNK};
use crate::error::{Error, Result};
use crate::linalg::{distance_raw, distance_sign_invariant, Dictionary};
use crate::random::unit_sphere;

/// Atoms whose accumulated update has norm at most this are re-drawn.
pub const ZERO_UPDATE_TOL: f64 = 1e-12;

/// Replacement rule for atoms that receive a zero update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Safeguard {
    /// Uniform draw from the unit sphere.
    #[default]
    ResampleSphere,
    /// A uniformly chosen training signal, normalised.
    ResampleSignal,
}

impl std::str::FromStr for Safeguard {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resample_sphere" | "sphere" => Ok(Safeguard::ResampleSphere),
            "resample_signal" | "signal" => Ok(Safeguard::ResampleSignal),
            other => Err(Error::invalid(format!("unknown safeguard '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItkmConfig {
    pub sparsity: usize,
    /// Maximum number of iterations (at least 1).
    pub iterations: usize,
    /// Stop once successive dictionaries are within this raw distance;
    /// 0 disables the test.
    pub tol: f64,
    pub safeguard: Safeguard,
    pub seed: u64,
}

impl ItkmConfig {
    pub fn new(sparsity: usize, iterations: usize) -> Self {
        Self {
            sparsity,
            iterations,
            tol: 0.0,
            safeguard: Safeguard::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::invalid("tolerance must be nonnegative"));
        }
        Ok(())
    }
}

/// Why an iterative run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    /// Successive dictionaries closer than the configured tolerance.
    Tolerance,
    /// The update reproduced its input without safeguard events, so every
    /// further iteration would too.
    FixedPoint,
}

/// Per-iteration record of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ItkmTrace {
    /// Objective of the dictionary *before* each update.
    pub objective: Vec<f64>,
    /// Sign-invariant distance to the reference after each update (empty
    /// without a reference).
    pub distance: Vec<f64>,
    pub safeguard_events: Vec<usize>,
    pub stop: StopReason,
}

impl ItkmTrace {
    fn new() -> Self {
        Self {
            objective: Vec::new(),
            distance: Vec::new(),
            safeguard_events: Vec::new(),
            stop: StopReason::MaxIterations,
        }
    }

    pub fn iterations(&self) -> usize {
        self.objective.len()
    }

    pub fn total_safeguard_events(&self) -> usize {
        self.safeguard_events.iter().sum()
    }

    pub(crate) fn record(
        &mut self,
        objective: f64,
        events: usize,
        reference: Option<&Dictionary>,
        current: &Dictionary,
    ) -> Result<()> {
        self.objective.push(objective);
        self.safeguard_events.push(events);
        if let Some(r) = reference {
            self.distance.push(distance_sign_invariant(r, current)?);
        }
        Ok(())
    }
}

/// Result of one batch update.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub dictionary: Dictionary,
    pub safeguard_events: usize,
    /// Finite-sample objective of the input dictionary.
    pub objective: f64,
}

fn check_inputs(psi: &Dictionary, y: &DMatrix<f64>, s: usize) -> Result<()> {
    if s == 0 || s > psi.n_atoms() {
        return Err(Error::invalid(format!(
            "sparsity {s} outside 1..={}",
            psi.n_atoms()
        )));
    }
    if y.ncols() == 0 {
        return Err(Error::invalid("empty training batch"));
    }
    if y.nrows() != psi.dim() {
        return Err(Error::invalid("signal dimension differs from dictionary dimension"));
    }
    Ok(())
}

/// Adds the signed signals of columns `start..start+len` into `sums` and
/// returns the summed S-response objective of those columns.
fn accumulate_range(
    psi: &Dictionary,
    y: &DMatrix<f64>,
    start: usize,
    len: usize,
    s: usize,
    sums: &mut DMatrix<f64>,
) -> f64 {
    let (d, k) = psi.atoms().shape();
    let mut top = Vec::with_capacity(s);
    let mut objective = 0.0;
    let end = start + len;
    let mut from = start;
    while from < end {
        let n = RESPONSE_CHUNK.min(end - from);
        let responses = psi.atoms().tr_mul(&y.columns(from, n));
        for (j, col) in responses.as_slice().chunks_exact(k).enumerate() {
            top_s(col, s, &mut top);
            let signal = &y.as_slice()[(from + j) * d..(from + j + 1) * d];
            let acc = sums.as_mut_slice();
            for &atom in &top {
                objective += col[atom].abs();
                let sign = sign_of(col[atom]);
                for (a, &v) in acc[atom * d..(atom + 1) * d].iter_mut().zip(signal) {
                    *a += sign * v;
                }
            }
        }
        from += n;
    }
    objective
}

/// Unnormalised signed sums for the whole batch, accumulated over fixed
/// blocks in parallel and merged in block order (bit-identical for any
/// thread count).
fn signed_sums(psi: &Dictionary, y: &DMatrix<f64>, s: usize) -> (DMatrix<f64>, f64) {
    let (d, k) = psi.atoms().shape();
    let n = y.ncols();
    let blocks: Vec<(usize, usize)> = (0..n)
        .step_by(RESPONSE_CHUNK)
        .map(|start| (start, RESPONSE_CHUNK.min(n - start)))
        .collect();
    let partials: Vec<(DMatrix<f64>, f64)> = blocks
        .par_iter()
        .map(|&(start, len)| {
            let mut sums = DMatrix::zeros(d, k);
            let obj = accumulate_range(psi, y, start, len, s, &mut sums);
            (sums, obj)
        })
        .collect();
    let mut iter = partials.into_iter();
    let (mut sums, mut objective) = iter.next().expect("nonempty batch");
    for (part, obj) in iter {
        sums += part;
        objective += obj;
    }
    (sums, objective)
}

pub(crate) fn replacement_atom<R: Rng + ?Sized>(
    safeguard: Safeguard,
    d: usize,
    signals: &DMatrix<f64>,
    rng: &mut R,
) -> DVector<f64> {
    match safeguard {
        Safeguard::ResampleSphere => unit_sphere(rng, d),
        Safeguard::ResampleSignal => {
            // A zero training signal cannot be normalised; fall back to the sphere.
            for _ in 0..64 {
                let j = rng.random_range(0..signals.ncols());
                let v = signals.column(j).into_owned();
                let norm = v.norm();
                if norm > ZERO_UPDATE_TOL {
                    return v / norm;
                }
            }
            unit_sphere(rng, d)
        }
    }
}

/// Normalises every column of `sums`, applying the safeguard to zero
/// columns. Returns the dictionary and the number of safeguard events.
pub(crate) fn normalise_atoms<R: Rng + ?Sized>(
    mut sums: DMatrix<f64>,
    safeguard: Safeguard,
    signals: &DMatrix<f64>,
    rng: &mut R,
) -> Result<(Dictionary, usize)> {
    let d = sums.nrows();
    let mut events = 0;
    for k in 0..sums.ncols() {
        let norm = sums.column(k).norm();
        if norm > ZERO_UPDATE_TOL && norm.is_finite() {
            sums.column_mut(k).unscale_mut(norm);
        } else {
            events += 1;
            let atom = replacement_atom(safeguard, d, signals, rng);
            sums.set_column(k, &atom);
        }
    }
    Ok((Dictionary::new(sums)?, events))
}

/// One batch ITKM update.
pub fn itkm_step<R: Rng + ?Sized>(
    psi: &Dictionary,
    y: &DMatrix<f64>,
    s: usize,
    safeguard: Safeguard,
    rng: &mut R,
) -> Result<StepOutcome> {
    check_inputs(psi, y, s)?;
    let (sums, objective) = signed_sums(psi, y, s);
    let (dictionary, safeguard_events) = normalise_atoms(sums, safeguard, y, rng)?;
    Ok(StepOutcome {
        dictionary,
        safeguard_events,
        objective: objective / y.ncols() as f64,
    })
}

/// Iterates [`itkm_step`] from `psi0`.
///
/// Safeguard draws come from a generator seeded with `config.seed`. When a
/// `reference` is given, the trace records the sign-invariant distance to it
/// after every update.
pub fn itkm_run(
    psi0: &Dictionary,
    y: &DMatrix<f64>,
    config: &ItkmConfig,
    reference: Option<&Dictionary>,
) -> Result<(Dictionary, ItkmTrace)> {
    config.validate()?;
    check_inputs(psi0, y, config.sparsity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut current = psi0.clone();
    let mut trace = ItkmTrace::new();
    for _ in 0..config.iterations {
        let out = itkm_step(&current, y, config.sparsity, config.safeguard, &mut rng)?;
        trace.record(out.objective, out.safeguard_events, reference, &out.dictionary)?;
        let moved = distance_raw(&current, &out.dictionary)?;
        current = out.dictionary;
        if out.safeguard_events == 0 && moved == 0.0 {
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

/// Streaming ITKM: supports and signs come from the dictionary of the
/// previous block; after `block_size` signals the accumulated atoms are
/// normalised and become the new dictionary.
#[derive(Debug, Clone)]
pub struct OnlineItkm {
    current: Dictionary,
    sums: DMatrix<f64>,
    block: Vec<f64>,
    block_size: usize,
    sparsity: usize,
    safeguard: Safeguard,
    top: Vec<usize>,
    safeguard_events: usize,
    blocks_done: usize,
}

impl OnlineItkm {
    pub fn new(psi0: Dictionary, sparsity: usize, block_size: usize, safeguard: Safeguard) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::invalid("block size must be positive"));
        }
        if sparsity == 0 || sparsity > psi0.n_atoms() {
            return Err(Error::invalid("sparsity outside 1..=K"));
        }
        let (d, k) = psi0.atoms().shape();
        Ok(Self {
            current: psi0,
            sums: DMatrix::zeros(d, k),
            block: Vec::with_capacity(d * block_size),
            block_size,
            sparsity,
            safeguard,
            top: Vec::with_capacity(sparsity),
            safeguard_events: 0,
            blocks_done: 0,
        })
    }

    /// Processes one signal; completes the block when it is full.
    pub fn push<R: Rng + ?Sized>(&mut self, y: DVectorView<'_, f64>, rng: &mut R) -> Result<()> {
        let d = self.current.dim();
        if y.len() != d {
            return Err(Error::invalid("signal dimension differs from dictionary dimension"));
        }
        let responses = self.current.atoms().tr_mul(&y);
        top_s(responses.as_slice(), self.sparsity, &mut self.top);
        let acc = self.sums.as_mut_slice();
        for &atom in &self.top {
            let sign = sign_of(responses[atom]);
            for (a, &v) in acc[atom * d..(atom + 1) * d].iter_mut().zip(y.iter()) {
                *a += sign * v;
            }
        }
        self.block.extend(y.iter());
        if self.block.len() == d * self.block_size {
            self.finish_block(rng)?;
        }
        Ok(())
    }

    /// Normalises a partially filled block; returns whether one was pending.
    pub fn flush<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool> {
        if self.block.is_empty() {
            return Ok(false);
        }
        self.finish_block(rng)?;
        Ok(true)
    }

    fn finish_block<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let (d, k) = self.current.atoms().shape();
        let signals = DMatrix::from_column_slice(d, self.block.len() / d, &self.block);
        let sums = std::mem::replace(&mut self.sums, DMatrix::zeros(d, k));
        let (next, events) = normalise_atoms(sums, self.safeguard, &signals, rng)?;
        self.current = next;
        self.safeguard_events += events;
        self.blocks_done += 1;
        self.block.clear();
        Ok(())
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.current
    }

    pub fn into_dictionary(self) -> Dictionary {
        self.current
    }

    pub fn safeguard_events(&self) -> usize {
        self.safeguard_events
    }

    pub fn blocks_done(&self) -> usize {
        self.blocks_done
    }
}

/// Online ITKM over a stream of signals. A trailing partial block is
/// processed as a smaller final block.
pub fn itkm_online<R, I>(
    psi0: &Dictionary,
    stream: I,
    s: usize,
    block_size: usize,
    safeguard: Safeguard,
    rng: &mut R,
) -> Result<Dictionary>
where
    R: Rng + ?Sized,
    I: IntoIterator<Item = DVector<f64>>,
{
    let mut online = OnlineItkm::new(psi0.clone(), s, block_size, safeguard)?;
    let mut seen = 0usize;
    for y in stream {
        online.push(y.as_view(), rng)?;
        seen += 1;
    }
    if seen == 0 {
        return Err(Error::invalid("empty block: the stream produced no signals"));
    }
    online.flush(rng)?;
    Ok(online.into_dictionary())
}

/// ITKM step distributed over `nodes` contiguous shares of the batch: each
/// node forms unnormalised signed sums, the partial dictionaries are added in
/// node order and the result is normalised.
pub fn itkm_parallel<R: Rng + ?Sized>(
    psi0: &Dictionary,
    y: &DMatrix<f64>,
    s: usize,
    nodes: usize,
    safeguard: Safeguard,
    rng: &mut R,
) -> Result<Dictionary> {
    check_inputs(psi0, y, s)?;
    let n = y.ncols();
    if nodes == 0 || nodes > n {
        return Err(Error::invalid(format!("node count {nodes} outside 1..={n}")));
    }
    let (d, k) = psi0.atoms().shape();
    let partials: Vec<DMatrix<f64>> = (0..nodes)
        .into_par_iter()
        .map(|m| {
            let start = m * n / nodes;
            let end = (m + 1) * n / nodes;
            let mut sums = DMatrix::zeros(d, k);
            accumulate_range(psi0, y, start, end - start, s, &mut sums);
            sums
        })
        .collect();
    let mut total = DMatrix::zeros(d, k);
    for p in partials {
        total += p;
    }
    Ok(normalise_atoms(total, safeguard, y, rng)?.0)
}

//! Sparse random signal models.
//!
//! Two coefficient models are provided: the parametric generator with decay
//! factor, effective sparsity `S`, total support `T` and noise level `rho`,
//! and the simple symmetric model that permutes and sign-flips one fixed
//! nonincreasing unit-norm sequence. Signals are `y = Phi x` or, with noise,
//! `y = (Phi x + r) / sqrt(1 + ||r||^2)`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Dictionary;
use crate::random::{fill_standard_normal, random_sign};

/// Noise distribution of the per-entry noise `r(i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    None,
    /// Gaussian with standard deviation `rho`.
    Gaussian,
    /// `+rho` or `-rho` with equal probability.
    Bernoulli,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(NoiseKind::None),
            "gaussian" => Ok(NoiseKind::Gaussian),
            "bernoulli" => Ok(NoiseKind::Bernoulli),
            other => Err(Error::invalid(format!("unknown noise kind '{other}'"))),
        }
    }
}

/// Parameters of the decaying-coefficient generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSpec {
    /// Effective sparsity `S`: number of comparatively large coefficients.
    pub sparsity: usize,
    /// Spread `b` of the decay factor, drawn uniformly from `[1 - b, 1]`.
    pub spread: f64,
    /// Total number of nonzero coefficients `T >= S`.
    pub total: usize,
    /// Noise level `rho`.
    pub rho: f64,
    pub noise: NoiseKind,
}

impl CoefficientSpec {
    pub fn noiseless(sparsity: usize, spread: f64, total: usize) -> Self {
        Self {
            sparsity,
            spread,
            total,
            rho: 0.0,
            noise: NoiseKind::None,
        }
    }

    /// Adds noise; `rho == 0` collapses to the noiseless model.
    pub fn with_noise(mut self, kind: NoiseKind, rho: f64) -> Self {
        if rho == 0.0 {
            self.rho = 0.0;
            self.noise = NoiseKind::None;
        } else {
            self.rho = rho;
            self.noise = kind;
        }
        self
    }

    /// Checks `1 <= S <= T <= K`, `0 <= b < 1` and `rho = 0 <=> noise = None`.
    pub fn validate(&self, n_atoms: usize) -> Result<()> {
        if self.sparsity == 0 || self.sparsity > self.total || self.total > n_atoms {
            return Err(Error::invalid(format!(
                "need 1 <= S <= T <= K, got S={}, T={}, K={n_atoms}",
                self.sparsity, self.total
            )));
        }
        if !(0.0..1.0).contains(&self.spread) {
            return Err(Error::invalid(format!("spread b = {} outside [0, 1)", self.spread)));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid(format!("noise level {} must be >= 0", self.rho)));
        }
        if (self.rho == 0.0) != (self.noise == NoiseKind::None) {
            return Err(Error::invalid(
                "noise level must be zero exactly when the noise kind is none",
            ));
        }
        Ok(())
    }
}

/// A nonnegative, nonincreasing, unit-norm coefficient sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleSequence {
    values: Vec<f64>,
}

impl SimpleSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("sequence must be nonempty"));
        }
        if values.iter().any(|&v| v.is_nan() || v < 0.0) {
            return Err(Error::invalid("sequence entries must be nonnegative"));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("sequence must be nonincreasing"));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("sequence norm {norm} is not 1")));
        }
        Ok(Self { values })
    }

    /// `e_1` of length `k`.
    pub fn first_unit(k: usize) -> Result<Self> {
        let mut v = vec![0.0; k];
        if let Some(first) = v.first_mut() {
            *first = 1.0;
        }
        Self::new(v)
    }

    /// `m` equal entries `1/sqrt(m)` followed by zeros, length `k`.
    pub fn flat(m: usize, k: usize) -> Result<Self> {
        if m == 0 || m > k {
            return Err(Error::invalid("flat sequence needs 1 <= m <= k"));
        }
        let mut v = vec![0.0; k];
        v[..m].fill(1.0 / (m as f64).sqrt());
        Self::new(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One draw of a coefficient vector `x = c_{p, sigma}` with
/// `x(i) = sigma_i c_{p(i)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientDraw {
    /// The base sequence `c` (length `K`).
    pub sequence: Vec<f64>,
    /// Permutation `p` of `0..K`.
    pub permutation: Vec<usize>,
    /// Signs `sigma_i`, each `+-1`.
    pub signs: Vec<f64>,
}

impl CoefficientDraw {
    pub fn coefficients(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.sequence.len(),
            self.permutation
                .iter()
                .zip(&self.signs)
                .map(|(&p, &s)| s * self.sequence[p]),
        )
    }
}

/// Per-signal ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub draw: CoefficientDraw,
    /// The noise vector `r` before normalisation, if any.
    pub noise: Option<DVector<f64>>,
}

/// Signals stored as the columns of a `d x N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBatch {
    pub signals: DMatrix<f64>,
    pub provenance: Option<Vec<Provenance>>,
}

impl SignalBatch {
    pub fn len(&self) -> usize {
        self.signals.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.ncols() == 0
    }

    pub fn dim(&self) -> usize {
        self.signals.nrows()
    }
}

fn random_permutation<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..k).collect();
    p.shuffle(rng);
    p
}

fn random_signs<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    (0..k).map(|_| random_sign(rng)).collect()
}

/// Draws the base sequence, permutation and signs of one coefficient vector.
///
/// `c_i = c_b^i / sqrt(S)` for `i <= S` with `c_b ~ U[1-b, 1]`; if `T = S`
/// that prefix is renormalised, otherwise `(c_{S+1}, ..., c_T)` is uniform on
/// the sphere of radius `R = (1 - sum_{i<=S} c_i^2)^(1/2)`.
pub fn draw_table1_coefficients<R: Rng + ?Sized>(
    spec: &CoefficientSpec,
    n_atoms: usize,
    rng: &mut R,
) -> Result<CoefficientDraw> {
    spec.validate(n_atoms)?;
    let s = spec.sparsity;
    let decay = 1.0 - spec.spread * rng.random::<f64>();
    let mut c = vec![0.0; n_atoms];
    let inv_sqrt_s = 1.0 / (s as f64).sqrt();
    let mut power = 1.0;
    for ci in c.iter_mut().take(s) {
        power *= decay;
        *ci = power * inv_sqrt_s;
    }
    let head_energy: f64 = c[..s].iter().map(|v| v * v).sum();
    if spec.total == s {
        let norm = head_energy.sqrt();
        c[..s].iter_mut().for_each(|v| *v /= norm);
    } else {
        let r2 = 1.0 - head_energy;
        if r2 < -1e-12 {
            return Err(Error::Internal(format!("negative tail energy {r2:e}")));
        }
        let radius = r2.max(0.0).sqrt();
        let tail = &mut c[s..spec.total];
        loop {
            fill_standard_normal(rng, tail);
            let norm = tail.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-300 {
                tail.iter_mut().for_each(|v| *v *= radius / norm);
                break;
            }
        }
    }
    Ok(CoefficientDraw {
        sequence: c,
        permutation: random_permutation(n_atoms, rng),
        signs: random_signs(n_atoms, rng),
    })
}

fn noise_vector<R: Rng + ?Sized>(
    kind: NoiseKind,
    rho: f64,
    d: usize,
    rng: &mut R,
) -> Option<DVector<f64>> {
    match kind {
        NoiseKind::None => None,
        NoiseKind::Gaussian => {
            let mut r = DVector::zeros(d);
            fill_standard_normal(rng, r.as_mut_slice());
            Some(r * rho)
        }
        NoiseKind::Bernoulli => Some(DVector::from_fn(d, |_, _| rho * random_sign(rng))),
    }
}

/// Generates `n` signals from the decaying-coefficient model.
pub fn synthesize<R: Rng + ?Sized>(
    dico: &Dictionary,
    spec: &CoefficientSpec,
    n: usize,
    rng: &mut R,
    keep_provenance: bool,
) -> Result<SignalBatch> {
    spec.validate(dico.n_atoms())?;
    let d = dico.dim();
    let mut signals = DMatrix::zeros(d, n);
    let mut provenance = keep_provenance.then(|| Vec::with_capacity(n));
    for col in 0..n {
        let draw = draw_table1_coefficients(spec, dico.n_atoms(), rng)?;
        let x = draw.coefficients();
        let mut y = dico.atoms() * &x;
        let noise = noise_vector(spec.noise, spec.rho, d, rng);
        if let Some(r) = &noise {
            y += r;
            y /= (1.0 + r.norm_squared()).sqrt();
        }
        signals.set_column(col, &y);
        if let Some(p) = provenance.as_mut() {
            p.push(Provenance { draw, noise });
        }
    }
    Ok(SignalBatch {
        signals,
        provenance,
    })
}

/// Generates `n` noiseless signals from the simple symmetric model.
pub fn draw_simple_signals<R: Rng + ?Sized>(
    dico: &Dictionary,
    seq: &SimpleSequence,
    n: usize,
    rng: &mut R,
) -> Result<SignalBatch> {
    let k = dico.n_atoms();
    if seq.len() != k {
        return Err(Error::invalid(format!(
            "sequence length {} differs from atom count {k}",
            seq.len()
        )));
    }
    let mut signals = DMatrix::zeros(dico.dim(), n);
    let mut provenance = Vec::with_capacity(n);
    for col in 0..n {
        let draw = CoefficientDraw {
            sequence: seq.values().to_vec(),
            permutation: random_permutation(k, rng),
            signs: random_signs(k, rng),
        };
        signals.set_column(col, &(dico.atoms() * draw.coefficients()));
        provenance.push(Provenance { draw, noise: None });
    }
    Ok(SignalBatch {
        signals,
        provenance: Some(provenance),
    })
}

/// Absolute values sorted in nonincreasing order.
pub fn nonincreasing_rearrangement(x: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = x.iter().map(|a| a.abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Monte Carlo estimate of the mean nonincreasing rearrangement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCoefficients {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Smallest realised gap `c_S(x) - c_{S+1}(x)` over the draws.
    pub min_gap: f64,
    /// Largest realised `||x||_1`, for the coherence term of the exact gap.
    pub max_l1: f64,
    pub draws: usize,
}

impl MeanCoefficients {
    /// `c_bar_1 + ... + c_bar_S`.
    pub fn head_sum(&self, s: usize) -> f64 {
        self.mean[..s].iter().sum()
    }

    /// Standard error of [`Self::head_sum`] assuming independent entries,
    /// bounded above by the sum of per-entry errors.
    pub fn head_sum_stderr(&self, s: usize) -> f64 {
        self.stderr[..s].iter().sum()
    }
}

/// Averages the nonincreasing rearrangement of `|x|` over `draws` samples.
pub fn mean_rearranged_coefficients<R: Rng + ?Sized>(
    spec: &CoefficientSpec,
    n_atoms: usize,
    draws: usize,
    rng: &mut R,
) -> Result<MeanCoefficients> {
    if draws == 0 {
        return Err(Error::invalid("need at least one draw"));
    }
    spec.validate(n_atoms)?;
    let s = spec.sparsity;
    let mut mean = vec![0.0; n_atoms];
    let mut m2 = vec![0.0; n_atoms];
    let mut min_gap = f64::INFINITY;
    let mut max_l1 = 0.0f64;
    for count in 1..=draws {
        let draw = draw_table1_coefficients(spec, n_atoms, rng)?;
        let sorted = nonincreasing_rearrangement(&draw.sequence);
        let next = sorted.get(s).copied().unwrap_or(0.0);
        min_gap = min_gap.min(sorted[s - 1] - next);
        max_l1 = max_l1.max(sorted.iter().sum());
        for (i, &v) in sorted.iter().enumerate() {
            let delta = v - mean[i];
            mean[i] += delta / count as f64;
            m2[i] += delta * (v - mean[i]);
        }
    }
    let stderr = m2
        .iter()
        .map(|&q| {
            if draws > 1 {
                (q / (draws as f64 - 1.0) / draws as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Ok(MeanCoefficients {
        mean,
        stderr,
        min_gap,
        max_l1,
        draws,
    })
}

/// Which gap condition to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapModel {
    /// `c_S - c_{S+1} - 2 mu ||c||_1` (noiseless exact recovery).
    Exact,
    /// `c_S - c_{S+1}` (stable recovery).
    Stable,
}

/// Coefficient gap for a nonincreasing sequence; `c_{K+1} := 0`.
///
/// The value may be negative, meaning the condition fails.
pub fn gap_beta(c: &[f64], mu: f64, s: usize, model: GapModel) -> Result<f64> {
    if s == 0 || s > c.len() {
        return Err(Error::invalid(format!(
            "sparsity {s} outside 1..={} for the gap",
            c.len()
        )));
    }
    if c.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("gap needs a nonincreasing sequence"));
    }
    let next = c.get(s).copied().unwrap_or(0.0);
    let gap = c[s - 1] - next;
    Ok(match model {
        GapModel::Stable => gap,
        GapModel::Exact => gap - 2.0 * mu * c.iter().map(|v| v.abs()).sum::<f64>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::zoo;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn single_entry_is_renormalised() {
        for b in [0.0, 0.3, 0.9] {
            let spec = CoefficientSpec::noiseless(1, b, 1);
            let draw = draw_table1_coefficients(&spec, 5, &mut rng(1)).unwrap();
            assert_eq!(draw.sequence[0], 1.0);
            assert!(draw.sequence[1..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn flat_two_sparse_when_b_zero() {
        let spec = CoefficientSpec::noiseless(2, 0.0, 2);
        let draw = draw_table1_coefficients(&spec, 4, &mut rng(2)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((draw.sequence[0] - h).abs() < 1e-15);
        assert!((draw.sequence[1] - h).abs() < 1e-15);
    }

    #[test]
    fn zero_tail_when_b_zero_and_s_one() {
        let spec = CoefficientSpec::noiseless(1, 0.0, 2);
        let draw = draw_table1_coefficients(&spec, 3, &mut rng(3)).unwrap();
        assert_eq!(draw.sequence, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn spec_validation() {
        assert!(CoefficientSpec::noiseless(0, 0.1, 1).validate(4).is_err());
        assert!(CoefficientSpec::noiseless(3, 0.1, 2).validate(4).is_err());
        assert!(CoefficientSpec::noiseless(1, 0.1, 5).validate(4).is_err());
        assert!(CoefficientSpec::noiseless(1, 1.0, 1).validate(4).is_err());
        let mut bad = CoefficientSpec::noiseless(1, 0.1, 1);
        bad.rho = 0.1;
        assert!(bad.validate(4).is_err());
        assert!(CoefficientSpec::noiseless(1, 0.1, 1)
            .with_noise(NoiseKind::Gaussian, 0.0)
            .validate(4)
            .is_ok());
    }

    #[test]
    fn noiseless_provenance_reconstructs_signals() {
        let dico = zoo::canonical_half_hadamard(8).unwrap();
        let spec = CoefficientSpec::noiseless(2, 0.2, 4);
        let batch = synthesize(&dico, &spec, 200, &mut rng(4), true).unwrap();
        for (n, p) in batch.provenance.as_ref().unwrap().iter().enumerate() {
            let y = dico.atoms() * p.draw.coefficients();
            assert!((y - batch.signals.column(n)).amax() < 1e-12);
        }
    }

    #[test]
    fn orthonormal_noiseless_signals_are_unit() {
        let dico = zoo::canonical(6).unwrap();
        let spec = CoefficientSpec::noiseless(2, 0.3, 5);
        let batch = synthesize(&dico, &spec, 500, &mut rng(5), false).unwrap();
        assert!(batch.provenance.is_none());
        for y in batch.signals.column_iter() {
            assert!((y.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_signal_matches_provenance() {
        let dico = zoo::canonical_half_hadamard(4).unwrap();
        for kind in [NoiseKind::Gaussian, NoiseKind::Bernoulli] {
            let spec = CoefficientSpec::noiseless(1, 0.1, 2).with_noise(kind, 0.2);
            let batch = synthesize(&dico, &spec, 50, &mut rng(6), true).unwrap();
            for (n, p) in batch.provenance.as_ref().unwrap().iter().enumerate() {
                let r = p.noise.as_ref().unwrap();
                if kind == NoiseKind::Bernoulli {
                    assert!(r.iter().all(|v| (v.abs() - 0.2).abs() < 1e-15));
                }
                let y = (dico.atoms() * p.draw.coefficients() + r) / (1.0 + r.norm_squared()).sqrt();
                assert!((y - batch.signals.column(n)).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn simple_signals() {
        let dico = zoo::canonical_half_hadamard(4).unwrap();
        let seq = SimpleSequence::first_unit(6).unwrap();
        let batch = draw_simple_signals(&dico, &seq, 100, &mut rng(7)).unwrap();
        for y in batch.signals.column_iter() {
            let hit = (0..6).any(|i| {
                (y - dico.atom(i)).amax() < 1e-15 || (y + dico.atom(i)).amax() < 1e-15
            });
            assert!(hit);
        }
        assert!(draw_simple_signals(&dico, &seq, 0, &mut rng(7)).unwrap().is_empty());
        let a = draw_simple_signals(&dico, &seq, 20, &mut rng(8)).unwrap();
        let b = draw_simple_signals(&dico, &seq, 20, &mut rng(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn simple_sequence_validation() {
        assert!(SimpleSequence::new(vec![0.6, 0.8]).is_err());
        assert!(SimpleSequence::new(vec![0.8, 0.5]).is_err());
        assert!(SimpleSequence::new(vec![0.8, 0.6]).is_ok());
    }

    #[test]
    fn mean_rearranged_exact_cases() {
        let m = mean_rearranged_coefficients(&CoefficientSpec::noiseless(1, 0.0, 1), 4, 100, &mut rng(9))
            .unwrap();
        assert_eq!(m.mean, vec![1.0, 0.0, 0.0, 0.0]);
        let m = mean_rearranged_coefficients(&CoefficientSpec::noiseless(1, 0.1, 1), 4, 100, &mut rng(9))
            .unwrap();
        assert_eq!(m.mean[0], 1.0);
        let m = mean_rearranged_coefficients(&CoefficientSpec::noiseless(2, 0.0, 2), 4, 100, &mut rng(9))
            .unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m.mean[0] - h).abs() < 1e-15 && (m.mean[1] - h).abs() < 1e-15);
        assert!(m.stderr[0] < 1e-15);
        assert!(mean_rearranged_coefficients(&CoefficientSpec::noiseless(1, 0.0, 1), 4, 0, &mut rng(9)).is_err());
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gap_beta(&[1.0, 0.0, 0.0], 0.0, 1, GapModel::Exact).unwrap(), 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let flat = [h, h, 0.0];
        assert_eq!(gap_beta(&flat, 0.0, 1, GapModel::Exact).unwrap(), 0.0);
        let g = gap_beta(&flat, 0.1, 1, GapModel::Exact).unwrap();
        assert!((g + 0.2 * 2f64.sqrt()).abs() < 1e-15);
        let g = gap_beta(&[0.8, 0.6, 0.0], 0.05, 1, GapModel::Exact).unwrap();
        assert!((g - 0.06).abs() < 1e-15);
        assert!((gap_beta(&[0.8, 0.6, 0.0], 0.05, 1, GapModel::Stable).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(gap_beta(&[0.8, 0.6], 0.0, 2, GapModel::Stable).unwrap(), 0.6);
        assert!(gap_beta(&[0.8, 0.6], 0.0, 3, GapModel::Stable).is_err());
    }
}

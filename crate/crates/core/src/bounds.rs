//! Closed-form conditions and bounds of the asymptotic and finite-sample
//! identification results, plus the noise constant `C_r`.
//!
//! Logarithms are natural. Failure probabilities are returned raw (they are
//! upper bounds and may exceed one); use [`clamp_probability`] for display.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{frame_stats, Dictionary};
use crate::random::fill_standard_normal;
use crate::signal::{mean_rearranged_coefficients, CoefficientSpec, GapModel, NoiseKind};

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn log_of(name: &str, arg: f64) -> Result<f64> {
    if arg > 1.0 && arg.is_finite() {
        Ok(arg.ln())
    } else {
        Err(Error::domain(format!("{name}: log argument {arg} must exceed 1")))
    }
}

/// Largest perturbation radius below which the generating dictionary beats
/// every perturbation in the noiseless asymptotic criterion:
/// `beta / (1 + 3 sqrt(log(25 K^2 S sqrt(B) / (beta gamma))))`.
pub fn thm1_eps_bound(beta: f64, k: usize, s: usize, upper: f64, gamma: f64) -> Result<f64> {
    positive("beta", beta)?;
    positive("gamma", gamma)?;
    positive("B", upper)?;
    let (k, s) = (k as f64, s as f64);
    let l = log_of("eps bound", 25.0 * k * k * s * upper.sqrt() / (beta * gamma))?;
    Ok(beta / (1.0 + 3.0 * l.sqrt()))
}

/// Evaluation of the stable asymptotic condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableAsymptotic {
    /// `a = 112 K^2 S (sqrt(B) + 1) / (C_r beta gamma)`.
    pub a: f64,
    /// `beta / sqrt(72 (log a + log log a))`.
    pub rhs: f64,
    /// `max(mu, rho) <= rhs`.
    pub holds: bool,
    /// `12 S K^2 sqrt(B) / (C_r gamma) * exp(-beta^2 / (72 max(mu^2, rho^2)))`.
    pub asymptotic_distance: f64,
}

fn coherence_noise_decay(beta: f64, mu: f64, rho: f64) -> f64 {
    let m = mu.max(rho);
    if m == 0.0 {
        0.0
    } else {
        (-beta * beta / (72.0 * m * m)).exp()
    }
}

fn rhs_from_a(beta: f64, a: f64) -> Result<f64> {
    if a.is_nan() || a <= std::f64::consts::E {
        return Err(Error::domain(format!("a = {a} must exceed e")));
    }
    let la = a.ln();
    Ok(beta / (72.0 * (la + la.ln())).sqrt())
}

#[allow(clippy::too_many_arguments)]
pub fn thm2_check(
    mu: f64,
    rho: f64,
    beta: f64,
    k: usize,
    s: usize,
    upper: f64,
    c_r: f64,
    gamma: f64,
) -> Result<StableAsymptotic> {
    positive("beta", beta)?;
    positive("gamma", gamma)?;
    positive("B", upper)?;
    positive("C_r", c_r)?;
    if !(mu >= 0.0 && rho >= 0.0) {
        return Err(Error::domain("mu and rho must be nonnegative"));
    }
    let (kf, sf) = (k as f64, s as f64);
    let a = 112.0 * kf * kf * sf * (upper.sqrt() + 1.0) / (c_r * beta * gamma);
    let rhs = rhs_from_a(beta, a)?;
    let prefactor = 12.0 * sf * kf * kf * upper.sqrt() / (c_r * gamma);
    Ok(StableAsymptotic {
        a,
        rhs,
        holds: mu.max(rho) <= rhs,
        asymptotic_distance: prefactor * coherence_noise_decay(beta, mu, rho),
    })
}

/// `2 exp(-N eps^2 gamma^2 / (129 S^2 K^2 B) + K d log(25 S K sqrt(B) / (eps gamma)))`.
#[allow(clippy::too_many_arguments)]
pub fn thm3_failure_probability(
    n: usize,
    eps: f64,
    k: usize,
    d: usize,
    s: usize,
    upper: f64,
    gamma: f64,
) -> Result<f64> {
    positive("eps", eps)?;
    positive("gamma", gamma)?;
    positive("B", upper)?;
    let (nf, kf, df, sf) = (n as f64, k as f64, d as f64, s as f64);
    let exponent = -nf * eps * eps * gamma * gamma / (129.0 * sf * sf * kf * kf * upper)
        + kf * df * (25.0 * sf * kf * upper.sqrt() / (eps * gamma)).ln();
    Ok(2.0 * exponent.exp())
}

/// `eps <= beta / (1 + 3 sqrt(log(50 K^2 S sqrt(B) / (beta gamma))))`.
pub fn thm3_precision_check(
    eps: f64,
    beta: f64,
    k: usize,
    s: usize,
    upper: f64,
    gamma: f64,
) -> Result<bool> {
    positive("eps", eps)?;
    Ok(eps <= thm3_precision_limit(beta, k, s, upper, gamma)?)
}

/// Right-hand side of [`thm3_precision_check`].
pub fn thm3_precision_limit(beta: f64, k: usize, s: usize, upper: f64, gamma: f64) -> Result<f64> {
    positive("beta", beta)?;
    positive("gamma", gamma)?;
    positive("B", upper)?;
    let (kf, sf) = (k as f64, s as f64);
    let l = log_of("precision", 50.0 * kf * kf * sf * upper.sqrt() / (beta * gamma))?;
    Ok(beta / (1.0 + 3.0 * l.sqrt()))
}

/// Distance to the local maximum guaranteed in the noiseless finite case.
pub fn thm3_max_distance(eps: f64, k: usize) -> f64 {
    eps + eps * eps / (4.0 * k as f64)
}

/// Quantities of the stable finite-sample result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableFinite {
    /// `max(eps, 16 S K^2 (sqrt(B)+1)/(C_r gamma) exp(-beta^2/(72 max(mu^2, rho^2))))`.
    pub eps_mu_rho: f64,
    pub failure_probability: f64,
    /// `eps_mu_rho + eps_mu_rho^2 / (16 K)`.
    pub max_distance: f64,
    /// `a = 150 K^2 S (sqrt(B) + 1) / (C_r beta gamma)`.
    pub a: f64,
    /// `beta / (9/4 + 9 sqrt(log a))`.
    pub precision_limit: f64,
    /// `beta / sqrt(72 (log a + log log a))`.
    pub coherence_noise_limit: f64,
    pub conditions_hold: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn thm4_quantities(
    n: usize,
    eps: f64,
    mu: f64,
    rho: f64,
    k: usize,
    d: usize,
    s: usize,
    upper: f64,
    c_r: f64,
    gamma: f64,
    beta: f64,
) -> Result<StableFinite> {
    positive("eps", eps)?;
    positive("beta", beta)?;
    positive("gamma", gamma)?;
    positive("B", upper)?;
    positive("C_r", c_r)?;
    if !(mu >= 0.0 && rho >= 0.0) {
        return Err(Error::domain("mu and rho must be nonnegative"));
    }
    let (nf, kf, df, sf) = (n as f64, k as f64, d as f64, s as f64);
    let root_b1 = upper.sqrt() + 1.0;
    let floor = 16.0 * sf * kf * kf * root_b1 / (c_r * gamma) * coherence_noise_decay(beta, mu, rho);
    let eps_mu_rho = eps.max(floor);
    let exponent = -nf * eps_mu_rho * eps_mu_rho * gamma * gamma
        / (513.0 * c_r * c_r * sf * sf * kf * kf * root_b1 * root_b1)
        + kf * df * (49.0 * sf * kf * root_b1 / (eps_mu_rho * gamma)).ln();
    let a = 150.0 * kf * kf * sf * root_b1 / (c_r * beta * gamma);
    let coherence_noise_limit = rhs_from_a(beta, a)?;
    let precision_limit = beta / (2.25 + 9.0 * a.ln().sqrt());
    Ok(StableFinite {
        eps_mu_rho,
        failure_probability: 2.0 * exponent.exp(),
        max_distance: eps_mu_rho + eps_mu_rho * eps_mu_rho / (16.0 * kf),
        a,
        precision_limit,
        coherence_noise_limit,
        conditions_hold: eps <= precision_limit && mu.max(rho) <= coherence_noise_limit,
    })
}

/// Clamps a raw probability bound into `[0, 1]`.
pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Estimate of `C_r = E (1 + ||r||^2)^(-1/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConstant {
    pub estimate: f64,
    pub stderr: f64,
}

/// `C_r` for noise of the given kind: exact `(1 + d rho^2)^(-1/2)` for
/// Bernoulli noise, Monte Carlo over `draws` samples for Gaussian noise.
pub fn noise_constant<R: Rng + ?Sized>(
    rho: f64,
    d: usize,
    kind: NoiseKind,
    draws: usize,
    rng: &mut R,
) -> Result<NoiseConstant> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho must be finite and nonnegative"));
    }
    if rho == 0.0 || kind == NoiseKind::None {
        return Ok(NoiseConstant {
            estimate: 1.0,
            stderr: 0.0,
        });
    }
    match kind {
        NoiseKind::Bernoulli => Ok(NoiseConstant {
            estimate: 1.0 / (1.0 + d as f64 * rho * rho).sqrt(),
            stderr: 0.0,
        }),
        NoiseKind::Gaussian => {
            if draws == 0 {
                return Err(Error::invalid("Monte Carlo C_r needs at least one draw"));
            }
            let mut r = vec![0.0; d];
            let (mut mean, mut m2) = (0.0, 0.0);
            for count in 1..=draws {
                fill_standard_normal(rng, &mut r);
                let norm2: f64 = r.iter().map(|v| v * v).sum::<f64>() * rho * rho;
                let v = 1.0 / (1.0 + norm2).sqrt();
                let delta = v - mean;
                mean += delta / count as f64;
                m2 += delta * (v - mean);
            }
            let stderr = if draws > 1 {
                (m2 / (draws as f64 - 1.0) / draws as f64).sqrt()
            } else {
                0.0
            };
            Ok(NoiseConstant {
                estimate: mean,
                stderr,
            })
        }
        NoiseKind::None => unreachable!(),
    }
}

/// Lower bound `(1 - e^{-d}) / sqrt(1 + 5 d rho^2)` on `C_r` for subgaussian noise.
pub fn noise_constant_lower_bound(rho: f64, d: usize) -> f64 {
    let df = d as f64;
    (1.0 - (-df).exp()) / (1.0 + 5.0 * df * rho * rho).sqrt()
}

/// Everything the theorems need, evaluated for one dictionary and signal model.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub d: usize,
    pub k: usize,
    pub s: usize,
    pub mu: f64,
    pub lower_frame: f64,
    pub upper_frame: f64,
    pub rho: f64,
    pub beta: f64,
    pub c_bar: Vec<f64>,
    pub c_bar_stderr: Vec<f64>,
    /// `c_bar_1 + ... + c_bar_S`.
    pub gamma: f64,
    /// `gamma` over `c_bar +- 2 stderr`.
    pub gamma_interval: (f64, f64),
    pub c_r: NoiseConstant,
    pub eps_max_thm1: Option<f64>,
    pub eps_max_thm1_interval: Option<(f64, f64)>,
    pub thm2: Option<StableAsymptotic>,
    /// `(N, eps, failure probability, precision check)` rows.
    pub thm3: Vec<(usize, f64, f64, bool)>,
    /// `(N, eps, quantities)` rows.
    pub thm4: Vec<(usize, f64, StableFinite)>,
}

/// Inputs to [`bound_report`] beyond dictionary and coefficient model.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRequest {
    /// Almost-sure gap; estimated from the Monte Carlo draws when `None`.
    pub beta: Option<f64>,
    pub sample_sizes: Vec<usize>,
    pub target_precisions: Vec<f64>,
    /// Monte Carlo draws for `c_bar` (and `C_r` with Gaussian noise).
    pub draws: usize,
}

/// Evaluates the theorem quantities for `dico` under `spec`.
///
/// Theorem evaluations whose domain conditions fail are reported as `None`
/// (or omitted rows) rather than aborting the whole report.
pub fn bound_report<R: Rng + ?Sized>(
    dico: &Dictionary,
    spec: &CoefficientSpec,
    req: &BoundRequest,
    rng: &mut R,
) -> Result<BoundReport> {
    let stats = frame_stats(dico)?;
    let (d, k, s) = (dico.dim(), dico.n_atoms(), spec.sparsity);
    let c = mean_rearranged_coefficients(spec, k, req.draws, rng)?;
    let c_r = noise_constant(spec.rho, d, spec.noise, req.draws, rng)?;
    let mu = stats.coherence;
    let model = if spec.rho == 0.0 { GapModel::Exact } else { GapModel::Stable };
    let beta = match req.beta {
        Some(b) => b,
        None => match model {
            GapModel::Stable => c.min_gap,
            GapModel::Exact => c.min_gap - 2.0 * mu * c.max_l1,
        },
    };
    let gamma = c.head_sum(s);
    let lo: f64 = (0..s).map(|i| (c.mean[i] - 2.0 * c.stderr[i]).max(0.0)).sum();
    let hi: f64 = (0..s).map(|i| c.mean[i] + 2.0 * c.stderr[i]).sum();
    let upper = stats.upper;

    let eps_max_thm1 = thm1_eps_bound(beta, k, s, upper, gamma).ok();
    let eps_max_thm1_interval = match (
        thm1_eps_bound(beta, k, s, upper, lo),
        thm1_eps_bound(beta, k, s, upper, hi),
    ) {
        (Ok(a), Ok(b)) => Some((a.min(b), a.max(b))),
        _ => None,
    };
    let thm2 = thm2_check(mu, spec.rho, beta, k, s, upper, c_r.estimate, gamma).ok();
    let mut thm3 = Vec::new();
    let mut thm4 = Vec::new();
    for &n in &req.sample_sizes {
        for &eps in &req.target_precisions {
            if let (Ok(p), Ok(ok)) = (
                thm3_failure_probability(n, eps, k, d, s, upper, gamma),
                thm3_precision_check(eps, beta, k, s, upper, gamma),
            ) {
                thm3.push((n, eps, p, ok));
            }
            if let Ok(q) = thm4_quantities(n, eps, mu, spec.rho, k, d, s, upper, c_r.estimate, gamma, beta) {
                thm4.push((n, eps, q));
            }
        }
    }
    Ok(BoundReport {
        d,
        k,
        s,
        mu,
        lower_frame: stats.lower,
        upper_frame: upper,
        rho: spec.rho,
        beta,
        c_bar: c.mean,
        c_bar_stderr: c.stderr,
        gamma,
        gamma_interval: (lo, hi),
        c_r,
        eps_max_thm1,
        eps_max_thm1_interval,
        thm2,
        thm3,
        thm4,
    })
}

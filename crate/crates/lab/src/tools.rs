//! The `bounds` and `probe` subcommands.

use std::io::Write;
use std::path::Path;

use itkm_core::bounds::{bound_report, BoundRequest};
use itkm_core::criterion::local_max_probe;
use itkm_core::linalg::zoo;
use itkm_core::signal::{CoefficientSpec, SimpleSequence};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{derive_seed, Experiment, ExperimentConfig};
use crate::error::{LabError, Result};

/// One named quantity of a bound report.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub d: usize,
    pub k: usize,
    pub s: usize,
    pub total: usize,
    pub b: f64,
    pub rho: f64,
    pub quantity: String,
    pub n: Option<usize>,
    pub eps: Option<f64>,
    pub value: f64,
}

pub const BOUNDS_HEADER: [&str; 10] = ["dims", "K", "S", "T", "b", "rho", "quantity", "N", "eps", "value"];

/// Theorem quantities for every curve, spread and noise level, using the
/// canonical plus half-Hadamard dictionary of each dimension.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for c in &cfg.curves {
        let dico = zoo::canonical_half_hadamard(c.d)?;
        for &b in &cfg.b_grid {
            for &rho2 in &cfg.rho2_grid {
                let rho = rho2.sqrt();
                let spec = CoefficientSpec::noiseless(c.s, b, c.t).with_noise(cfg.noise, rho);
                let key = format!("d={};S={};T={};b={b};rho={rho}", c.d, c.s, c.t);
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "bounds", &key, 0));
                let req = BoundRequest {
                    beta: cfg.beta,
                    sample_sizes: cfg.n_grid.clone(),
                    target_precisions: cfg.eps_grid.clone(),
                    draws: cfg.draws,
                };
                let r = bound_report(&dico, &spec, &req, &mut rng)?;
                let mut push = |q: &str, n: Option<usize>, eps: Option<f64>, value: f64| {
                    rows.push(BoundRow {
                        d: c.d,
                        k: dico.n_atoms(),
                        s: c.s,
                        total: c.t,
                        b,
                        rho,
                        quantity: q.to_string(),
                        n,
                        eps,
                        value,
                    })
                };
                push("mu", None, None, r.mu);
                push("frame_lower", None, None, r.lower_frame);
                push("frame_upper", None, None, r.upper_frame);
                push("beta", None, None, r.beta);
                push("gamma", None, None, r.gamma);
                push("gamma_low", None, None, r.gamma_interval.0);
                push("gamma_high", None, None, r.gamma_interval.1);
                push("c_r", None, None, r.c_r.estimate);
                push("c_r_stderr", None, None, r.c_r.stderr);
                for (i, (m, se)) in r.c_bar.iter().zip(&r.c_bar_stderr).enumerate().take(c.t + 1) {
                    push(&format!("c_bar_{}", i + 1), None, None, *m);
                    push(&format!("c_bar_{}_stderr", i + 1), None, None, *se);
                }
                if let Some(v) = r.eps_max_thm1 {
                    push("exact_asymptotic_eps_max", None, None, v);
                }
                if let Some(t) = r.thm2 {
                    push("stable_asymptotic_a", None, None, t.a);
                    push("stable_asymptotic_rhs", None, None, t.rhs);
                    push("stable_asymptotic_holds", None, None, t.holds as u8 as f64);
                    push("stable_asymptotic_distance", None, None, t.asymptotic_distance);
                }
                for &(n, eps, p, ok) in &r.thm3 {
                    push("exact_finite_failure_probability", Some(n), Some(eps), p);
                    push("exact_finite_precision_ok", Some(n), Some(eps), ok as u8 as f64);
                }
                for (n, eps, q) in &r.thm4 {
                    let (n, eps) = (Some(*n), Some(*eps));
                    push("stable_finite_eps_mu_rho", n, eps, q.eps_mu_rho);
                    push("stable_finite_failure_probability", n, eps, q.failure_probability);
                    push("stable_finite_max_distance", n, eps, q.max_distance);
                    push("stable_finite_conditions_hold", n, eps, q.conditions_hold as u8 as f64);
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_bounds<W: Write>(rows: &[BoundRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BOUNDS_HEADER)?;
    for r in rows {
        w.write_record([
            r.d.to_string(),
            r.k.to_string(),
            r.s.to_string(),
            r.total.to_string(),
            r.b.to_string(),
            r.rho.to_string(),
            r.quantity.clone(),
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            r.eps.map(|e| e.to_string()).unwrap_or_default(),
            r.value.to_string(),
        ])?;
    }
    w.flush().map_err(|e| LabError::Csv(e.into()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub d: usize,
    pub s: usize,
    pub eps: f64,
    pub direction: usize,
    pub base: f64,
    pub value: f64,
}

pub const PROBE_HEADER: [&str; 7] = ["dims", "S", "eps", "direction", "base", "value", "difference"];

/// Exact expectation at the canonical basis and at random perturbations of
/// it, for the configured coefficient sequence.
pub fn run_probe(cfg: &ExperimentConfig) -> Result<Vec<ProbeRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for c in &cfg.curves {
        if cfg.sequence.len() > c.d {
            return Err(LabError::config(format!(
                "sequence has {} entries but d = {}",
                cfg.sequence.len(),
                c.d
            )));
        }
        let mut values = cfg.sequence.clone();
        values.resize(c.d, 0.0);
        let seq = SimpleSequence::new(values)?;
        let phi = zoo::canonical(c.d)?;
        for &eps in &cfg.eps_grid {
            let key = format!("d={};S={};eps={eps}", c.d, c.s);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, Experiment::Probe.id(), &key, 0));
            let report = local_max_probe(&phi, &seq, c.s, cfg.directions, eps, &mut rng)?;
            for (j, v) in report.perturbed_values.iter().enumerate() {
                rows.push(ProbeRow {
                    d: c.d,
                    s: c.s,
                    eps,
                    direction: j,
                    base: report.base_value,
                    value: *v,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_probe<W: Write>(rows: &[ProbeRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROBE_HEADER)?;
    for r in rows {
        w.write_record([
            r.d.to_string(),
            r.s.to_string(),
            r.eps.to_string(),
            r.direction.to_string(),
            r.base.to_string(),
            r.value.to_string(),
            (r.value - r.base).to_string(),
        ])?;
    }
    w.flush().map_err(|e| LabError::Csv(e.into()))?;
    Ok(())
}

pub(crate) fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

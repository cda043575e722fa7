//! Trial execution for the recovery experiments.

use std::time::Instant;

use itkm_core::criterion::objective_finite;
use itkm_core::itkm::{itkm_run, ItkmConfig, Safeguard};
use itkm_core::ksvd::ksvd1_run;
use itkm_core::linalg::{
    distance_matched, distance_raw, distance_sign_invariant, zoo, Dictionary,
};
use itkm_core::signal::{synthesize, CoefficientSpec, NoiseKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{derive_seed, Experiment, ExperimentConfig};
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Itkm,
    Ksvd,
}

impl Algorithm {
    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Itkm => "itkm",
            Algorithm::Ksvd => "ksvd",
        }
    }
}

/// One parameter combination of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub experiment: Experiment,
    pub algorithm: Algorithm,
    pub d: usize,
    pub k: usize,
    pub s: usize,
    pub total: usize,
    pub b: f64,
    pub rho: f64,
    pub n: usize,
    /// Skew of the three-dimensional basis (fig1a only).
    pub t: Option<f64>,
}

impl GridPoint {
    /// Value of the `experiment` column.
    pub fn label(&self) -> String {
        match self.experiment {
            Experiment::Fig1a => format!("fig1a/{}", self.algorithm.id()),
            e => e.id().to_string(),
        }
    }

    /// Key of the data-generating parameters; both algorithms of fig1a
    /// share it and hence see the same signals.
    pub fn data_key(&self) -> String {
        let t = self.t.map(|t| t.to_string()).unwrap_or_default();
        format!(
            "d={};K={};S={};T={};b={};rho={};N={};t={}",
            self.d, self.k, self.s, self.total, self.b, self.rho, self.n, t
        )
    }

    pub fn spec(&self) -> CoefficientSpec {
        CoefficientSpec::noiseless(self.s, self.b, self.total).with_noise(NoiseKind::Gaussian, self.rho)
    }

    pub fn dictionary(&self) -> Result<Dictionary> {
        Ok(match self.t {
            Some(t) => zoo::perturbed_basis_3d(t)?,
            None => zoo::canonical_half_hadamard(self.d)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub point: GridPoint,
    pub trial: usize,
    pub seed: u64,
    pub dist_raw: f64,
    pub dist_sign: f64,
    pub dist_matched: f64,
    /// Finite-sample objective of the learned dictionary.
    pub objective: f64,
    pub safeguard_events: usize,
    pub wall_ms: f64,
}

fn k_of(d: usize) -> usize {
    d + d / 2
}

/// Grid points of a recovery experiment in output order.
pub fn grid_points(cfg: &ExperimentConfig) -> Result<Vec<GridPoint>> {
    let mut points = Vec::new();
    let base = |c: &crate::config::Curve, b: f64, rho: f64, n: usize| GridPoint {
        experiment: cfg.experiment,
        algorithm: Algorithm::Itkm,
        d: c.d,
        k: k_of(c.d),
        s: c.s,
        total: c.t,
        b,
        rho,
        n,
        t: None,
    };
    match cfg.experiment {
        Experiment::Fig1a => {
            let n = cfg.n_grid[0];
            for alg in [Algorithm::Itkm, Algorithm::Ksvd] {
                for &b in &cfg.b_grid {
                    for &t in &cfg.t_grid {
                        points.push(GridPoint {
                            experiment: Experiment::Fig1a,
                            algorithm: alg,
                            d: 3,
                            k: 3,
                            s: 1,
                            total: 2,
                            b,
                            rho: 0.0,
                            n,
                            t: Some(t),
                        });
                    }
                }
            }
        }
        Experiment::Fig1b => {
            for c in &cfg.curves {
                for &b in &cfg.b_grid {
                    for &n in &cfg.n_grid {
                        points.push(base(c, b, 0.0, n));
                    }
                }
            }
        }
        Experiment::Fig2a => {
            for c in &cfg.curves {
                for &b in &cfg.b_grid {
                    points.push(base(c, b, 0.0, cfg.n_grid[0]));
                }
            }
        }
        Experiment::Fig2b => {
            for c in &cfg.curves {
                for &rho2 in &cfg.rho2_grid {
                    points.push(base(c, cfg.b_grid[0], rho2.sqrt(), cfg.n_grid[0]));
                }
            }
        }
        e => return Err(LabError::config(format!("'{e}' is not a recovery experiment"))),
    }
    for p in &points {
        p.spec().validate(p.k)?;
        if p.t.is_none() {
            zoo::canonical_half_hadamard(p.d)?;
        }
    }
    Ok(points)
}

fn algorithm_seed(seed: u64) -> u64 {
    seed.rotate_left(29) ^ 0xd1b5_4a32_d192_ed03
}

/// Runs one trial; everything random is derived from `seed`.
pub fn run_trial(
    point: &GridPoint,
    trial: usize,
    seed: u64,
    iterations: usize,
    safeguard: Safeguard,
    timing: bool,
) -> Result<TrialResult> {
    let start = Instant::now();
    let phi = point.dictionary()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = synthesize(&phi, &point.spec(), point.n, &mut rng, false)?.signals;
    let mut config = ItkmConfig::new(point.s, iterations);
    config.safeguard = safeguard;
    config.seed = algorithm_seed(seed);
    let (learned, trace) = match point.algorithm {
        Algorithm::Itkm => itkm_run(&phi, &y, &config, None)?,
        Algorithm::Ksvd => ksvd1_run(&phi, &y, &config, None)?,
    };
    let objective = objective_finite(&learned, &y, point.s)?;
    Ok(TrialResult {
        point: point.clone(),
        trial,
        seed,
        dist_raw: distance_raw(&phi, &learned)?,
        dist_sign: distance_sign_invariant(&phi, &learned)?,
        dist_matched: distance_matched(&phi, &learned)?.distance,
        objective,
        safeguard_events: trace.total_safeguard_events(),
        wall_ms: if timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        },
    })
}

/// Runs every (grid point, trial) pair of a recovery experiment on
/// `cfg.jobs` threads. Results come back in grid order, trials ascending.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    let points = grid_points(cfg)?;
    let mut tasks = Vec::with_capacity(points.len() * cfg.trials);
    let mut seen = std::collections::HashMap::new();
    for p in &points {
        for trial in 0..cfg.trials {
            let seed = derive_seed(cfg.seed, cfg.experiment.id(), &p.data_key(), trial);
            let id = (p.data_key(), trial);
            if let Some(other) = seen.insert(seed, id.clone()) {
                if other != id {
                    return Err(itkm_core::Error::Internal(format!(
                        "seed collision between {other:?} and {id:?}"
                    ))
                    .into());
                }
            }
            tasks.push((p, trial, seed));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| LabError::config(format!("thread pool: {e}")))?;
    pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, trial, seed)| run_trial(p, trial, seed, cfg.iterations, cfg.safeguard, cfg.timing))
            .collect()
    })
}

fn expect(cfg: &ExperimentConfig, e: Experiment) -> Result<()> {
    if cfg.experiment == e {
        Ok(())
    } else {
        Err(LabError::config(format!("configuration is for '{}', not '{e}'", cfg.experiment)))
    }
}

/// Three-dimensional skewed bases, ITKM against K-SVD.
pub fn run_fig1a(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    expect(cfg, Experiment::Fig1a)?;
    run_experiment(cfg)
}

/// Recovery error against sample size.
pub fn run_fig1b(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    expect(cfg, Experiment::Fig1b)?;
    run_experiment(cfg)
}

/// Recovery error against the decay spread `b` (shrinking gap).
pub fn run_fig2a(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    expect(cfg, Experiment::Fig2a)?;
    run_experiment(cfg)
}

/// Recovery error against the noise variance.
pub fn run_fig2b(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    expect(cfg, Experiment::Fig2b)?;
    run_experiment(cfg)
}

/// Means over the trials of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub point: GridPoint,
    pub trials: usize,
    pub dist_raw: f64,
    pub dist_sign: f64,
    pub dist_matched: f64,
    pub objective: f64,
    pub safeguard_events: f64,
    pub wall_ms: f64,
    /// Standard error of the mean sign-invariant distance.
    pub stderr_dist_sign: f64,
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation over `sqrt(n)`; zero for a single value.
pub fn stderr(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}

/// Groups results by grid point in order of first appearance.
pub fn aggregate(results: &[TrialResult]) -> Vec<Aggregate> {
    let mut groups: Vec<(GridPoint, Vec<&TrialResult>)> = Vec::new();
    for r in results {
        match groups.iter_mut().find(|(p, _)| *p == r.point) {
            Some((_, v)) => v.push(r),
            None => groups.push((r.point.clone(), vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(point, rs)| {
            let col = |f: fn(&TrialResult) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<_>>();
            let sign = col(|r| r.dist_sign);
            Aggregate {
                point,
                trials: rs.len(),
                dist_raw: mean(&col(|r| r.dist_raw)),
                dist_sign: mean(&sign),
                dist_matched: mean(&col(|r| r.dist_matched)),
                objective: mean(&col(|r| r.objective)),
                safeguard_events: mean(&col(|r| r.safeguard_events as f64)),
                wall_ms: mean(&col(|r| r.wall_ms)),
                stderr_dist_sign: stderr(&sign),
            }
        })
        .collect()
}

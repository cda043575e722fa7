//! Experiment configuration: profile defaults, `key = value` files, flag
//! overrides and per-trial seed derivation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use itkm_core::itkm::Safeguard;
use itkm_core::signal::NoiseKind;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Fig1a,
    Fig1b,
    Fig2a,
    Fig2b,
    Bounds,
    Probe,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Fig1a,
        Experiment::Fig1b,
        Experiment::Fig2a,
        Experiment::Fig2b,
        Experiment::Bounds,
        Experiment::Probe,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Fig1a => "fig1a",
            Experiment::Fig1b => "fig1b",
            Experiment::Fig2a => "fig2a",
            Experiment::Fig2b => "fig2b",
            Experiment::Bounds => "bounds",
            Experiment::Probe => "probe",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| LabError::config(format!("unknown experiment '{s}'")))
    }
}

/// `full` runs the reference experiment sizes; `ci` shrinks iterations,
/// trials and sample sizes for quick runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    #[default]
    Full,
    Ci,
}

impl FromStr for Profile {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Profile::Full),
            "ci" => Ok(Profile::Ci),
            other => Err(LabError::config(format!("unknown profile '{other}'"))),
        }
    }
}

/// Dimension, sparsity and total support of one signal-model curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Curve {
    pub d: usize,
    pub s: usize,
    pub t: usize,
}

impl Curve {
    pub fn new(d: usize, s: usize, t: usize) -> Self {
        Self { d, s, t }
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.d, self.s, self.t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub profile: Profile,
    pub seed: u64,
    pub trials: usize,
    pub iterations: usize,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub out: PathBuf,
    /// Record wall-clock times (off by default so output is byte-stable).
    pub timing: bool,
    pub curves: Vec<Curve>,
    pub b_grid: Vec<f64>,
    /// Noise variances `rho^2` per entry.
    pub rho2_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    /// Skew parameters of the three-dimensional bases.
    pub t_grid: Vec<f64>,
    pub safeguard: Safeguard,
    pub noise: NoiseKind,
    /// Target precisions (bounds) or probe radii (probe).
    pub eps_grid: Vec<f64>,
    /// Monte Carlo draws for coefficient and noise statistics.
    pub draws: usize,
    /// Random directions per probe radius.
    pub directions: usize,
    /// Probe coefficient sequence, zero-padded to the dictionary size.
    pub sequence: Vec<f64>,
    pub beta: Option<f64>,
}

fn steps(from: f64, to: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            let v = from + (to - from) * i as f64 / n as f64;
            (v * 1e12).round() / 1e12
        })
        .collect()
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment, profile: Profile) -> Self {
        let ci = profile == Profile::Ci;
        let mut c = Self {
            experiment,
            profile,
            seed: 1,
            trials: if ci { 5 } else { 10 },
            iterations: if ci { 100 } else { 1000 },
            jobs: 0,
            out: PathBuf::from("results"),
            timing: false,
            curves: Vec::new(),
            b_grid: vec![0.1],
            rho2_grid: vec![0.0],
            n_grid: vec![4096],
            t_grid: vec![0.0],
            safeguard: Safeguard::default(),
            noise: NoiseKind::Gaussian,
            eps_grid: vec![0.1],
            draws: 100_000,
            directions: 200,
            sequence: vec![1.0],
            beta: None,
        };
        let fig2_curves = [(8, 1), (16, 1), (16, 2), (8, 2), (16, 3)];
        let fig2_n = if ci { 4096 } else { 16384 };
        match experiment {
            Experiment::Fig1a => {
                c.curves = vec![Curve::new(3, 1, 2)];
                c.t_grid = steps(0.0, 0.5, 5);
                c.b_grid = vec![0.1, 0.2];
            }
            Experiment::Fig1b => {
                c.curves = [4, 8, 16].iter().map(|&d| Curve::new(d, 1, 2)).collect();
                c.b_grid = vec![0.01, 0.1];
                c.n_grid = (7..=14).map(|e| 1usize << e).collect();
            }
            Experiment::Fig2a => {
                c.curves = fig2_curves.iter().map(|&(d, s)| Curve::new(d, s, s + 1)).collect();
                c.b_grid = steps(0.0, 0.1, 10);
                c.n_grid = vec![fig2_n];
            }
            Experiment::Fig2b => {
                c.curves = fig2_curves.iter().map(|&(d, s)| Curve::new(d, s, s)).collect();
                c.rho2_grid = steps(0.0, 0.1, 10);
                c.n_grid = vec![fig2_n];
                if !ci {
                    c.trials = 20;
                }
            }
            Experiment::Bounds => {
                c.curves = vec![Curve::new(8, 1, 1)];
                c.b_grid = vec![0.1];
                c.n_grid = vec![1 << 14, 1 << 20, 1 << 26];
                c.eps_grid = vec![0.01, 0.05];
                if ci {
                    c.draws = 10_000;
                }
            }
            Experiment::Probe => {
                c.curves = vec![Curve::new(4, 1, 1)];
                c.eps_grid = vec![0.1];
            }
        }
        c
    }

    /// Applies one `key = value` setting. Keys accept `-` or `_`.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let bad = |what: &str| LabError::config(format!("{key}: cannot parse '{value}' as {what}"));
        match key.as_str() {
            "seed" => self.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "trials" => self.trials = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "iterations" => self.iterations = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "jobs" => self.jobs = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "out" => self.out = PathBuf::from(value),
            "timing" => self.timing = value.parse().map_err(|_| bad("true or false"))?,
            "curves" => self.curves = parse_curves(value)?,
            "b_grid" => self.b_grid = parse_list(value).map_err(|_| bad("a float list"))?,
            "rho2_grid" => self.rho2_grid = parse_list(value).map_err(|_| bad("a float list"))?,
            "n_grid" => self.n_grid = parse_list(value).map_err(|_| bad("an integer list"))?,
            "n" => self.n_grid = vec![value.parse().map_err(|_| bad("an unsigned integer"))?],
            "t_grid" => self.t_grid = parse_list(value).map_err(|_| bad("a float list"))?,
            "eps_grid" => self.eps_grid = parse_list(value).map_err(|_| bad("a float list"))?,
            "sequence" => self.sequence = parse_list(value).map_err(|_| bad("a float list"))?,
            "draws" => self.draws = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "directions" => self.directions = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "beta" => self.beta = Some(value.parse().map_err(|_| bad("a float"))?),
            "safeguard" => self.safeguard = value.parse()?,
            "noise" => self.noise = value.parse()?,
            "profile" | "experiment" => {
                return Err(LabError::config(format!("'{key}' must be set before other keys")))
            }
            other => return Err(LabError::config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Profile defaults, then the file, then the flag overrides.
    ///
    /// A `profile` given in `overrides` wins over one in the file.
    pub fn resolve(
        experiment: Experiment,
        file: Option<&Path>,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let entries = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
                parse_config_text(&text)?
            }
            None => Vec::new(),
        };
        let profile_of = |list: &[(String, String)]| {
            list.iter().rev().find(|(k, _)| k == "profile").map(|(_, v)| v.clone())
        };
        let profile = match profile_of(overrides).or_else(|| profile_of(&entries)) {
            Some(p) => p.parse()?,
            None => Profile::Full,
        };
        let mut cfg = Self::defaults(experiment, profile);
        for (k, v) in entries.iter().chain(overrides) {
            if k == "profile" {
                continue;
            }
            if k == "experiment" {
                if v.parse::<Experiment>()? != experiment {
                    return Err(LabError::config(format!(
                        "config file is for '{v}', not '{experiment}'"
                    )));
                }
                continue;
            }
            cfg.apply(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(LabError::config(m));
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.iterations == 0 {
            return fail("iterations must be at least 1".into());
        }
        if self.curves.is_empty() {
            return fail("curve list is empty".into());
        }
        for c in &self.curves {
            if c.s == 0 || c.s > c.t {
                return fail(format!("curve {c}: need 1 <= S <= T"));
            }
        }
        let grids: [(&str, usize); 6] = [
            ("b_grid", self.b_grid.len()),
            ("rho2_grid", self.rho2_grid.len()),
            ("n_grid", self.n_grid.len()),
            ("t_grid", self.t_grid.len()),
            ("eps_grid", self.eps_grid.len()),
            ("sequence", self.sequence.len()),
        ];
        if let Some((name, _)) = grids.iter().find(|(_, n)| *n == 0) {
            return fail(format!("{name} is empty"));
        }
        if let Some(b) = self.b_grid.iter().find(|b| !(0.0..1.0).contains(*b)) {
            return fail(format!("b = {b} outside [0, 1)"));
        }
        if let Some(r) = self.rho2_grid.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return fail(format!("rho^2 = {r} must be finite and nonnegative"));
        }
        if self.n_grid.contains(&0) {
            return fail("sample sizes must be positive".into());
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(0.0..=0.5).contains(*t)) {
            return fail(format!("t = {t} outside [0, 0.5]"));
        }
        if self.draws == 0 || self.directions == 0 {
            return fail("draws and directions must be positive".into());
        }
        Ok(())
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| LabError::config(format!("line {}: expected 'key = value'", no + 1)))?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, T::Err> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

/// Parses `d:S[:T]` items separated by commas; `T` defaults to `S`.
pub fn parse_curves(value: &str) -> Result<Vec<Curve>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<usize> = item
                .split(':')
                .map(|p| p.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| LabError::config(format!("bad curve '{item}'")))?;
            match parts[..] {
                [d, s] => Ok(Curve::new(d, s, s)),
                [d, s, t] => Ok(Curve::new(d, s, t)),
                _ => Err(LabError::config(format!("bad curve '{item}', expected d:S[:T]"))),
            }
        })
        .collect()
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable seed of one trial: FNV-1a over the master seed, experiment id,
/// grid-point key and trial index, finished with a splitmix64 mix.
pub fn derive_seed(master: u64, experiment: &str, grid_key: &str, trial: usize) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &master.to_le_bytes());
    h = fnv1a(h, experiment.as_bytes());
    h = fnv1a(h, &[0x1f]);
    h = fnv1a(h, grid_key.as_bytes());
    h = fnv1a(h, &[0x1f]);
    h = fnv1a(h, &(trial as u64).to_le_bytes());
    splitmix64(h)
}

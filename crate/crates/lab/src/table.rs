//! CSV results tables.
//!
//! Each grid point contributes one row per trial followed by one aggregate
//! row with `trial = -1`, an empty seed, per-column means and the
//! `mean_dist_sign`/`stderr_dist_sign` columns filled.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{LabError, Result};
use crate::harness::{aggregate, TrialResult};

pub const HEADER: [&str; 19] = [
    "experiment",
    "dims",
    "K",
    "S",
    "T",
    "b",
    "rho",
    "N",
    "t",
    "trial",
    "seed",
    "dist_raw",
    "dist_sign",
    "dist_matched",
    "objective",
    "safeguard_events",
    "wall_ms",
    "mean_dist_sign",
    "stderr_dist_sign",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(results: &[TrialResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for agg in aggregate(results) {
        let p = &agg.point;
        let prefix = [
            p.label(),
            p.d.to_string(),
            p.k.to_string(),
            p.s.to_string(),
            p.total.to_string(),
            p.b.to_string(),
            p.rho.to_string(),
            p.n.to_string(),
            opt(p.t),
        ];
        for r in results.iter().filter(|r| r.point == *p) {
            let mut row = prefix.to_vec();
            row.extend([
                r.trial.to_string(),
                r.seed.to_string(),
                r.dist_raw.to_string(),
                r.dist_sign.to_string(),
                r.dist_matched.to_string(),
                r.objective.to_string(),
                r.safeguard_events.to_string(),
                r.wall_ms.to_string(),
                String::new(),
                String::new(),
            ]);
            w.write_record(&row)?;
        }
        let mut row = prefix.to_vec();
        row.extend([
            "-1".to_string(),
            String::new(),
            agg.dist_raw.to_string(),
            agg.dist_sign.to_string(),
            agg.dist_matched.to_string(),
            agg.objective.to_string(),
            agg.safeguard_events.to_string(),
            agg.wall_ms.to_string(),
            agg.dist_sign.to_string(),
            agg.stderr_dist_sign.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| LabError::Csv(e.into()))?;
    Ok(())
}

/// Writes the table to `path`, creating parent directories.
pub fn emit_csv(results: &[TrialResult], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    write_csv(results, std::io::BufWriter::new(file))
}

/// One parsed table row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub experiment: String,
    pub d: usize,
    pub k: usize,
    pub s: usize,
    pub total: usize,
    pub b: f64,
    pub rho: f64,
    pub n: usize,
    pub t: Option<f64>,
    pub trial: i64,
    pub seed: Option<u64>,
    pub dist_raw: f64,
    pub dist_sign: f64,
    pub dist_matched: f64,
    pub objective: f64,
    pub safeguard_events: f64,
    pub wall_ms: f64,
    pub mean_dist_sign: Option<f64>,
    pub stderr_dist_sign: Option<f64>,
}

impl Row {
    pub fn is_aggregate(&self) -> bool {
        self.trial < 0
    }

    /// Whether two rows describe the same grid point.
    pub fn same_point(&self, other: &Row) -> bool {
        self.experiment == other.experiment
            && (self.d, self.k, self.s, self.total, self.n) == (other.d, other.k, other.s, other.total, other.n)
            && self.b == other.b
            && self.rho == other.rho
            && self.t == other.t
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| LabError::config(format!("column '{}': bad value in {rec:?}", HEADER[i])))
}

fn optional<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<Option<T>> {
    match rec.get(i) {
        Some("") | None => Ok(None),
        Some(_) => field(rec, i).map(Some),
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(LabError::config("unexpected CSV header"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(Row {
            experiment: rec[0].to_string(),
            d: field(&rec, 1)?,
            k: field(&rec, 2)?,
            s: field(&rec, 3)?,
            total: field(&rec, 4)?,
            b: field(&rec, 5)?,
            rho: field(&rec, 6)?,
            n: field(&rec, 7)?,
            t: optional(&rec, 8)?,
            trial: field(&rec, 9)?,
            seed: optional(&rec, 10)?,
            dist_raw: field(&rec, 11)?,
            dist_sign: field(&rec, 12)?,
            dist_matched: field(&rec, 13)?,
            objective: field(&rec, 14)?,
            safeguard_events: field(&rec, 15)?,
            wall_ms: field(&rec, 16)?,
            mean_dist_sign: optional(&rec, 17)?,
            stderr_dist_sign: optional(&rec, 18)?,
        });
    }
    Ok(rows)
}

pub fn parse_csv(path: &Path) -> Result<Vec<Row>> {
    let file = std::fs::File::open(path).map_err(|e| LabError::io(path, e))?;
    read_csv(std::io::BufReader::new(file))
}

//! Subcommand driver shared by the binary and the tests.

use std::path::PathBuf;

use crate::analysis::{loglog_slope, max_min_ratio};
use crate::config::{Experiment, ExperimentConfig};
use crate::error::Result;
use crate::harness::{aggregate, run_experiment};
use crate::svg::emit_svg;
use crate::table::emit_csv;
use crate::tools::{create, run_bounds, run_probe, write_bounds, write_probe};

/// Files written by one invocation and a human-readable summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    let id = cfg.experiment.id();
    let csv_path = cfg.out.join(format!("{id}.csv"));
    let mut summary = Vec::new();
    match cfg.experiment {
        Experiment::Bounds => {
            let rows = run_bounds(cfg)?;
            write_bounds(&rows, create(&csv_path)?)?;
            summary.push(format!("{} bound quantities", rows.len()));
            Ok(Outcome { files: vec![csv_path], summary })
        }
        Experiment::Probe => {
            let rows = run_probe(cfg)?;
            write_probe(&rows, create(&csv_path)?)?;
            let worst = rows.iter().map(|r| r.value - r.base).fold(f64::NEG_INFINITY, f64::max);
            summary.push(format!("{} probes, largest increase {worst:e}", rows.len()));
            Ok(Outcome { files: vec![csv_path], summary })
        }
        e => {
            let results = run_experiment(cfg)?;
            emit_csv(&results, &csv_path)?;
            let svg_path = cfg.out.join(format!("{id}.svg"));
            emit_svg(e, &results, &svg_path)?;
            let chart = crate::svg::chart_for(e, &results);
            for agg in aggregate(&results) {
                summary.push(format!(
                    "{} {} mean_dist_sign={:.6e} stderr={:.2e}",
                    agg.point.label(),
                    agg.point.data_key(),
                    agg.dist_sign,
                    agg.stderr_dist_sign
                ));
            }
            for s in &chart.series {
                let ys: Vec<f64> = s.points.iter().map(|p| p.1).collect();
                let stat = if e == Experiment::Fig1b {
                    match loglog_slope(&s.points) {
                        Some(v) => format!("log-log slope {v:.3}"),
                        None => "log-log slope undefined".into(),
                    }
                } else {
                    format!("max/min {:.3}", max_min_ratio(&ys))
                };
                summary.push(format!("curve {}: {stat}", s.label));
            }
            Ok(Outcome {
                files: vec![csv_path, svg_path],
                summary,
            })
        }
    }
}

//! CSV round trips and aggregate consistency.

use itkm_lab::harness::{mean, run_experiment, stderr};
use itkm_lab::table::{read_csv, write_csv};
use itkm_lab::{Experiment, ExperimentConfig, Profile};

fn small_fig1b(trials: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(Experiment::Fig1b, Profile::Ci);
    cfg.apply("curves", "4:1:2,8:1:2").unwrap();
    cfg.apply("n_grid", "128,512,2048").unwrap();
    cfg.apply("b_grid", "0.01").unwrap();
    cfg.trials = trials;
    cfg
}

#[test]
fn parsed_aggregates_match_recomputed_trial_statistics() {
    let results = run_experiment(&small_fig1b(4)).unwrap();
    let mut buf = Vec::new();
    write_csv(&results, &mut buf).unwrap();
    let rows = read_csv(buf.as_slice()).unwrap();
    let aggs: Vec<_> = rows.iter().filter(|r| r.is_aggregate()).collect();
    assert_eq!(aggs.len(), 6);
    for agg in aggs {
        assert!(agg.seed.is_none());
        let trials: Vec<_> = rows.iter().filter(|r| !r.is_aggregate() && r.same_point(agg)).collect();
        assert_eq!(trials.len(), 4);
        let sign: Vec<f64> = trials.iter().map(|r| r.dist_sign).collect();
        let raw: Vec<f64> = trials.iter().map(|r| r.dist_raw).collect();
        assert!((agg.mean_dist_sign.unwrap() - mean(&sign)).abs() <= 1e-12);
        assert!((agg.dist_sign - mean(&sign)).abs() <= 1e-12);
        assert!((agg.stderr_dist_sign.unwrap() - stderr(&sign)).abs() <= 1e-12);
        assert!((agg.dist_raw - mean(&raw)).abs() <= 1e-12);
        for t in trials {
            assert!(t.mean_dist_sign.is_none() && t.seed.is_some());
            assert!(t.dist_matched <= t.dist_sign && t.dist_sign <= t.dist_raw);
        }
    }
    let mut again = Vec::new();
    write_csv(&results, &mut again).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn doubling_trials_keeps_means_within_two_pooled_stderr() {
    let five = itkm_lab::harness::aggregate(&run_experiment(&small_fig1b(5)).unwrap());
    let ten = itkm_lab::harness::aggregate(&run_experiment(&small_fig1b(10)).unwrap());
    for (a, b) in five.iter().zip(&ten) {
        assert_eq!(a.point, b.point);
        let pooled = (a.stderr_dist_sign.powi(2) + b.stderr_dist_sign.powi(2)).sqrt();
        assert!(
            (a.dist_sign - b.dist_sign).abs() <= 2.0 * pooled,
            "{}: {} vs {}",
            a.point.data_key(),
            a.dist_sign,
            b.dist_sign
        );
    }
}

#[test]
fn distinct_grid_points_get_distinct_seeds() {
    let results = run_experiment(&small_fig1b(3)).unwrap();
    let mut seeds: Vec<u64> = results.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), results.len());
}

//! Statistical checks of the signal models and the criterion.

use itkm_core::criterion::{objective_expectation_bruteforce, objective_finite};
use itkm_core::linalg::{zoo, Dictionary, Perturbation};
use itkm_core::linalg::random_tangent_directions;
use itkm_core::signal::{draw_simple_signals, synthesize, CoefficientSpec, NoiseKind, SimpleSequence};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn noisy_signal_energy_matches_reference() {
    // Independent Monte Carlo reference with 1e6 draws: mean 0.9998166435, sd 0.235.
    let (ref_mean, ref_sd, ref_n) = (0.999_816_643_532_358_7, 0.235, 1e6);
    let phi = zoo::canonical_half_hadamard(16).unwrap();
    let spec = CoefficientSpec::noiseless(2, 0.1, 4).with_noise(NoiseKind::Gaussian, 0.1);
    let n = 100_000;
    let y = synthesize(&phi, &spec, n, &mut ChaCha8Rng::seed_from_u64(77), false).unwrap().signals;
    let e: Vec<f64> = y.column_iter().map(|c| c.norm_squared()).collect();
    let mean = e.iter().sum::<f64>() / n as f64;
    let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64 + ref_sd * ref_sd / ref_n).sqrt();
    assert!((mean - ref_mean).abs() <= 3.0 * se, "{mean} vs {ref_mean} (se {se:e})");
}

#[test]
fn sample_objective_converges_to_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let phi = zoo::canonical(4).unwrap();
    let dirs = random_tangent_directions(&phi, &mut rng).unwrap();
    let psi: Dictionary = Perturbation::uniform(phi.clone(), 0.2, dirs).unwrap().realize();
    let seq = SimpleSequence::new(vec![0.8, 0.48, 0.36, 0.0]).unwrap();
    let exact = objective_expectation_bruteforce(&psi, &phi, &seq, 1).unwrap();
    let m = 100_000;
    let y = draw_simple_signals(&phi, &seq, m, &mut rng).unwrap().signals;
    let per: Vec<f64> = y
        .column_iter()
        .map(|c| psi.atoms().tr_mul(&c).amax())
        .collect();
    let mean = objective_finite(&psi, &y, 1).unwrap();
    let sd = (per.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0)).sqrt();
    assert!((mean - exact).abs() <= 4.0 * sd / (m as f64).sqrt(), "{mean} vs {exact}");
}

#[test]
fn generating_dictionary_attains_head_sum() {
    for d in [3usize, 4, 6] {
        let phi = zoo::canonical(d).unwrap();
        let mut c: Vec<f64> = (0..d).map(|i| (d - i) as f64).collect();
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        c.iter_mut().for_each(|v| *v /= norm);
        let seq = SimpleSequence::new(c.clone()).unwrap();
        for s in 1..d {
            let v = objective_expectation_bruteforce(&phi, &phi, &seq, s).unwrap();
            let head: f64 = c[..s].iter().sum();
            assert!((v - head).abs() <= 1e-12, "d={d} S={s}: {v} vs {head}");
        }
    }
}

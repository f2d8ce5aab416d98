mod support;

use pertubox::value::{add_noise, reconstruct_distribution, NoiseSpec, ReconstructionConfig};
use pertubox::Rng;
use support::oracles;

fn uniform_truth_case(seed: u64) -> (Vec<f64>, NoiseSpec) {
    let mut rng = Rng::new(seed, "x");
    let x: Vec<f64> = (0..10_000).map(|_| rng.uniform()).collect();
    let noise = NoiseSpec::gaussian(0.25).unwrap();
    let w = add_noise(&x, &noise, &mut Rng::new(seed, "noise/x")).unwrap();
    (w, noise)
}

#[test]
fn early_iterates_beat_raw_histogram() {
    let (w, noise) = uniform_truth_case(2024);
    let cfg = ReconstructionConfig { max_iter: 30, tol: 0.0, ..Default::default() };
    let est = reconstruct_distribution(&w, &noise, &cfg).unwrap();
    let truth = oracles::uniform_bin_masses(&est.bin_edges, 0.0, 1.0);
    let err = oracles::l1(&est.probabilities, &truth);
    let naive = oracles::l1(&est.histogram_of(&w), &truth);
    println!("30 iterations: l1={err} raw={naive}");
    assert!(err < naive, "reconstruction {err} should beat raw histogram {naive}");
}

#[test]
fn long_runs_overfit_the_sample() {
    // Past a few dozen iterations the iterate chases sampling noise and the
    // L1 error to the true density grows again.
    let (w, noise) = uniform_truth_case(2024);
    let l1_at = |max_iter| {
        let cfg = ReconstructionConfig { max_iter, tol: 0.0, ..Default::default() };
        let est = reconstruct_distribution(&w, &noise, &cfg).unwrap();
        oracles::l1(&est.probabilities, &oracles::uniform_bin_masses(&est.bin_edges, 0.0, 1.0))
    };
    let (early, late) = (l1_at(30), l1_at(500));
    println!("l1 after 30: {early}, after 500: {late}");
    assert!(late > early);
}

#[test]
fn iterate_agrees_with_quadrature_oracle() {
    let (w, noise) = uniform_truth_case(7);
    let w = &w[..3000];
    let cfg = ReconstructionConfig::default();
    let est = reconstruct_distribution(w, &noise, &cfg).unwrap();
    let oracle = oracles::bayes_iterate_by_quadrature(w, 0.25, &est.bin_edges, est.iterations);
    let gap = oracles::l1(&est.probabilities, &oracle);
    assert!(gap < 1e-3, "implementation vs oracle L1 {gap}");
}

#[test]
fn two_spikes_are_separated() {
    let mut rng = Rng::new(5, "x");
    let x: Vec<f64> = (0..10_000).map(|_| if rng.uniform() < 0.5 { 0.0 } else { 1.0 }).collect();
    let noise = NoiseSpec::gaussian(0.2).unwrap();
    let w = add_noise(&x, &noise, &mut Rng::new(5, "noise/x")).unwrap();
    let est = reconstruct_distribution(&w, &noise, &ReconstructionConfig::default()).unwrap();
    let near = est.mass_between(-0.1, 0.1) + est.mass_between(0.9, 1.1);
    println!("mass near spikes {near}");
    assert!(near >= 0.8, "mass near spikes {near}");
    // Monte Carlo oracle: raw perturbed data put far less mass there
    let raw = w.iter().filter(|v| v.abs() <= 0.1 || (*v - 1.0).abs() <= 0.1).count() as f64 / w.len() as f64;
    assert!(raw < near);
}


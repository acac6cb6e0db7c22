use std::f64::consts::{PI, TAU};

use smallball_core::config::{parse_model, parse_weight, SpectralModel};
use smallball_core::eigensolve::{eigenvalues, fit_power_law, prefactor_at_exponent, Window};
use smallball_core::operator::{assemble_nystrom, assemble_periodic, assemble_sequence, power_weights, CoefficientSequence, ContinuousKernel};
use smallball_core::smallball::{
    chernoff_logprob, constant_periodic_real, lemma_constant_continuous, lemma_constant_periodic, lemma_constant_sequence,
    logprob_from_fit, rescale_epsilon, AnalyticTail,
};
use smallball_core::spectrum::{bogoliubov_spectrum, fou_spectrum};
use smallball_core::weights::{Weight, WeightDomain};
use smallball_core::{DiscreteSpectrumF64, WeightF64};

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn documents_to_unit_interval_constant() {
    let SpectralModel::Discrete(spec) = parse_model(r#"{"kind": "bogoliubov", "omega": 1.0}"#).unwrap() else {
        panic!("discrete model expected")
    };
    let w = parse_weight(r#"{"kind": "constant", "value": 1, "period": "2pi"}"#).unwrap();
    let k = constant_periodic_real(&spec.tail(), &w).unwrap();
    assert!(rel(rescale_epsilon(&k, TAU).unwrap().coefficient, 0.125) < 1e-12);
}

#[test]
fn galerkin_fit_tracks_lemma_constant() {
    let spec: DiscreteSpectrumF64 = bogoliubov_spectrum(2.0).unwrap();
    let w: WeightF64 = Weight::exponential(-0.3, TAU).unwrap();
    let mat = assemble_periodic(&spec, &w, 512).unwrap();
    let eig = eigenvalues(&mat).unwrap();
    let fit = fit_power_law(&eig, Window::new(60, 250).unwrap()).unwrap();
    let c = lemma_constant_periodic(&spec.tail(), &w).unwrap();
    assert!(rel(fit.c_hat, c) < 0.05, "{} vs {c}", fit.c_hat);
    assert!((fit.r_hat - 2.0).abs() < 0.02);
}

#[test]
fn nystrom_fit_tracks_lemma_constant() {
    let spec = fou_spectrum(0.5).unwrap();
    let kernel = ContinuousKernel::new(&spec).unwrap();
    let w = Weight::indicator(0.0, 1.0, WeightDomain::RealLine).unwrap();
    let eig = eigenvalues(&assemble_nystrom(&kernel, &w, 1600).unwrap()).unwrap();
    let c = lemma_constant_continuous(&spec.tail(), &w).unwrap();
    // OU on [0, 1]: λ_n ≈ 1/(π(n − 1))². Nyström error grows like (n/N)², so
    // the window stays well inside the first eighth.
    assert!(rel(c, 1.0 / (PI * PI)) < 1e-10);
    let pinned = prefactor_at_exponent(&eig, 2.0, Window::new(50, 200).unwrap()).unwrap();
    assert!(rel(pinned, c) < 0.04, "{pinned} vs {c}");
}

#[test]
fn chernoff_on_assembled_spectrum_approaches_theorem() {
    let spec = bogoliubov_spectrum(1.0).unwrap();
    let w = Weight::exponential(0.1, TAU).unwrap();
    let eig = eigenvalues(&assemble_periodic(&spec, &w, 256).unwrap()).unwrap();
    let c = lemma_constant_periodic(&spec.tail(), &w).unwrap();
    let eps = 1e-3;
    let ch = chernoff_logprob(&eig, Some(AnalyticTail { c, r: 2.0 }), eps).unwrap();
    let th = logprob_from_fit(c, 2.0, eps).unwrap();
    assert!((ch.log_prob / th - 1.0).abs() < 0.1, "{} vs {th}", ch.log_prob);
}

#[test]
fn moving_average_sequence_route() {
    let a = CoefficientSequence::finite(0, vec![1.0, 0.5]).unwrap();
    let k = 1000;
    let eig = eigenvalues(&assemble_sequence(&a, &power_weights(1.0, 1.0, 1.0, k), k).unwrap()).unwrap();
    let fit = fit_power_law(&eig, Window::new(100, 500).unwrap()).unwrap();
    let c = lemma_constant_sequence(1.0, 1.0, 1.0, &a).unwrap();
    assert!(rel(fit.c_hat, c) < 0.05, "{} vs {c}", fit.c_hat);
}

#[test]
fn single_precision_constants() {
    let spec = bogoliubov_spectrum::<f32>(1.0).unwrap();
    let w = Weight::<f32>::constant(1.0, WeightDomain::Periodic { period: std::f32::consts::TAU }).unwrap();
    let k = constant_periodic_real(&spec.tail(), &w).unwrap();
    assert!((k.coefficient - std::f32::consts::FRAC_PI_4).abs() < 1e-5);
}

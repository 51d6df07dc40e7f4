use hetbo::acquisition::{candidate_set, evaluate_acquisition};
use hetbo::gp::{NoiseModel, StandardisationTransform};
use hetbo::objectives::sin_problem;
use hetbo::{
    anpei, augmented_ei, expected_improvement, fit_gp, fit_mlhgp, het_augmented_ei, maximise_acquisition,
    AcquisitionKind, AcquisitionSpec, Dataset, Domain, GPModel, Incumbent, Kernel, NoiseMode, RandomSource, Sense,
    Surrogate,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ei_sense_symmetry(mu in -5.0f64..5.0, sigma in 0.0f64..3.0, eta in -5.0f64..5.0) {
        let max = expected_improvement(mu, sigma, eta, Sense::Maximise);
        let min = expected_improvement(-mu, sigma, -eta, Sense::Minimise);
        prop_assert!((max - min).abs() < 1e-12);
    }

    #[test]
    fn ei_is_nonnegative_and_decreasing_in_mean(
        mu in -5.0f64..5.0, dmu in 0.0f64..2.0, sigma in 0.0f64..3.0, eta in -5.0f64..5.0,
    ) {
        let a = expected_improvement(mu, sigma, eta, Sense::Minimise);
        let b = expected_improvement(mu + dmu, sigma, eta, Sense::Minimise);
        prop_assert!(a >= 0.0 && b >= 0.0);
        prop_assert!(b <= a + 1e-12);
    }

    #[test]
    fn penalised_variants_are_bounded_by_ei(
        mu in -5.0f64..5.0, sigma in 0.01f64..3.0, eta in -5.0f64..5.0, r in 0.0f64..4.0, alpha in 0.0f64..=1.0,
    ) {
        let ei = expected_improvement(mu, sigma, eta, Sense::Minimise);
        let aei = augmented_ei(mu, sigma, eta, r.sqrt(), Sense::Minimise);
        let het = het_augmented_ei(mu, sigma, eta, r, Sense::Minimise);
        prop_assert!(aei >= 0.0 && aei <= ei + 1e-15);
        prop_assert!(het >= 0.0 && het <= ei + 1e-15);
        if r > 1e-6 && ei > 1e-12 {
            prop_assert!(het < ei);
        }
        if r == 0.0 {
            prop_assert_eq!(het, ei);
        }
        let a = anpei(mu, sigma, eta, r, alpha, Sense::Minimise);
        prop_assert!(a >= -(1.0 - alpha) * r.sqrt() - 1e-15);
        prop_assert!((a - (alpha * ei - (1.0 - alpha) * r.sqrt())).abs() < 1e-12);
    }
}

#[test]
fn ei_argmax_lies_in_the_basin_cell() {
    let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 10.0 / 11.0]).collect();
    let ts: Vec<f64> = xs.iter().map(|x| (x[0] - 3.3).powi(2)).collect();
    let data = Dataset::from_rows(&xs, ts).unwrap();
    let gp = fit_gp(&data, NoiseMode::Learn).unwrap();
    let spec = AcquisitionSpec::new(AcquisitionKind::Ei, Sense::Minimise).unwrap();
    let incumbent = Incumbent::from_observations(&data, Sense::Minimise);
    let domain = Domain::new(vec![0.0], vec![10.0]).unwrap();
    let surrogate = Surrogate::Homoscedastic(gp.clone());
    let (x, value) = maximise_acquisition(&spec, &surrogate, &incumbent, &domain, &mut RandomSource::new(3)).unwrap();

    // Oracle: exhaustive grid at ten times the search resolution.
    let fine = domain.grid_with(10_000);
    let pred = gp.predict_rows(&fine).unwrap();
    let values = evaluate_acquisition(&spec, &pred, incumbent.value, gp.transform(), gp.noise_variance()).unwrap();
    let best = (0..fine.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let cell = 10.0 / 999.0;
    assert!((x[0] - fine[best][0]).abs() <= 2.0 * cell, "{} vs oracle {}", x[0], fine[best][0]);
    assert!((x[0] - 3.3).abs() < 1.0);
    assert!(value <= values[best] + 1e-9);
}

#[test]
fn flat_landscape_returns_first_candidate() {
    // A single far-away datum and a short lengthscale leave the posterior at
    // the prior over the whole search box.
    let data = Dataset::from_rows(&[vec![100.0]], vec![1.0]).unwrap();
    let kernel = Kernel::isotropic(1, 1e-3, 1.0).unwrap();
    let model =
        GPModel::from_parts(data.clone(), kernel, NoiseModel::Homoscedastic(0.1), StandardisationTransform::fit(&data))
            .unwrap();
    let spec = AcquisitionSpec::new(AcquisitionKind::Ei, Sense::Minimise).unwrap();
    let incumbent = Incumbent::from_observations(&data, Sense::Minimise);
    let domain = Domain::new(vec![0.0], vec![1.0]).unwrap();
    let surrogate = Surrogate::Homoscedastic(model);
    let (x, value) = maximise_acquisition(&spec, &surrogate, &incumbent, &domain, &mut RandomSource::new(0)).unwrap();
    assert_eq!(x, vec![0.0]);
    let expected = expected_improvement(0.0, (1.0f64 + 0.1).sqrt(), 0.0, Sense::Minimise);
    assert!((value - expected).abs() < 1e-12, "{value} vs {expected}");
}

#[test]
fn pure_noise_penalty_picks_the_quietest_candidate() {
    let problem = sin_problem();
    let mut rng = RandomSource::new(11);
    let xs: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.uniform_in(0.0, 10.0)]).collect();
    let ts = xs.iter().map(|x| problem.query_noisy(x, &mut rng).unwrap().0).collect();
    let data = Dataset::from_rows(&xs, ts).unwrap();
    let het = fit_mlhgp(&data, 5, 100, &mut rng).unwrap();
    let spec = AcquisitionSpec::new(AcquisitionKind::Anpei { alpha: 0.0 }, Sense::Maximise).unwrap();
    let incumbent = Incumbent::from_observations(&data, Sense::Maximise);
    let domain = problem_domain();
    let surrogate = Surrogate::Heteroscedastic(het.clone());
    let (x, _) = maximise_acquisition(&spec, &surrogate, &incumbent, &domain, &mut RandomSource::new(21)).unwrap();

    let candidates = candidate_set(&domain, &mut RandomSource::new(21));
    let matrix = DMatrix::from_fn(candidates.len(), 1, |r, _| candidates[r][0]);
    let r = het.noise_variance(&matrix).unwrap();
    let quietest = (0..r.len()).fold(0, |b, i| if r[i] < r[b] { i } else { b });
    assert_eq!(x, candidates[quietest]);
}

fn problem_domain() -> Domain {
    use hetbo::Objective;
    sin_problem().domain().clone()
}

#[test]
fn maximisation_is_deterministic_per_seed() {
    let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
    let ts = xs.iter().map(|x| x[0].sin()).collect();
    let data = Dataset::from_rows(&xs, ts).unwrap();
    let surrogate = Surrogate::Homoscedastic(fit_gp(&data, NoiseMode::Learn).unwrap());
    let spec = AcquisitionSpec::new(AcquisitionKind::Aei { noise_std: None }, Sense::Maximise).unwrap();
    let incumbent = Incumbent::from_observations(&data, Sense::Maximise);
    let domain = Domain::new(vec![0.0], vec![7.0]).unwrap();
    let a = maximise_acquisition(&spec, &surrogate, &incumbent, &domain, &mut RandomSource::new(9)).unwrap();
    let b = maximise_acquisition(&spec, &surrogate, &incumbent, &domain, &mut RandomSource::new(9)).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1.to_bits(), b.1.to_bits());
}

#[test]
fn empty_domain_is_rejected() {
    assert!(Domain::new(vec![1.0], vec![1.0]).is_err());
    assert!(Domain::new(vec![], vec![]).is_err());
}

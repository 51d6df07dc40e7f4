use hetbo::mlhgp::log_empirical_noise;
use hetbo::objectives::sin_problem;
use hetbo::{fit_mlhgp, Dataset, RandomSource};
use nalgebra::DMatrix;

fn sin_targets(x: f64) -> f64 {
    x.sin() + 0.2 * x
}

fn flat_dataset(seed: u64) -> Dataset {
    let mut rng = RandomSource::new(seed);
    let xs: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.uniform_in(0.0, 10.0)]).collect();
    let ts = xs.iter().map(|x| sin_targets(x[0]) + 0.5 * rng.standard_normal()).collect();
    Dataset::from_rows(&xs, ts).unwrap()
}

fn sin_dataset(n: usize, seed: u64) -> Dataset {
    let problem = sin_problem();
    let mut rng = RandomSource::new(seed);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.uniform_in(0.0, 10.0)]).collect();
    let ts = xs.iter().map(|x| problem.query_noisy(x, &mut rng).unwrap().0).collect();
    Dataset::from_rows(&xs, ts).unwrap()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for k in i..=j {
            r[idx[k]] = 0.5 * (i + j) as f64;
        }
        i = j + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn flat_noise_is_recovered_as_roughly_constant() {
    let mut passes = 0;
    for seed in 0..10 {
        let data = flat_dataset(seed);
        let mut rng = RandomSource::new(100 + seed);
        let model = fit_mlhgp(&data, 10, 100, &mut rng).unwrap();
        let r = model.noise_variance(data.inputs()).unwrap();
        let ratio = r.iter().cloned().fold(0.0, f64::max) / r.iter().cloned().fold(f64::INFINITY, f64::min);
        // The true variance is 0.25; accept anything within a factor of three.
        let med = median(&r);
        if ratio < 20.0 && (0.25 / 3.0..=0.75).contains(&med) {
            passes += 1;
        }
    }
    assert!(passes >= 8, "{passes}/10 seeds recovered a flat noise level");
}

#[test]
fn learned_noise_tracks_the_true_noise_rank_order() {
    let problem = sin_problem();
    let data = sin_dataset(100, 4);
    let model = fit_mlhgp(&data, 10, 100, &mut RandomSource::new(5)).unwrap();
    let r = model.noise_variance(data.inputs()).unwrap();
    let truth: Vec<f64> = (0..data.len()).map(|i| problem.s(&data.input(i)).powi(2)).collect();
    let rho = spearman(&r, &truth);
    assert!(rho > 0.5, "spearman {rho}");
}

#[test]
fn aleatoric_variance_grows_with_the_noise_rate() {
    let data = sin_dataset(100, 8);
    let model = fit_mlhgp(&data, 10, 100, &mut RandomSource::new(9)).unwrap();
    let lo = (0..data.len()).min_by(|&a, &b| data.input(a)[0].total_cmp(&data.input(b)[0])).unwrap();
    let hi = (0..data.len()).max_by(|&a, &b| data.input(a)[0].total_cmp(&data.input(b)[0])).unwrap();
    let p = model.predict_rows(&[data.input(lo), data.input(hi)]).unwrap();
    assert!(p.aleatoric_variance[1] > p.aleatoric_variance[0], "{:?}", p.aleatoric_variance);
    for i in 0..2 {
        assert!(p.total_variance[i] >= p.epistemic_variance[i]);
    }
}

#[test]
fn training_aleatoric_variance_equals_final_noise_diagonal() {
    let data = sin_dataset(40, 12);
    let model = fit_mlhgp(&data, 4, 50, &mut RandomSource::new(13)).unwrap();
    let p = model.predict(data.inputs()).unwrap();
    let last = model.noise_history().last().unwrap();
    assert_eq!(model.noise_history().len(), 4);
    assert_eq!(model.em_iterations_run(), 4);
    for (a, b) in p.aleatoric_variance.iter().zip(last) {
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-12), "{a} vs {b}");
    }
    assert!(model.noise_history().iter().flatten().all(|v| v.is_finite() && *v > 0.0));
}

#[test]
fn far_field_epistemic_variance_reverts_to_the_prior() {
    let data = sin_dataset(30, 14);
    let model = fit_mlhgp(&data, 3, 50, &mut RandomSource::new(15)).unwrap();
    let g3 = model.mean_gp();
    let prior = g3.kernel().signal_variance() * g3.transform().output_std.powi(2);
    let p = model.predict(&DMatrix::from_element(1, 1, 1e4)).unwrap();
    assert!((p.epistemic_variance[0] - prior).abs() < 1e-8 * prior, "{} vs {prior}", p.epistemic_variance[0]);
}

#[test]
fn fits_are_bitwise_reproducible() {
    let data = sin_dataset(30, 16);
    let q = DMatrix::from_fn(7, 1, |i, _| i as f64 * 1.5);
    let a = fit_mlhgp(&data, 3, 50, &mut RandomSource::new(17)).unwrap().predict(&q).unwrap();
    let b = fit_mlhgp(&data, 3, 50, &mut RandomSource::new(17)).unwrap().predict(&q).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.mean), bits(&b.mean));
    assert_eq!(bits(&a.total_variance), bits(&b.total_variance));
}

#[test]
fn empirical_noise_matches_posterior_variance_on_average() {
    // t_i equal to the posterior mean with variance 2 gives E[0.5 (t − t_s)²] = 1.
    let n = 20;
    let targets = vec![0.3; n];
    let means = vec![0.3; n];
    let variances = vec![2.0; n];
    let z = log_empirical_noise(&targets, &means, &variances, 100_000, &mut RandomSource::new(2));
    let mean_z = z.iter().sum::<f64>() / n as f64;
    assert!(mean_z.abs() < 0.05, "{mean_z}");
}

//! Acceptance suite. Prints one `A<k> PASS|FAIL` line per criterion.
//!
//! The binary exits 0 so the workspace test run reports the lines without
//! failing; pass `--strict` (`cargo test --test acceptance -- --strict`) to
//! turn any FAIL into a non-zero exit.

use std::time::{Duration, Instant};

use hetbo::acquisition::DEFAULT_ALPHA;
use hetbo::bo::ReplicateSummary;
use hetbo::gp::{log_marginal_likelihood, NoiseModel, StandardisationTransform};
use hetbo::mlhgp::{DEFAULT_EM_ITERATIONS, DEFAULT_SAMPLE_COUNT};
use hetbo::objectives::{branin_problem, sin_problem, soil_problem_from_pool, synthetic_soil_pool};
use hetbo::{
    expected_improvement, fit_mlhgp, run_replicates, AcquisitionKind, CampaignConfig, Dataset, GPModel, Kernel,
    RandomSource, Sense, SurrogateKind,
};
use hetbo_cli::{compare_on_splits, run, synthetic_sin_dataset, FLAT_NOISE_STD};
use nalgebra::{DMatrix, DVector};

const SEEDS: [u64; 10] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9];

type System = (DMatrix<f64>, Vec<f64>, Kernel, Vec<f64>);
type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn config(surrogate: SurrogateKind, acquisition: AcquisitionKind, budget: usize) -> CampaignConfig {
    CampaignConfig::new(surrogate, acquisition, budget, 0)
}

fn methods() -> [(&'static str, CampaignConfig); 3] {
    [
        ("mlhgp:anpei", config(SurrogateKind::Mlhgp, AcquisitionKind::Anpei { alpha: DEFAULT_ALPHA }, 0)),
        ("mlhgp:het-aei", config(SurrogateKind::Mlhgp, AcquisitionKind::HetAei, 0)),
        ("gp:ei", config(SurrogateKind::Homoscedastic, AcquisitionKind::Ei, 0)),
    ]
}

fn a1_first_maximum() -> Verdict {
    // Maxima of sin(x) + 0.2x sit where cos x = −0.2; they are 2π apart.
    let first = (-0.2f64).acos();
    let half_spacing = std::f64::consts::PI;
    let started = Instant::now();
    let mut counts = Vec::new();
    let mut best_counts = Vec::new();
    for (label, mut c) in methods() {
        c.budget = 30;
        let summary = run_replicates(&c, &SEEDS, |_| Ok(Box::new(sin_problem()))).expect("sin campaign");
        let inside = |x: Option<&[f64]>| x.is_some_and(|x| (x[0] - first).abs() < half_spacing);
        counts.push((label, summary.records.iter().filter(|r| inside(r.final_suggestion())).count()));
        best_counts.push((label, summary.records.iter().filter(|r| inside(r.best_location())).count()));
    }
    let elapsed = started.elapsed();
    let get = |v: &[(&str, usize)], l: &str| v.iter().find(|(m, _)| *m == l).unwrap().1;
    let pass = get(&counts, "mlhgp:anpei") >= 8
        && get(&counts, "mlhgp:het-aei") >= 8
        && get(&counts, "gp:ei") <= 6
        && elapsed < Duration::from_secs(300);
    verdict(
        pass,
        format!(
            "final suggestion in first basin: anpei {}/10, het-aei {}/10, gp:ei {}/10 (need ≥8, ≥8, ≤6); \
             best-score location: anpei {}/10, het-aei {}/10, gp:ei {}/10; {:.0}s",
            get(&counts, "mlhgp:anpei"),
            get(&counts, "mlhgp:het-aei"),
            get(&counts, "gp:ei"),
            get(&best_counts, "mlhgp:anpei"),
            get(&best_counts, "mlhgp:het-aei"),
            get(&best_counts, "gp:ei"),
            elapsed.as_secs_f64()
        ),
    )
}

fn final_stats(s: &ReplicateSummary) -> (f64, f64) {
    (s.final_mean(), s.final_standard_error())
}

fn a2_branin() -> Verdict {
    let started = Instant::now();
    let results: Vec<(&str, (f64, f64))> = methods()
        .into_iter()
        .map(|(label, mut c)| {
            c.budget = 50;
            let s = run_replicates(&c, &SEEDS, |_| Ok(Box::new(branin_problem()))).expect("branin campaign");
            (label, final_stats(&s))
        })
        .collect();
    let elapsed = started.elapsed();
    let (em, es) = results[2].1;
    let mut pass = elapsed < Duration::from_secs(900);
    let mut parts = Vec::new();
    for (label, (m, s)) in &results[..2] {
        let combined = (s * s + es * es).sqrt();
        pass &= em - m > combined;
        parts.push(format!("{label} {m:.3} ± {s:.3}"));
    }
    verdict(
        pass,
        format!(
            "mean final best f: {}, gp:ei {em:.3} ± {es:.3} (need each het method below gp:ei by > combined SE); {:.0}s",
            parts.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn a3_soil_pool() -> Verdict {
    let pool = synthetic_soil_pool(200, 0);
    let mut stats = Vec::new();
    for (label, mut c) in methods() {
        if label == "mlhgp:het-aei" {
            continue;
        }
        c.budget = 30;
        c.init_design_size = 10;
        let s = run_replicates(&c, &SEEDS, |seed| {
            Ok(Box::new(soil_problem_from_pool(pool.clone(), 10, &mut RandomSource::new(seed))?))
        })
        .expect("soil campaign");
        stats.push((label, final_stats(&s)));
    }
    let (am, as_) = stats[0].1;
    let (em, es) = stats[1].1;
    verdict(
        am <= em,
        format!("200-point pool, init 10, budget 30, minimised: mlhgp:anpei {am:.4} ± {as_:.4} vs gp:ei {em:.4} ± {es:.4} (need ≤)"),
    )
}

fn a4_nlpd_ordering() -> Verdict {
    let data = synthetic_sin_dataset(200, 0, |x| 0.25 * x);
    let report =
        compare_on_splits(&data, 10, 0, 0.8, DEFAULT_EM_ITERATIONS, DEFAULT_SAMPLE_COUNT).expect("fit-compare");
    let (gm, gs) = report.gp_summary();
    let (hm, hs) = report.mlhgp_summary();
    verdict(
        hm < gm,
        format!("10 splits, noise std 0.25x: NLPD gp {gm:.3} ± {gs:.3}, mlhgp {hm:.3} ± {hs:.3} (need mlhgp < gp)"),
    )
}

fn a5_ei_monte_carlo() -> Verdict {
    let mut rng = RandomSource::new(5);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let mu = rng.uniform_in(-3.0, 3.0);
        let sigma = rng.uniform_in(0.05, 3.0);
        let eta = mu + rng.uniform_in(-2.0, 2.0) * sigma;
        let sense = if k % 2 == 0 { Sense::Minimise } else { Sense::Maximise };
        let mut sum = 0.0;
        for _ in 0..1_000_000 {
            let y = mu + sigma * rng.standard_normal();
            sum += match sense {
                Sense::Minimise => (eta - y).max(0.0),
                Sense::Maximise => (y - eta).max(0.0),
            };
        }
        let mc = sum / 1e6;
        worst = worst.max((mc - expected_improvement(mu, sigma, eta, sense)).abs());
    }
    verdict(worst < 1e-2, format!("100 triples, 1e6 samples each: max |closed form − MC| = {worst:.2e} (need < 1e-2)"))
}

fn dense_conditioning(
    kernel: &Kernel,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    r: &[f64],
    q: &DMatrix<f64>,
) -> (Vec<f64>, Vec<f64>) {
    let k = |a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize| {
        let d2: f64 = (0..a.ncols()).map(|c| ((a[(i, c)] - b[(j, c)]) / kernel.lengthscales()[c]).powi(2)).sum();
        kernel.signal_variance() * (-0.5 * d2).exp()
    };
    let n = x.nrows();
    let kxx = DMatrix::from_fn(n, n, |i, j| k(x, i, x, j) + if i == j { r[i] } else { 0.0 });
    let inv = kxx.try_inverse().expect("invertible system");
    let mut means = Vec::new();
    let mut vars = Vec::new();
    for s in 0..q.nrows() {
        let ks = DVector::from_fn(n, |i, _| k(x, i, q, s));
        means.push((ks.transpose() * &inv * y)[0]);
        vars.push(k(q, s, q, s) - (ks.transpose() * &inv * &ks)[0]);
    }
    (means, vars)
}

fn a6_dense_conditioning() -> Verdict {
    let mut rng = RandomSource::new(6);
    let mut systems: Vec<System> = vec![
        (DMatrix::from_row_slice(1, 1, &[0.0]), vec![1.0], Kernel::new(vec![1.0], 1.0).unwrap(), vec![0.5]),
        (
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            vec![1.0, -1.0],
            Kernel::new(vec![0.7], 2.0).unwrap(),
            vec![0.01, 1.0],
        ),
        (
            DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.5, -0.5, 2.0]),
            vec![0.3, 1.2, -0.4],
            Kernel::new(vec![1.0, 2.0], 1.5).unwrap(),
            vec![0.1, 0.2, 0.05],
        ),
    ];
    for _ in 0..30 {
        let n = 1 + (rng.uniform() * 3.0) as usize;
        let d = 1 + (rng.uniform() * 2.0) as usize;
        let x = DMatrix::from_fn(n, d, |_, _| rng.uniform_in(-2.0, 2.0));
        let y = (0..n).map(|_| rng.standard_normal()).collect();
        let kernel = Kernel::new((0..d).map(|_| rng.uniform_in(0.3, 3.0)).collect(), rng.uniform_in(0.5, 2.0)).unwrap();
        let r = (0..n).map(|_| rng.uniform_in(1e-3, 1.0)).collect();
        systems.push((x, y, kernel, r));
    }
    let mut worst: f64 = 0.0;
    for (x, y, kernel, r) in systems {
        let d = x.ncols();
        let q = DMatrix::from_fn(5, d, |_, _| rng.uniform_in(-3.0, 3.0));
        let data = Dataset::new(x.clone(), y.clone()).unwrap();
        let model = GPModel::from_parts(
            data,
            kernel.clone(),
            NoiseModel::Heteroscedastic(r.clone()),
            StandardisationTransform::identity(d),
        )
        .unwrap();
        let (mean, var) = model.predict_latent(&q).unwrap();
        let (dm, dv) = dense_conditioning(&kernel, &x, &DVector::from_vec(y), &r, &q);
        for i in 0..q.nrows() {
            worst = worst.max((mean[i] - dm[i]).abs()).max((var[i] - dv[i]).abs());
        }
    }
    verdict(
        worst < 1e-8,
        format!("33 systems with n ≤ 3: max deviation from dense conditioning {worst:.2e} (need < 1e-8)"),
    )
}

fn a7_gradients() -> Verdict {
    let mut rng = RandomSource::new(7);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let n = 2 + (rng.uniform() * 9.0) as usize;
        let d = 1 + (rng.uniform() * 3.0) as usize;
        let x = DMatrix::from_fn(n, d, |_, _| rng.uniform_in(-2.0, 2.0));
        let y = DVector::from_fn(n, |_, _| rng.standard_normal());
        let mut theta: Vec<f64> = (0..d).map(|_| rng.uniform_in(0.3, 3.0).ln()).collect();
        theta.push(rng.uniform_in(0.5, 2.0).ln());
        let het: Option<Vec<f64>> = (k % 2 == 1).then(|| (0..n).map(|_| rng.uniform_in(0.01, 1.0)).collect());
        if het.is_none() {
            theta.push(rng.uniform_in(0.01, 1.0).ln());
        }
        let lml = |t: &[f64]| {
            let kernel = Kernel::new(t[..d].iter().map(|v| v.exp()).collect(), t[d].exp()).unwrap();
            let noise = match &het {
                Some(r) => NoiseModel::Heteroscedastic(r.clone()),
                None => NoiseModel::Homoscedastic(t[d + 1].exp()),
            };
            log_marginal_likelihood(&kernel, &noise, &x, &y).unwrap()
        };
        let (_, grad) = lml(&theta);
        let h = 1e-5;
        for (j, g) in grad.iter().enumerate() {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (lml(&up).0 - lml(&down).0) / (2.0 * h);
            worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-3));
        }
    }
    verdict(worst < 1e-4, format!("50 instances, n ≤ 10, d ≤ 3: max relative gradient error {worst:.2e} (need < 1e-4)"))
}

fn a8_flat_noise() -> Verdict {
    let mut ratios = Vec::new();
    for seed in SEEDS {
        let data = synthetic_sin_dataset(100, 800 + seed, |_| FLAT_NOISE_STD);
        let model =
            fit_mlhgp(&data, DEFAULT_EM_ITERATIONS, DEFAULT_SAMPLE_COUNT, &mut RandomSource::new(seed)).unwrap();
        let r = model.noise_variance(data.inputs()).unwrap();
        let max = r.iter().cloned().fold(f64::MIN, f64::max);
        let min = r.iter().cloned().fold(f64::MAX, f64::min);
        ratios.push(max / min);
    }
    let ok = ratios.iter().filter(|&&q| q < 20.0).count();
    let shown: Vec<String> = ratios.iter().map(|q| format!("{q:.1}")).collect();
    verdict(
        ok >= 8,
        format!("r(x) max/min over training inputs < 20 in {ok}/10 seeds (need ≥ 8); ratios [{}]", shown.join(", ")),
    )
}

fn a9_determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let pool = tmp.path().join("pool.csv");
    let synth = run(["hetbo", "synth", "--kind", "soil", "--n", "40", "--out", pool.to_str().unwrap()]);
    assert_eq!(synth, 0, "synth failed");
    let cases: [(&str, Vec<&str>); 3] = [
        ("sin1d", vec!["--method", "gp:ei,mlhgp:anpei,mlhgp:het-aei", "--budget", "8"]),
        ("branin", vec!["--method", "gp:aei,mlhgp:anpei", "--budget", "4"]),
        ("soil", vec!["--method", "mlhgp:het-aei", "--data", pool.to_str().unwrap()]),
    ];
    let mut identical = 0;
    for (problem, extra) in &cases {
        let mut outputs = Vec::new();
        for rerun in 0..2 {
            let out = tmp.path().join(format!("{problem}-{rerun}"));
            let mut args =
                vec!["hetbo", "benchmark", "--problem", problem, "--seeds", "3", "--out", out.to_str().unwrap()];
            args.extend(extra.iter().copied());
            let owned: Vec<String> = args.iter().map(|s| s.to_string()).collect();
            assert_eq!(run(owned), 0, "benchmark {problem} failed");
            outputs.push(std::fs::read(out.join("trajectories.csv")).unwrap());
        }
        identical += usize::from(outputs[0] == outputs[1]);
    }
    verdict(
        identical == cases.len(),
        format!("{identical}/{} reruns produced byte-identical trajectories.csv", cases.len()),
    )
}

fn main() {
    let strict = std::env::args().any(|a| a == "--strict");
    let criteria: [Criterion; 9] = [
        ("A1", a1_first_maximum),
        ("A2", a2_branin),
        ("A3", a3_soil_pool),
        ("A4", a4_nlpd_ordering),
        ("A5", a5_ei_monte_carlo),
        ("A6", a6_dense_conditioning),
        ("A7", a7_gradients),
        ("A8", a8_flat_noise),
        ("A9", a9_determinism),
    ];
    let mut failed = 0;
    for (id, check) in criteria {
        let v = check();
        failed += usize::from(!v.pass);
        println!("{id} {} {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {}/9 passed", 9 - failed);
    if strict && failed > 0 {
        std::process::exit(1);
    }
}

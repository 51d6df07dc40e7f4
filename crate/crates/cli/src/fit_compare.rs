use chrono::Utc;
use hetbo::objectives::load_pool_csv;
use hetbo::{fit_gp, fit_mlhgp, nlpd, Dataset, NoiseMode, RandomSource};
use serde_json::json;

use crate::output::{mean_and_se, prepare_out_dir, Manifest, Table};
use crate::{CliError, FitCompareArgs};

pub const NLPD_FILE: &str = "nlpd.csv";

/// Test-split NLPD per split for both models.
#[derive(Debug, Clone, PartialEq)]
pub struct FitCompareReport {
    pub gp: Vec<f64>,
    pub mlhgp: Vec<f64>,
}

impl FitCompareReport {
    pub fn gp_summary(&self) -> (f64, f64) {
        mean_and_se(&self.gp)
    }

    pub fn mlhgp_summary(&self) -> (f64, f64) {
        mean_and_se(&self.mlhgp)
    }
}

/// Random train/test splits of `data`; each fits a homoscedastic GP and an
/// MLHGP on the train part and scores the test part.
pub fn compare_on_splits(
    data: &Dataset,
    splits: usize,
    seed: u64,
    train_fraction: f64,
    em_iterations: usize,
    sample_count: usize,
) -> Result<FitCompareReport, CliError> {
    if splits == 0 {
        return Err(CliError::config("--splits must be positive"));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CliError::config("--train-fraction must lie strictly between 0 and 1"));
    }
    if em_iterations == 0 || sample_count == 0 {
        return Err(CliError::config("--em-iters and --sample-count must be positive"));
    }
    let n = data.len();
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(2, n.saturating_sub(1));
    if n < 3 || n_train >= n {
        return Err(CliError::data(format!("--data: need at least 3 rows for a train/test split, found {n}")));
    }
    let mut rng = RandomSource::new(seed);
    let mut report = FitCompareReport { gp: Vec::with_capacity(splits), mlhgp: Vec::with_capacity(splits) };
    for _ in 0..splits {
        let perm = rng.permutation(n);
        let train = data.select(&perm[..n_train])?;
        let test = data.select(&perm[n_train..])?;
        let truth: Vec<f64> = test.targets().iter().copied().collect();
        let gp = fit_gp(&train, NoiseMode::Learn)?;
        let het = fit_mlhgp(&train, em_iterations, sample_count, &mut rng)?;
        report.gp.push(nlpd(&gp.predict(test.inputs())?, &truth)?);
        report.mlhgp.push(nlpd(&het.predict(test.inputs())?, &truth)?);
    }
    Ok(report)
}

pub fn cmd_fit_compare(args: &FitCompareArgs) -> Result<FitCompareReport, CliError> {
    let started = Utc::now();
    let path = args.data.as_deref().ok_or_else(|| CliError::data("fit-compare requires --data <file.csv>"))?;
    let data = load_pool_csv(path)?;
    let out_dir = prepare_out_dir(&args.out)?;
    let report =
        compare_on_splits(&data, args.splits, args.seed, args.train_fraction, args.em_iters, args.sample_count)?;

    let mut table = Table::new(&["split", "model", "nlpd"])?;
    for (i, (g, h)) in report.gp.iter().zip(&report.mlhgp).enumerate() {
        let split = i.to_string();
        table.row(&[&split, "gp"], &[*g])?;
        table.row(&[&split, "mlhgp"], &[*h])?;
    }
    table.save(&out_dir.join(NLPD_FILE))?;

    let (gm, gs) = report.gp_summary();
    let (hm, hs) = report.mlhgp_summary();
    println!("gp     NLPD {gm:.4} ± {gs:.4}");
    println!("mlhgp  NLPD {hm:.4} ± {hs:.4}");

    let seeds = [args.seed];
    Manifest {
        command: "fit-compare",
        config: json!({
            "splits": args.splits,
            "train_fraction": args.train_fraction,
            "em_iters": args.em_iters,
            "sample_count": args.sample_count,
        }),
        seeds: &seeds,
        input: Some(path),
        started,
    }
    .write(&out_dir)?;
    Ok(report)
}

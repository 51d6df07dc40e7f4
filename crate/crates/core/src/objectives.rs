//! Benchmark problems: analytic objectives corrupted by input-dependent
//! Gaussian noise, and a pool-backed tabular problem with kernel-smoothed
//! pseudo noise.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;

use crate::acquisition::{Domain, Sense};
use crate::gp::{fit_gp, Dataset, NoiseMode};
use crate::numerics::RandomSource;
use crate::ObjectiveError;

/// One evaluation of a black box.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Input actually evaluated (pool problems snap to a pool point).
    pub x: Vec<f64>,
    /// Noisy target seen by the optimiser.
    pub observed: f64,
    /// Scoring objective used for reporting only.
    pub score: f64,
}

/// A black box the optimisation loop can query.
pub trait Objective {
    fn name(&self) -> &str;
    fn domain(&self) -> &Domain;
    fn sense(&self) -> Sense;
    /// Initial design. Analytic problems draw one uniform point per cell of a
    /// `k`-per-axis grid when `d ≥ 2` and `count = k^d`, and `count` uniform
    /// points otherwise; pool problems return their preselected
    /// subset and ignore `count`.
    fn initial_design(&mut self, count: usize, rng: &mut RandomSource) -> Result<Vec<Evaluation>, ObjectiveError>;
    fn query(&mut self, x: &[f64], rng: &mut RandomSource) -> Result<Evaluation, ObjectiveError>;
    /// Remaining evaluations, if the problem is finite.
    fn remaining(&self) -> Option<usize> {
        None
    }
}

/// How the reporting objective combines latent function and noise level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Composition {
    GMinusS,
    GPlusS,
}

/// `t = g(x) + s(x)·ε`, scored by `f = g ∓ s`.
#[derive(Clone)]
pub struct NoisyObjective {
    name: String,
    latent: fn(&[f64]) -> f64,
    noise_std: fn(&[f64]) -> f64,
    domain: Domain,
    sense: Sense,
    composition: Composition,
}

impl fmt::Debug for NoisyObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoisyObjective")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("sense", &self.sense)
            .field("composition", &self.composition)
            .finish()
    }
}

impl NoisyObjective {
    pub fn new(
        name: impl Into<String>,
        latent: fn(&[f64]) -> f64,
        noise_std: fn(&[f64]) -> f64,
        domain: Domain,
        sense: Sense,
        composition: Composition,
    ) -> Self {
        Self { name: name.into(), latent, noise_std, domain, sense, composition }
    }

    pub fn g(&self, x: &[f64]) -> f64 {
        (self.latent)(x)
    }

    pub fn s(&self, x: &[f64]) -> f64 {
        (self.noise_std)(x)
    }

    /// Scoring objective f.
    pub fn f(&self, x: &[f64]) -> f64 {
        match self.composition {
            Composition::GMinusS => self.g(x) - self.s(x),
            Composition::GPlusS => self.g(x) + self.s(x),
        }
    }

    pub fn composition(&self) -> Composition {
        self.composition
    }

    /// Noisy draw and scoring value at `x`.
    pub fn query_noisy(&self, x: &[f64], rng: &mut RandomSource) -> Result<(f64, f64), ObjectiveError> {
        if !self.domain.contains(x) {
            return Err(ObjectiveError::OutOfDomain(x.to_vec()));
        }
        let eps = rng.standard_normal();
        Ok((self.g(x) + self.s(x) * eps, self.f(x)))
    }
}

impl Objective for NoisyObjective {
    fn name(&self) -> &str {
        &self.name
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn sense(&self) -> Sense {
        self.sense
    }

    fn initial_design(&mut self, count: usize, rng: &mut RandomSource) -> Result<Vec<Evaluation>, ObjectiveError> {
        let points = stratified_design(&self.domain, count, rng)
            .unwrap_or_else(|| (0..count).map(|_| self.domain.sample(rng)).collect());
        points.into_iter().map(|x| self.query(&x, rng)).collect()
    }

    fn query(&mut self, x: &[f64], rng: &mut RandomSource) -> Result<Evaluation, ObjectiveError> {
        let (observed, score) = self.query_noisy(x, rng)?;
        Ok(Evaluation { x: x.to_vec(), observed, score })
    }
}

fn stratified_design(domain: &Domain, count: usize, rng: &mut RandomSource) -> Option<Vec<Vec<f64>>> {
    let d = domain.dim();
    if d < 2 {
        return None;
    }
    let k = (count as f64).powf(1.0 / d as f64).round() as usize;
    if k < 2 || k.pow(d as u32) != count {
        return None;
    }
    // One uniform draw inside each cell of a k-per-axis partition.
    let width: Vec<f64> = (0..d).map(|j| (domain.upper[j] - domain.lower[j]) / k as f64).collect();
    let points = (0..count)
        .map(|cell| {
            let mut rest = cell;
            let mut index = vec![0; d];
            for j in (0..d).rev() {
                index[j] = rest % k;
                rest /= k;
            }
            (0..d).map(|j| domain.lower[j] + width[j] * (index[j] as f64 + rng.uniform())).collect()
        })
        .collect();
    Some(points)
}

fn sin_latent(x: &[f64]) -> f64 {
    x[0].sin() + 0.2 * x[0]
}

fn sin_noise(x: &[f64]) -> f64 {
    0.25 * x[0]
}

/// 1D sine with linear trend, noise std `0.25x` on `[0, 10]`; maximised,
/// scored by `f = g − s`.
pub fn sin_problem() -> NoisyObjective {
    NoisyObjective::new(
        "sin1d",
        sin_latent,
        sin_noise,
        Domain { lower: vec![0.0], upper: vec![10.0] },
        Sense::Maximise,
        Composition::GMinusS,
    )
}

/// Branin-Hoo on `x1 ∈ [−5, 10], x2 ∈ [0, 15]`.
pub fn branin(x1: f64, x2: f64) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

/// The three global minimisers of [`branin`].
pub const BRANIN_MINIMISERS: [[f64; 2]; 3] = [[-PI, 12.275], [PI, 2.275], [9.424_78, 2.475]];
pub const BRANIN_MINIMUM: f64 = 0.397_887;

fn branin_latent(x: &[f64]) -> f64 {
    branin(x[0], x[1])
}

fn branin_noise(x: &[f64]) -> f64 {
    1.4 * x[0] * x[0] + 0.3 * x[1]
}

/// Branin-Hoo with noise std `1.4x1² + 0.3x2`; minimised, scored by `f = g + s`.
pub fn branin_problem() -> NoisyObjective {
    NoisyObjective::new(
        "branin",
        branin_latent,
        branin_noise,
        Domain { lower: vec![-5.0, 0.0], upper: vec![10.0, 15.0] },
        Sense::Minimise,
        Composition::GPlusS,
    )
}

/// Default pseudo-noise bandwidth as a fraction of the input range.
pub const DEFAULT_BANDWIDTH_FRACTION: f64 = 0.1;

/// Kernel-weighted moving average of squared residuals:
/// `Σ_j w_ij s_j² / Σ_j w_ij`, `w_ij = exp(−‖x_i − x_j‖² / 2h²)`.
pub fn kernel_smoothed_variance(inputs: &DMatrix<f64>, squared_residuals: &[f64], bandwidth: f64) -> Vec<f64> {
    let n = inputs.nrows();
    (0..n)
        .map(|i| {
            let (mut num, mut den) = (0.0, 0.0);
            for (j, s2) in squared_residuals.iter().enumerate() {
                let d2: f64 = inputs.row(i).iter().zip(inputs.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                let w = (-d2 / (2.0 * bandwidth * bandwidth)).exp();
                num += w * s2;
                den += w;
            }
            num / den
        })
        .collect()
}

/// Pseudo ground-truth noise variances for a pool: Gaussian-kernel smoothed
/// squared residuals of a homoscedastic GP fitted to the whole pool.
pub fn pseudo_noise_oracle(pool: &Dataset, bandwidth: f64) -> Result<Vec<f64>, ObjectiveError> {
    if pool.len() < 2 {
        return Err(ObjectiveError::InsufficientData { needed: 2, found: pool.len() });
    }
    let gp = fit_gp(pool, NoiseMode::Learn)?;
    let (mean, _) = gp.predict_latent(pool.inputs())?;
    let squared: Vec<f64> = pool.targets().iter().zip(&mean).map(|(y, m)| (y - m) * (y - m)).collect();
    Ok(kernel_smoothed_variance(pool.inputs(), &squared, bandwidth))
}

/// `DEFAULT_BANDWIDTH_FRACTION` of the mean per-dimension input range.
pub fn default_bandwidth(pool: &Dataset) -> f64 {
    let d = pool.dim();
    let range: f64 = (0..d)
        .map(|c| {
            let col = pool.inputs().column(c);
            col.max() - col.min()
        })
        .sum::<f64>()
        / d as f64;
    let h = DEFAULT_BANDWIDTH_FRACTION * range;
    if h > 0.0 {
        h
    } else {
        1.0
    }
}

/// A finite pool of measured points; each point can be consumed once.
#[derive(Debug, Clone)]
pub struct TabularObjective {
    name: String,
    pool: Dataset,
    initial_indices: Vec<usize>,
    pseudo_noise: Vec<f64>,
    consumed: Vec<bool>,
    domain: Domain,
    sense: Sense,
}

impl TabularObjective {
    pub fn new(
        name: impl Into<String>,
        pool: Dataset,
        initial_indices: Vec<usize>,
        pseudo_noise: Vec<f64>,
        sense: Sense,
    ) -> Result<Self, ObjectiveError> {
        let n = pool.len();
        if pseudo_noise.len() != n || initial_indices.iter().any(|&i| i >= n) {
            return Err(ObjectiveError::InsufficientData { needed: initial_indices.len() + 1, found: n });
        }
        let d = pool.dim();
        let mut lower = vec![f64::INFINITY; d];
        let mut upper = vec![f64::NEG_INFINITY; d];
        for i in 0..n {
            for c in 0..d {
                lower[c] = lower[c].min(pool.inputs()[(i, c)]);
                upper[c] = upper[c].max(pool.inputs()[(i, c)]);
            }
        }
        for c in 0..d {
            if !(lower[c] < upper[c]) {
                upper[c] = lower[c] + 1.0;
            }
        }
        Ok(Self {
            name: name.into(),
            pool,
            initial_indices,
            pseudo_noise,
            consumed: vec![false; n],
            domain: Domain { lower, upper },
            sense,
        })
    }

    pub fn pool(&self) -> &Dataset {
        &self.pool
    }

    pub fn initial_indices(&self) -> &[usize] {
        &self.initial_indices
    }

    pub fn pseudo_noise(&self) -> &[f64] {
        &self.pseudo_noise
    }

    pub fn consumed_count(&self) -> usize {
        self.consumed.iter().filter(|c| **c).count()
    }

    pub fn is_consumed(&self, index: usize) -> bool {
        self.consumed[index]
    }

    /// Reporting score at pool index `i`: target penalised by √pseudo-noise.
    pub fn score(&self, i: usize) -> f64 {
        let t = self.pool.target(i);
        match self.sense {
            Sense::Minimise => t + self.pseudo_noise[i].sqrt(),
            Sense::Maximise => t - self.pseudo_noise[i].sqrt(),
        }
    }

    fn consume(&mut self, i: usize) -> Evaluation {
        self.consumed[i] = true;
        Evaluation { x: self.pool.input(i), observed: self.pool.target(i), score: self.score(i) }
    }

    /// Nearest unconsumed pool point to `x` (lowest index on ties); marks it
    /// consumed and returns `(target, score, index)`.
    pub fn query_tabular(&mut self, x: &[f64]) -> Result<(f64, f64, usize), ObjectiveError> {
        if x.len() != self.pool.dim() {
            return Err(ObjectiveError::OutOfDomain(x.to_vec()));
        }
        let mut best: Option<(usize, f64)> = None;
        for i in (0..self.pool.len()).filter(|i| !self.consumed[*i]) {
            let d2: f64 = self.pool.inputs().row(i).iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.is_none_or(|(_, bd)| d2 < bd) {
                best = Some((i, d2));
            }
        }
        let (i, _) = best.ok_or(ObjectiveError::PoolExhausted)?;
        let e = self.consume(i);
        Ok((e.observed, e.score, i))
    }
}

impl Objective for TabularObjective {
    fn name(&self) -> &str {
        &self.name
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn sense(&self) -> Sense {
        self.sense
    }

    fn initial_design(&mut self, _count: usize, _rng: &mut RandomSource) -> Result<Vec<Evaluation>, ObjectiveError> {
        let indices = self.initial_indices.clone();
        Ok(indices.into_iter().map(|i| self.consume(i)).collect())
    }

    fn query(&mut self, x: &[f64], _rng: &mut RandomSource) -> Result<Evaluation, ObjectiveError> {
        let (_, _, i) = self.query_tabular(x)?;
        Ok(Evaluation { x: self.pool.input(i), observed: self.pool.target(i), score: self.score(i) })
    }

    fn remaining(&self) -> Option<usize> {
        Some(self.consumed.iter().filter(|c| !**c).count())
    }
}

/// Reads a two-column CSV (`bulk_density,phosphorus_fraction`) with a header.
/// Line numbers in errors are 1-based file lines (the header is line 1).
pub fn load_pool_csv(path: &Path) -> Result<Dataset, ObjectiveError> {
    if !path.exists() {
        return Err(ObjectiveError::FileNotFound(path.display().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ObjectiveError::Io(std::io::Error::other(e)))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(k + 2, |p| p.line() as usize);
            ObjectiveError::MalformedRow { line, reason: e.to_string() }
        })?;
        let line = record.position().map_or(k + 2, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(ObjectiveError::MalformedRow {
                line,
                reason: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let parse = |s: &str| -> Result<f64, ObjectiveError> {
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(ObjectiveError::MalformedRow { line, reason: format!("not a finite number: {s:?}") }),
            }
        };
        xs.push(parse(&record[0])?);
        ys.push(parse(&record[1])?);
    }
    if xs.is_empty() {
        return Err(ObjectiveError::InsufficientData { needed: 1, found: 0 });
    }
    Ok(Dataset::new(DMatrix::from_column_slice(xs.len(), 1, &xs), ys)?)
}

pub fn write_pool_csv(path: &Path, pool: &Dataset) -> Result<(), ObjectiveError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| ObjectiveError::Io(std::io::Error::other(e)))?;
    let io = |e: csv::Error| ObjectiveError::Io(std::io::Error::other(e));
    w.write_record(["bulk_density", "phosphorus_fraction"]).map_err(io)?;
    for i in 0..pool.len() {
        w.write_record([format!("{}", pool.inputs()[(i, 0)]), format!("{}", pool.target(i))]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Builds the soil problem from a pool: `init_count` random initial indices
/// and pseudo noise at the default bandwidth. Minimised.
pub fn soil_problem_from_pool(
    pool: Dataset,
    init_count: usize,
    rng: &mut RandomSource,
) -> Result<TabularObjective, ObjectiveError> {
    if pool.len() < init_count + 1 || pool.len() < 2 {
        return Err(ObjectiveError::InsufficientData { needed: (init_count + 1).max(2), found: pool.len() });
    }
    let initial = rng.sample_indices(pool.len(), init_count);
    let pseudo_noise = pseudo_noise_oracle(&pool, default_bandwidth(&pool))?;
    TabularObjective::new("soil", pool, initial, pseudo_noise, Sense::Minimise)
}

pub fn soil_problem(
    pool_file: &Path,
    init_count: usize,
    rng: &mut RandomSource,
) -> Result<TabularObjective, ObjectiveError> {
    soil_problem_from_pool(load_pool_csv(pool_file)?, init_count, rng)
}

/// Synthetic stand-in for the soil data: bulk density on [0.8, 1.8] g/cm³,
/// a phosphorus fraction with two comparable minima and noise whose standard
/// deviation grows with density.
pub fn synthetic_soil_pool(n: usize, seed: u64) -> Dataset {
    let mut rng = RandomSource::new(seed);
    let xs: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.8, 1.8)).collect();
    let ys: Vec<f64> =
        xs.iter().map(|&x| synthetic_soil_mean(x) + synthetic_soil_noise_std(x) * rng.standard_normal()).collect();
    Dataset::new(DMatrix::from_column_slice(n, 1, &xs), ys).expect("finite synthetic data")
}

/// Latent phosphorus fraction of the synthetic pool.
pub fn synthetic_soil_mean(x: f64) -> f64 {
    0.5 + 0.15 * (2.0 * PI * (x - 0.8) / 0.6).cos() - 0.1 * (x - 0.8)
}

/// Ground-truth noise std of the synthetic pool.
pub fn synthetic_soil_noise_std(x: f64) -> f64 {
    0.01 + 0.12 * (x - 0.8)
}

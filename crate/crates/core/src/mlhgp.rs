//! Most-likely heteroscedastic GP.
//!
//! Each EM-like pass:
//!
//! 1. fits the mean GP (homoscedastic on the first pass);
//! 2. estimates empirical noise levels at the training inputs by sampling
//!    its predictive distribution;
//! 3. regresses a second GP on the log of those levels;
//! 4. refits the mean GP with the exponentiated noise predictions as a fixed
//!    per-point noise diagonal.
//!
//! Noise levels are handled in the standardised output space of the training
//! data; everything returned is in original units.

use nalgebra::DMatrix;

use crate::gp::{
    fit_gp, fit_gp_with, rows_to_matrix, Dataset, GPModel, InitialHyperparameters, NoiseMode, NoiseModel,
    PredictiveDistribution, INITIAL_NOISE_VARIANCE, INITIAL_SIGNAL_VARIANCE,
};
use crate::numerics::RandomSource;
use crate::GpError;

pub const DEFAULT_EM_ITERATIONS: usize = 10;
pub const DEFAULT_SAMPLE_COUNT: usize = 100;
/// Floor applied to empirical variances before taking logs.
pub const NOISE_FLOOR: f64 = 1e-8;

/// Training inputs paired with log empirical noise variances.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryNoiseDataset {
    pub inputs: DMatrix<f64>,
    pub log_noise: Vec<f64>,
}

impl AuxiliaryNoiseDataset {
    pub fn to_dataset(&self) -> Result<Dataset, GpError> {
        Dataset::new(self.inputs.clone(), self.log_noise.clone())
    }
}

/// `log(max(v_i, floor))` with `v_i = mean_s 0.5·(t_i − t_i^(s))²` and
/// `t_i^(s) ~ N(mean_i, variance_i)`. Draws are taken point by point, sample
/// by sample.
pub fn log_empirical_noise(
    targets: &[f64],
    means: &[f64],
    variances: &[f64],
    sample_count: usize,
    rng: &mut RandomSource,
) -> Vec<f64> {
    targets
        .iter()
        .zip(means)
        .zip(variances)
        .map(|((t, m), v)| {
            let sd = v.max(0.0).sqrt();
            let mut acc = 0.0;
            for _ in 0..sample_count {
                let draw = m + sd * rng.standard_normal();
                acc += 0.5 * (t - draw) * (t - draw);
            }
            (acc / sample_count.max(1) as f64).max(NOISE_FLOOR).ln()
        })
        .collect()
}

/// Builds the auxiliary log-noise dataset from the predictive distribution
/// (epistemic + the model's own noise) of `g` at the training inputs.
pub fn empirical_noise_estimate(
    g: &GPModel,
    data: &Dataset,
    sample_count: usize,
    rng: &mut RandomSource,
) -> Result<AuxiliaryNoiseDataset, GpError> {
    if sample_count == 0 {
        return Err(GpError::InvalidHyperparameter("sample_count must be positive".into()));
    }
    let tr = g.transform();
    let (mean, epistemic) = g.predict_latent(data.inputs())?;
    let own_noise: Vec<f64> = if g.data().len() == data.len() {
        g.training_noise_variances()
    } else {
        vec![g.noise_variance().unwrap_or(0.0); data.len()]
    };
    let targets: Vec<f64> = data.targets().iter().map(|t| tr.transform_target(*t)).collect();
    let means: Vec<f64> = mean.iter().map(|m| tr.transform_target(*m)).collect();
    let variances: Vec<f64> = epistemic.iter().zip(&own_noise).map(|(e, r)| tr.transform_variance(e + r)).collect();
    let log_noise = log_empirical_noise(&targets, &means, &variances, sample_count, rng);
    Ok(AuxiliaryNoiseDataset { inputs: data.inputs().clone(), log_noise })
}

/// Source of the aleatoric noise level r(x), in standardised units.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum NoiseProcess {
    /// No EM iteration was run: the homoscedastic estimate of G1.
    Constant(f64),
    /// GP over log noise variances; r(x) = exp(posterior mean).
    Gp(GPModel),
}

/// A fitted most-likely heteroscedastic GP.
#[derive(Debug, Clone)]
pub struct HetGPModel {
    mean_gp: GPModel,
    noise: NoiseProcess,
    em_iterations_run: usize,
    noise_history: Vec<Vec<f64>>,
}

impl HetGPModel {
    /// Assembles a model from an already-fitted mean GP and noise process.
    pub fn from_parts(mean_gp: GPModel, noise: NoiseProcess) -> Self {
        Self { mean_gp, noise, em_iterations_run: 0, noise_history: Vec::new() }
    }

    pub fn mean_gp(&self) -> &GPModel {
        &self.mean_gp
    }

    pub fn noise_gp(&self) -> Option<&GPModel> {
        match &self.noise {
            NoiseProcess::Gp(g) => Some(g),
            NoiseProcess::Constant(_) => None,
        }
    }

    pub fn noise_process(&self) -> &NoiseProcess {
        &self.noise
    }

    pub fn data(&self) -> &Dataset {
        self.mean_gp.data()
    }

    pub fn em_iterations_run(&self) -> usize {
        self.em_iterations_run
    }

    /// Training-point noise variances (original units) after each EM iteration.
    pub fn noise_history(&self) -> &[Vec<f64>] {
        &self.noise_history
    }

    fn standardised_noise(&self, queries: &DMatrix<f64>) -> Result<Vec<f64>, GpError> {
        match &self.noise {
            NoiseProcess::Constant(v) => Ok(vec![*v; queries.nrows()]),
            NoiseProcess::Gp(g2) => {
                let (log_mean, _) = g2.predict_latent(queries)?;
                Ok(log_mean.into_iter().map(f64::exp).collect())
            }
        }
    }

    /// Predicted aleatoric noise variance r(x) in original units.
    pub fn noise_variance(&self, queries: &DMatrix<f64>) -> Result<Vec<f64>, GpError> {
        let tr = self.mean_gp.transform();
        Ok(self.standardised_noise(queries)?.into_iter().map(|r| tr.untransform_variance(r)).collect())
    }

    pub fn predict(&self, queries: &DMatrix<f64>) -> Result<PredictiveDistribution, GpError> {
        predict_het(self, queries)
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<PredictiveDistribution, GpError> {
        predict_het(self, &rows_to_matrix(rows, self.data().dim()))
    }
}

/// Heteroscedastic predictive marginals: mean and epistemic variance from the
/// mean GP conditioned with the noise diagonal, plus r(x) as the aleatoric part.
pub fn predict_het(model: &HetGPModel, queries: &DMatrix<f64>) -> Result<PredictiveDistribution, GpError> {
    let (mean, epistemic) = model.mean_gp.predict_latent(queries)?;
    let aleatoric = model.noise_variance(queries)?;
    Ok(PredictiveDistribution::new(mean, epistemic, aleatoric))
}

fn noise_gp_initial() -> InitialHyperparameters {
    InitialHyperparameters {
        lengthscales: None,
        signal_variance: INITIAL_SIGNAL_VARIANCE,
        noise_variance: INITIAL_NOISE_VARIANCE,
    }
}

/// Runs `em_iterations` rounds of the mean-GP / noise-GP alternation.
pub fn fit_mlhgp(
    data: &Dataset,
    em_iterations: usize,
    sample_count: usize,
    rng: &mut RandomSource,
) -> Result<HetGPModel, GpError> {
    if data.len() < 2 {
        return Err(GpError::InvalidDataset("MLHGP needs at least two observations".into()));
    }
    let g1 = fit_gp(data, NoiseMode::Learn)?;
    if !g1.log_marginal_likelihood().is_finite() {
        return Err(GpError::EmDiverged { iteration: 0 });
    }
    if em_iterations == 0 {
        let sigma2 = match g1.noise() {
            NoiseModel::Homoscedastic(v) => *v,
            NoiseModel::Heteroscedastic(_) => unreachable!("G1 is homoscedastic"),
        };
        return Ok(HetGPModel::from_parts(g1, NoiseProcess::Constant(sigma2)));
    }

    let tr = g1.transform().clone();
    let mut current = g1;
    let mut noise_gp = None;
    let mut history = Vec::with_capacity(em_iterations);
    for iteration in 1..=em_iterations {
        let aux = empirical_noise_estimate(&current, data, sample_count, rng)?;
        let g2 = fit_gp_with(&aux.to_dataset()?, NoiseMode::Learn, &noise_gp_initial())?;
        let (log_r, _) = g2.predict_latent(data.inputs())?;
        let r: Vec<f64> = log_r.iter().map(|z| tr.untransform_variance(z.exp())).collect();
        let warm = InitialHyperparameters::from_model(&current);
        let g3 = fit_gp_with(data, NoiseMode::Heteroscedastic(r.clone()), &warm)?;
        if !g2.log_marginal_likelihood().is_finite()
            || !g3.log_marginal_likelihood().is_finite()
            || r.iter().any(|v| !v.is_finite() || *v <= 0.0)
        {
            return Err(GpError::EmDiverged { iteration });
        }
        history.push(r);
        noise_gp = Some(g2);
        current = g3;
    }
    Ok(HetGPModel {
        mean_gp: current,
        noise: NoiseProcess::Gp(noise_gp.expect("at least one EM iteration ran")),
        em_iterations_run: em_iterations,
        noise_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_residual_hits_floor() {
        let mut rng = RandomSource::new(1);
        let z = log_empirical_noise(&[0.7], &[0.7], &[0.0], 100, &mut rng);
        assert_eq!(z, vec![NOISE_FLOOR.ln()]);
    }

    #[test]
    fn matched_mean_variance_two_gives_unit_noise() {
        // E[0.5 (t - t_s)^2] = 0.5 * var when the mean equals t.
        let mut rng = RandomSource::new(7);
        let n = 20;
        let z = log_empirical_noise(&vec![1.0; n], &vec![1.0; n], &vec![2.0; n], 100_000, &mut rng);
        let mean_z = z.iter().sum::<f64>() / n as f64;
        assert!(mean_z.abs() < 0.05, "{mean_z}");
    }

    #[test]
    fn estimate_is_deterministic() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 0.7).collect();
        let ts: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let data = Dataset::new(DMatrix::from_column_slice(12, 1, &xs), ts).unwrap();
        let g = fit_gp(&data, NoiseMode::Learn).unwrap();
        let a = empirical_noise_estimate(&g, &data, 100, &mut RandomSource::new(3)).unwrap();
        let b = empirical_noise_estimate(&g, &data, 100, &mut RandomSource::new(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.log_noise.iter().all(|z| z.is_finite()));
    }

    #[test]
    fn zero_em_iterations_wraps_g1() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let ts: Vec<f64> = xs.iter().map(|x| (0.5 * x).cos()).collect();
        let data = Dataset::new(DMatrix::from_column_slice(8, 1, &xs), ts).unwrap();
        let het = fit_mlhgp(&data, 0, 100, &mut RandomSource::new(0)).unwrap();
        let g1 = fit_gp(&data, NoiseMode::Learn).unwrap();
        let q = DMatrix::from_column_slice(3, 1, &[0.5, 3.3, 9.0]);
        let a = het.predict(&q).unwrap();
        let b = g1.predict(&q).unwrap();
        for i in 0..3 {
            assert!((a.mean[i] - b.mean[i]).abs() < 1e-12);
            assert!((a.aleatoric_variance[i] - g1.noise_variance().unwrap()).abs() < 1e-12);
        }
        assert!(het.noise_gp().is_none());
        assert_eq!(het.em_iterations_run(), 0);
    }

    #[test]
    fn single_point_rejected() {
        let data = Dataset::new(DMatrix::from_element(1, 1, 0.0), vec![1.0]).unwrap();
        assert!(fit_mlhgp(&data, 1, 10, &mut RandomSource::new(0)).is_err());
    }
}

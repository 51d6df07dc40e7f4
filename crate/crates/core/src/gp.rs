//! Homoscedastic Gaussian process regression with a squared-exponential
//! (ARD) kernel.
//!
//! Models are fitted in a standardised space: inputs are shifted/scaled per
//! dimension and targets are centred and scaled to unit variance, so the
//! prior mean is zero. Everything returned to callers (predictive means and
//! variances, noise levels) is in original units.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

use crate::numerics::{cholesky_with_jitter, minimize_bounded, solve_lower, NumericsError, SpdFactor};
use crate::GpError;

/// Initial lengthscale (every input dimension).
pub const INITIAL_LENGTHSCALE: f64 = 1.0;
/// Initial signal amplitude `σ_f²`.
pub const INITIAL_SIGNAL_VARIANCE: f64 = 2.5;
/// Initial observation noise `σ_n²` when it is learned.
pub const INITIAL_NOISE_VARIANCE: f64 = 1.0;

pub const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-3, 1e3);
pub const SIGNAL_VARIANCE_BOUNDS: (f64, f64) = (1e-3, 1e3);
pub const NOISE_VARIANCE_BOUNDS: (f64, f64) = (1e-8, 1e3);

/// Squared-exponential kernel with one lengthscale per input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    lengthscales: Vec<f64>,
    signal_variance: f64,
}

impl Kernel {
    pub fn new(lengthscales: Vec<f64>, signal_variance: f64) -> Result<Self, GpError> {
        if lengthscales.is_empty() {
            return Err(GpError::InvalidHyperparameter("kernel needs at least one lengthscale".into()));
        }
        if lengthscales.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(GpError::InvalidHyperparameter(format!(
                "lengthscales must be positive and finite, got {lengthscales:?}"
            )));
        }
        if !(signal_variance > 0.0) || !signal_variance.is_finite() {
            return Err(GpError::InvalidHyperparameter(format!(
                "signal variance must be positive, got {signal_variance}"
            )));
        }
        Ok(Self { lengthscales, signal_variance })
    }

    /// Isotropic kernel over `dim` inputs.
    pub fn isotropic(dim: usize, lengthscale: f64, signal_variance: f64) -> Result<Self, GpError> {
        Self::new(vec![lengthscale; dim], signal_variance)
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    #[inline]
    fn eval_unchecked<'a>(&self, x: impl Iterator<Item = &'a f64>, y: impl Iterator<Item = &'a f64>) -> f64 {
        let r2: f64 = x
            .zip(y)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let d = (a - b) / l;
                d * d
            })
            .sum();
        self.signal_variance * (-0.5 * r2).exp()
    }
}

/// `σ_f² · exp(−½ Σ_d (x_d − x′_d)² / ℓ_d²)`.
pub fn kernel_eval(kernel: &Kernel, x: &[f64], x_prime: &[f64]) -> Result<f64, GpError> {
    for len in [x.len(), x_prime.len()] {
        if len != kernel.dim() {
            return Err(GpError::DimensionMismatch { expected: kernel.dim(), found: len });
        }
    }
    Ok(kernel.eval_unchecked(x.iter(), x_prime.iter()))
}

/// Cross-covariance between the rows of `a` (n×d) and the rows of `b` (m×d).
pub fn gram_matrix(kernel: &Kernel, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, GpError> {
    for cols in [a.ncols(), b.ncols()] {
        if cols != kernel.dim() {
            return Err(GpError::DimensionMismatch { expected: kernel.dim(), found: cols });
        }
    }
    Ok(DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| kernel.eval_unchecked(a.row(i).iter(), b.row(j).iter())))
}

/// Symmetric Gram matrix of `x` with itself; the upper triangle is mirrored so
/// the result is exactly symmetric.
fn symmetric_gram(kernel: &Kernel, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = kernel.signal_variance;
        for j in 0..i {
            let v = kernel.eval_unchecked(x.row(i).iter(), x.row(j).iter());
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Observations `(x_i, t_i)`; inputs are stored row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: DMatrix<f64>,
    targets: DVector<f64>,
}

impl Dataset {
    pub fn new(inputs: DMatrix<f64>, targets: Vec<f64>) -> Result<Self, GpError> {
        if inputs.nrows() == 0 || inputs.ncols() == 0 {
            return Err(GpError::InvalidDataset("dataset must contain at least one point".into()));
        }
        if inputs.nrows() != targets.len() {
            return Err(GpError::InvalidDataset(format!(
                "{} input rows but {} targets",
                inputs.nrows(),
                targets.len()
            )));
        }
        if inputs.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(GpError::InvalidDataset("dataset contains non-finite values".into()));
        }
        Ok(Self { inputs, targets: DVector::from_vec(targets) })
    }

    pub fn from_rows(rows: &[Vec<f64>], targets: Vec<f64>) -> Result<Self, GpError> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(GpError::InvalidDataset("input rows have differing lengths".into()));
        }
        Self::new(rows_to_matrix(rows, d), targets)
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn input(&self, i: usize) -> Vec<f64> {
        self.inputs.row(i).iter().copied().collect()
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    /// Subset by row indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self, GpError> {
        let inputs = DMatrix::from_fn(indices.len(), self.dim(), |r, c| self.inputs[(indices[r], c)]);
        Self::new(inputs, indices.iter().map(|&i| self.targets[i]).collect())
    }

    pub fn push(&mut self, x: &[f64], t: f64) -> Result<(), GpError> {
        if x.len() != self.dim() {
            return Err(GpError::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(GpError::InvalidDataset("non-finite observation".into()));
        }
        let n = self.len();
        let inputs = std::mem::replace(&mut self.inputs, DMatrix::zeros(0, 0));
        self.inputs = inputs.insert_row(n, 0.0);
        for (c, v) in x.iter().enumerate() {
            self.inputs[(n, c)] = *v;
        }
        let targets = std::mem::replace(&mut self.targets, DVector::zeros(0));
        self.targets = targets.push(t);
        Ok(())
    }
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), d, |r, c| rows[r][c])
}

/// Per-dimension input shift/scale and output mean/std.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardisationTransform {
    pub input_shift: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub output_mean: f64,
    pub output_std: f64,
}

fn mean_and_std<'a>(values: impl Iterator<Item = &'a f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn positive_or_one(s: f64) -> f64 {
    if s > 1e-12 * 1.0f64.max(s.abs()) && s.is_finite() {
        s
    } else {
        1.0
    }
}

impl StandardisationTransform {
    /// Z-scores both inputs and outputs; degenerate (constant) columns or
    /// targets get a unit scale.
    pub fn fit(data: &Dataset) -> Self {
        let (input_shift, input_scale) = (0..data.dim())
            .map(|c| {
                let (m, s) = mean_and_std(data.inputs.column(c).iter());
                let s = if s > 0.0 { s } else { 1.0 };
                (m, s)
            })
            .unzip();
        let (output_mean, s) = mean_and_std(data.targets.iter());
        let output_std = if data.len() > 1 && s > 0.0 { positive_or_one(s) } else { 1.0 };
        Self { input_shift, input_scale, output_mean, output_std }
    }

    pub fn identity(dim: usize) -> Self {
        Self { input_shift: vec![0.0; dim], input_scale: vec![1.0; dim], output_mean: 0.0, output_std: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.input_shift.len()
    }

    pub fn transform_inputs(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| (x[(r, c)] - self.input_shift[c]) / self.input_scale[c])
    }

    pub fn untransform_inputs(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| x[(r, c)] * self.input_scale[c] + self.input_shift[c])
    }

    pub fn transform_target(&self, t: f64) -> f64 {
        (t - self.output_mean) / self.output_std
    }

    pub fn untransform_target(&self, t: f64) -> f64 {
        t * self.output_std + self.output_mean
    }

    pub fn transform_variance(&self, v: f64) -> f64 {
        v / (self.output_std * self.output_std)
    }

    pub fn untransform_variance(&self, v: f64) -> f64 {
        v * self.output_std * self.output_std
    }
}

/// How the observation noise is treated when fitting.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseMode {
    /// Learn a single noise variance by marginal likelihood.
    Learn,
    /// Fixed noise variance in original output units².
    Fixed(f64),
    /// Fixed per-point noise variances (original units²), one per datum.
    Heteroscedastic(Vec<f64>),
}

/// Noise as used inside the standardised space.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    Homoscedastic(f64),
    Heteroscedastic(Vec<f64>),
}

impl NoiseModel {
    fn diagonal(&self, n: usize) -> Vec<f64> {
        match self {
            NoiseModel::Homoscedastic(v) => vec![*v; n],
            NoiseModel::Heteroscedastic(r) => r.clone(),
        }
    }
}

/// Starting hyperparameters for a fit (standardised space).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialHyperparameters {
    pub lengthscales: Option<Vec<f64>>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Default for InitialHyperparameters {
    fn default() -> Self {
        Self { lengthscales: None, signal_variance: INITIAL_SIGNAL_VARIANCE, noise_variance: INITIAL_NOISE_VARIANCE }
    }
}

impl InitialHyperparameters {
    /// Warm start from a previously fitted model.
    pub fn from_model(model: &GPModel) -> Self {
        Self {
            lengthscales: Some(model.kernel.lengthscales.clone()),
            signal_variance: model.kernel.signal_variance,
            noise_variance: match &model.noise {
                NoiseModel::Homoscedastic(v) => *v,
                NoiseModel::Heteroscedastic(_) => INITIAL_NOISE_VARIANCE,
            },
        }
    }
}

/// Log marginal likelihood of standardised data and its gradient with
/// respect to `(log ℓ_1..d, log σ_f²[, log σ_n²])`. The noise entry is only
/// present for homoscedastic noise.
pub fn log_marginal_likelihood(
    kernel: &Kernel,
    noise: &NoiseModel,
    inputs: &DMatrix<f64>,
    targets: &DVector<f64>,
) -> Result<(f64, Vec<f64>), GpError> {
    let n = inputs.nrows();
    if targets.len() != n {
        return Err(GpError::DimensionMismatch { expected: n, found: targets.len() });
    }
    if inputs.ncols() != kernel.dim() {
        return Err(GpError::DimensionMismatch { expected: kernel.dim(), found: inputs.ncols() });
    }
    if let NoiseModel::Heteroscedastic(r) = noise {
        if r.len() != n {
            return Err(GpError::DimensionMismatch { expected: n, found: r.len() });
        }
    }
    let k_se = symmetric_gram(kernel, inputs);
    let mut k = k_se.clone();
    for (i, r) in noise.diagonal(n).into_iter().enumerate() {
        k[(i, i)] += r;
    }
    let factor = cholesky_with_jitter(&k, 0.0)?;
    let alpha = factor.solve_vec(targets)?;
    let value = -0.5 * targets.dot(&alpha) - 0.5 * factor.log_det() - 0.5 * n as f64 * (2.0 * PI).ln();

    let k_inv = factor.inverse();
    let d = kernel.dim();
    let mut grad = vec![0.0; d + 1];
    let mut trace_w = 0.0;
    for i in 0..n {
        let w_ii = alpha[i] * alpha[i] - k_inv[(i, i)];
        trace_w += w_ii;
        grad[d] += 0.5 * w_ii * k_se[(i, i)];
        for j in 0..i {
            // symmetric off-diagonal pair counted twice
            let w = alpha[i] * alpha[j] - k_inv[(i, j)];
            let kij = k_se[(i, j)];
            grad[d] += w * kij;
            for (c, l) in kernel.lengthscales.iter().enumerate() {
                let diff = (inputs[(i, c)] - inputs[(j, c)]) / l;
                grad[c] += w * kij * diff * diff;
            }
        }
    }
    if let NoiseModel::Homoscedastic(v) = noise {
        grad.push(0.5 * v * trace_w);
    }
    Ok((value, grad))
}

/// A fitted GP. Immutable once built.
#[derive(Debug, Clone)]
pub struct GPModel {
    kernel: Kernel,
    noise: NoiseModel,
    data: Dataset,
    std_inputs: DMatrix<f64>,
    transform: StandardisationTransform,
    factor: SpdFactor,
    alpha: DVector<f64>,
    log_marginal_likelihood: f64,
}

impl GPModel {
    /// Builds a model from fixed hyperparameters (no optimisation). `noise`
    /// is given in the standardised space of `transform`.
    pub fn from_parts(
        data: Dataset,
        kernel: Kernel,
        noise: NoiseModel,
        transform: StandardisationTransform,
    ) -> Result<Self, GpError> {
        if kernel.dim() != data.dim() || transform.dim() != data.dim() {
            return Err(GpError::DimensionMismatch { expected: data.dim(), found: kernel.dim() });
        }
        let std_inputs = transform.transform_inputs(data.inputs());
        let std_targets = data.targets().map(|t| transform.transform_target(t));
        let n = data.len();
        if let NoiseModel::Heteroscedastic(r) = &noise {
            if r.len() != n {
                return Err(GpError::DimensionMismatch { expected: n, found: r.len() });
            }
        }
        let mut k = symmetric_gram(&kernel, &std_inputs);
        for (i, r) in noise.diagonal(n).into_iter().enumerate() {
            k[(i, i)] += r;
        }
        let factor = cholesky_with_jitter(&k, 0.0)?;
        let alpha = factor.solve_vec(&std_targets)?;
        let log_marginal_likelihood =
            -0.5 * std_targets.dot(&alpha) - 0.5 * factor.log_det() - 0.5 * n as f64 * (2.0 * PI).ln();
        Ok(Self { kernel, noise, data, std_inputs, transform, factor, alpha, log_marginal_likelihood })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn transform(&self) -> &StandardisationTransform {
        &self.transform
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    /// Log marginal likelihood of the standardised training targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    /// Homoscedastic noise variance in original units, if the model has one.
    pub fn noise_variance(&self) -> Option<f64> {
        match self.noise {
            NoiseModel::Homoscedastic(v) => Some(self.transform.untransform_variance(v)),
            NoiseModel::Heteroscedastic(_) => None,
        }
    }

    /// Noise variance at each training input, original units.
    pub fn training_noise_variances(&self) -> Vec<f64> {
        self.noise.diagonal(self.data.len()).into_iter().map(|v| self.transform.untransform_variance(v)).collect()
    }

    /// Latent posterior at `queries`: mean and epistemic variance in original
    /// units.
    pub fn predict_latent(&self, queries: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>), GpError> {
        if queries.ncols() != self.data.dim() {
            return Err(GpError::DimensionMismatch { expected: self.data.dim(), found: queries.ncols() });
        }
        let xq = self.transform.transform_inputs(queries);
        // n × q
        let k_cross = gram_matrix(&self.kernel, &self.std_inputs, &xq)?;
        let mean_std = k_cross.tr_mul(&self.alpha);
        let v = solve_lower(&self.factor, &k_cross).map_err(GpError::from)?;
        let sf2 = self.kernel.signal_variance;
        let mut mean = Vec::with_capacity(xq.nrows());
        let mut epistemic = Vec::with_capacity(xq.nrows());
        for q in 0..xq.nrows() {
            let explained: f64 = v.column(q).iter().map(|e| e * e).sum();
            mean.push(self.transform.untransform_target(mean_std[q]));
            epistemic.push(self.transform.untransform_variance((sf2 - explained).max(0.0)));
        }
        Ok((mean, epistemic))
    }

    /// Posterior predictive over targets. A homoscedastic model adds its
    /// noise variance as the aleatoric part; a model fitted with a fixed
    /// per-point diagonal has no noise estimate away from its training
    /// inputs and reports zero aleatoric variance (use the heteroscedastic
    /// model for that).
    pub fn predict(&self, queries: &DMatrix<f64>) -> Result<PredictiveDistribution, GpError> {
        let (mean, epistemic) = self.predict_latent(queries)?;
        let noise = match self.noise {
            NoiseModel::Homoscedastic(v) => self.transform.untransform_variance(v),
            NoiseModel::Heteroscedastic(_) => 0.0,
        };
        let aleatoric = vec![noise; mean.len()];
        Ok(PredictiveDistribution::new(mean, epistemic, aleatoric))
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<PredictiveDistribution, GpError> {
        self.predict(&rows_to_matrix(rows, self.data.dim()))
    }
}

/// Fits a GP with the default initial hyperparameters.
pub fn fit_gp(data: &Dataset, noise_mode: NoiseMode) -> Result<GPModel, GpError> {
    fit_gp_with(data, noise_mode, &InitialHyperparameters::default())
}

/// Maximises the log marginal likelihood over log-hyperparameters from the
/// given starting point.
pub fn fit_gp_with(
    data: &Dataset,
    noise_mode: NoiseMode,
    initial: &InitialHyperparameters,
) -> Result<GPModel, GpError> {
    let transform = StandardisationTransform::fit(data);
    let d = data.dim();
    let n = data.len();
    let std_inputs = transform.transform_inputs(data.inputs());
    let std_targets = data.targets().map(|t| transform.transform_target(t));

    let fixed_noise = match &noise_mode {
        NoiseMode::Learn => None,
        NoiseMode::Fixed(v) => {
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(GpError::InvalidHyperparameter(format!("noise variance {v}")));
            }
            Some(NoiseModel::Homoscedastic(transform.transform_variance(*v)))
        }
        NoiseMode::Heteroscedastic(r) => {
            if r.len() != n {
                return Err(GpError::DimensionMismatch { expected: n, found: r.len() });
            }
            if r.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(GpError::InvalidHyperparameter("noise diagonal must be non-negative".into()));
            }
            Some(NoiseModel::Heteroscedastic(r.iter().map(|v| transform.transform_variance(*v)).collect()))
        }
    };

    let clamp_ln = |v: f64, (lo, hi): (f64, f64)| v.clamp(lo, hi).ln();
    let mut start: Vec<f64> = match &initial.lengthscales {
        Some(ls) if ls.len() == d => ls.iter().map(|l| clamp_ln(*l, LENGTHSCALE_BOUNDS)).collect(),
        _ => vec![INITIAL_LENGTHSCALE.ln(); d],
    };
    start.push(clamp_ln(initial.signal_variance, SIGNAL_VARIANCE_BOUNDS));
    let mut lower = vec![LENGTHSCALE_BOUNDS.0.ln(); d];
    let mut upper = vec![LENGTHSCALE_BOUNDS.1.ln(); d];
    lower.push(SIGNAL_VARIANCE_BOUNDS.0.ln());
    upper.push(SIGNAL_VARIANCE_BOUNDS.1.ln());
    if fixed_noise.is_none() {
        start.push(clamp_ln(initial.noise_variance, NOISE_VARIANCE_BOUNDS));
        lower.push(NOISE_VARIANCE_BOUNDS.0.ln());
        upper.push(NOISE_VARIANCE_BOUNDS.1.ln());
    }

    let unpack = |theta: &[f64]| -> (Kernel, NoiseModel) {
        let kernel =
            Kernel { lengthscales: theta[..d].iter().map(|v| v.exp()).collect(), signal_variance: theta[d].exp() };
        let noise = match &fixed_noise {
            Some(noise) => noise.clone(),
            None => NoiseModel::Homoscedastic(theta[d + 1].exp()),
        };
        (kernel, noise)
    };

    let objective = |theta: &[f64]| -> (f64, Vec<f64>) {
        let (kernel, noise) = unpack(theta);
        match log_marginal_likelihood(&kernel, &noise, &std_inputs, &std_targets) {
            Ok((value, grad)) => (-value, grad.into_iter().map(|g| -g).collect()),
            Err(_) => (f64::INFINITY, vec![f64::NAN; theta.len()]),
        }
    };

    let result = minimize_bounded(objective, &start, &lower, &upper).map_err(|e| match e {
        NumericsError::NonFiniteObjective => GpError::NonFiniteLikelihood,
        other => GpError::Numerics(other),
    })?;
    let (kernel, noise) = unpack(&result.argmin);
    GPModel::from_parts(data.clone(), kernel, noise, transform)
}

/// Per-query Gaussian predictive marginals in original units.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    pub mean: Vec<f64>,
    pub epistemic_variance: Vec<f64>,
    pub aleatoric_variance: Vec<f64>,
    pub total_variance: Vec<f64>,
}

impl PredictiveDistribution {
    pub fn new(mean: Vec<f64>, epistemic_variance: Vec<f64>, aleatoric_variance: Vec<f64>) -> Self {
        let total_variance = epistemic_variance.iter().zip(&aleatoric_variance).map(|(e, a)| e + a).collect();
        Self { mean, epistemic_variance, aleatoric_variance, total_variance }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Mean negative log predictive density of `truth` under the marginals.
pub fn nlpd(predictions: &PredictiveDistribution, truth: &[f64]) -> Result<f64, GpError> {
    if truth.len() != predictions.len() {
        return Err(GpError::DimensionMismatch { expected: predictions.len(), found: truth.len() });
    }
    if truth.is_empty() {
        return Err(GpError::InvalidDataset("nlpd of an empty set".into()));
    }
    let mut total = 0.0;
    for (i, ((t, m), v)) in truth.iter().zip(&predictions.mean).zip(&predictions.total_variance).enumerate() {
        if !(*v > 0.0) {
            return Err(GpError::NonPositiveVariance { index: i, variance: *v });
        }
        total += 0.5 * (2.0 * PI * v).ln() + (t - m) * (t - m) / (2.0 * v);
    }
    Ok(total / truth.len() as f64)
}

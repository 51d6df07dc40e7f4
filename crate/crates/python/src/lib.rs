//! Python bindings. Inputs are plain lists: a design matrix is a list of
//! rows, targets a list of floats.

use std::path::PathBuf;

use hetbo::bo::{parse_method, CampaignConfig, CampaignRecord, DEFAULT_INIT_DESIGN_SIZE};
use hetbo::mlhgp::{DEFAULT_EM_ITERATIONS, DEFAULT_SAMPLE_COUNT};
use hetbo::objectives::{branin_problem, sin_problem, soil_problem, Objective};
use hetbo::{Dataset, GPModel, HetGPModel, NoiseMode, PredictiveDistribution, RandomSource, Sense};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_error(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn sense(minimise: bool) -> Sense {
    if minimise {
        Sense::Minimise
    } else {
        Sense::Maximise
    }
}

fn dataset(x: &[Vec<f64>], t: Vec<f64>) -> PyResult<Dataset> {
    Dataset::from_rows(x, t).map_err(value_error)
}

/// Predictive mean and variance split into epistemic and aleatoric parts.
#[pyclass(name = "Prediction", module = "hetbo_py", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyPrediction {
    mean: Vec<f64>,
    epistemic_variance: Vec<f64>,
    aleatoric_variance: Vec<f64>,
    total_variance: Vec<f64>,
}

impl From<PredictiveDistribution> for PyPrediction {
    fn from(p: PredictiveDistribution) -> Self {
        Self {
            mean: p.mean,
            epistemic_variance: p.epistemic_variance,
            aleatoric_variance: p.aleatoric_variance,
            total_variance: p.total_variance,
        }
    }
}

#[pymethods]
impl PyPrediction {
    fn __len__(&self) -> usize {
        self.mean.len()
    }
}

/// Fitted homoscedastic GP.
#[pyclass(name = "GaussianProcess", module = "hetbo_py", frozen)]
pub struct PyGp {
    inner: GPModel,
}

#[pymethods]
impl PyGp {
    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<PyPrediction> {
        self.inner.predict_rows(&x).map(Into::into).map_err(value_error)
    }

    #[getter]
    fn lengthscales(&self) -> Vec<f64> {
        self.inner.kernel().lengthscales().to_vec()
    }

    #[getter]
    fn signal_variance(&self) -> f64 {
        self.inner.kernel().signal_variance()
    }

    /// Learned or fixed noise variance in target units.
    #[getter]
    fn noise_variance(&self) -> Option<f64> {
        self.inner.noise_variance()
    }

    #[getter]
    fn log_marginal_likelihood(&self) -> f64 {
        self.inner.log_marginal_likelihood()
    }
}

/// Fitted most-likely heteroscedastic GP.
#[pyclass(name = "HeteroscedasticGP", module = "hetbo_py", frozen)]
pub struct PyHetGp {
    inner: HetGPModel,
}

#[pymethods]
impl PyHetGp {
    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<PyPrediction> {
        self.inner.predict_rows(&x).map(Into::into).map_err(value_error)
    }

    /// Predicted aleatoric noise variance at each row of `x`.
    fn noise_variance(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        Ok(self.inner.predict_rows(&x).map_err(value_error)?.aleatoric_variance)
    }

    #[getter]
    fn em_iterations(&self) -> usize {
        self.inner.em_iterations_run()
    }
}

/// Fits a GP. With `noise_variance` the noise level is fixed, otherwise learned.
#[pyfunction]
#[pyo3(signature = (x, t, noise_variance=None))]
fn fit_gp(x: Vec<Vec<f64>>, t: Vec<f64>, noise_variance: Option<f64>) -> PyResult<PyGp> {
    let data = dataset(&x, t)?;
    let mode = noise_variance.map_or(NoiseMode::Learn, NoiseMode::Fixed);
    hetbo::fit_gp(&data, mode).map(|inner| PyGp { inner }).map_err(runtime_error)
}

#[pyfunction]
#[pyo3(signature = (x, t, em_iterations=DEFAULT_EM_ITERATIONS, sample_count=DEFAULT_SAMPLE_COUNT, seed=0))]
fn fit_mlhgp(x: Vec<Vec<f64>>, t: Vec<f64>, em_iterations: usize, sample_count: usize, seed: u64) -> PyResult<PyHetGp> {
    let data = dataset(&x, t)?;
    let mut rng = RandomSource::new(seed);
    hetbo::fit_mlhgp(&data, em_iterations, sample_count, &mut rng).map(|inner| PyHetGp { inner }).map_err(runtime_error)
}

#[pyfunction]
#[pyo3(signature = (mean, sigma, incumbent, minimise=true))]
fn expected_improvement(mean: f64, sigma: f64, incumbent: f64, minimise: bool) -> f64 {
    hetbo::expected_improvement(mean, sigma, incumbent, sense(minimise))
}

#[pyfunction]
#[pyo3(signature = (mean, sigma, incumbent, noise_std, minimise=true))]
fn augmented_ei(mean: f64, sigma: f64, incumbent: f64, noise_std: f64, minimise: bool) -> f64 {
    hetbo::augmented_ei(mean, sigma, incumbent, noise_std, sense(minimise))
}

#[pyfunction]
#[pyo3(signature = (mean, sigma, incumbent, noise_variance, minimise=true))]
fn het_augmented_ei(mean: f64, sigma: f64, incumbent: f64, noise_variance: f64, minimise: bool) -> f64 {
    hetbo::het_augmented_ei(mean, sigma, incumbent, noise_variance, sense(minimise))
}

#[pyfunction]
#[pyo3(signature = (mean, sigma, incumbent, noise_variance, alpha=0.5, minimise=true))]
fn anpei(mean: f64, sigma: f64, incumbent: f64, noise_variance: f64, alpha: f64, minimise: bool) -> f64 {
    hetbo::anpei(mean, sigma, incumbent, noise_variance, alpha, sense(minimise))
}

/// Negative log predictive density of `truth` under independent Gaussians.
#[pyfunction]
fn nlpd(mean: Vec<f64>, variance: Vec<f64>, truth: Vec<f64>) -> PyResult<f64> {
    let n = mean.len();
    let p = PredictiveDistribution::new(mean, vec![0.0; n], variance);
    hetbo::nlpd(&p, &truth).map_err(value_error)
}

#[pyfunction]
fn branin(x1: f64, x2: f64) -> f64 {
    hetbo::objectives::branin(x1, x2)
}

/// `(g, s, f)` of a toy problem (`sin1d` or `branin`) at `x`.
#[pyfunction]
fn problem_values(problem: &str, x: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let p = match problem {
        "sin1d" => sin_problem(),
        "branin" => branin_problem(),
        other => return Err(value_error(format!("unknown problem `{other}`"))),
    };
    if x.len() != p.domain().dim() {
        return Err(value_error(format!("expected {} inputs, found {}", p.domain().dim(), x.len())));
    }
    Ok((p.g(&x), p.s(&x), p.f(&x)))
}

/// One optimisation campaign.
#[pyclass(name = "Campaign", module = "hetbo_py", frozen)]
pub struct PyCampaign {
    method: String,
    record: CampaignRecord,
}

#[pymethods]
impl PyCampaign {
    #[getter]
    fn method(&self) -> &str {
        &self.method
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.record.seed
    }

    /// `(iteration, x, observed_t, f_score, incumbent, best_so_far_f)` per
    /// evaluation; initial-design rows have iteration 0.
    #[getter]
    fn rows(&self) -> Vec<(usize, Vec<f64>, f64, f64, f64, f64)> {
        self.record
            .rows
            .iter()
            .map(|r| (r.iteration, r.x.clone(), r.observed, r.score, r.incumbent, r.best_so_far))
            .collect()
    }

    #[getter]
    fn best_score(&self) -> f64 {
        self.record.best_score()
    }

    #[getter]
    fn final_suggestion(&self) -> Option<Vec<f64>> {
        self.record.final_suggestion().map(<[f64]>::to_vec)
    }

    /// Best-so-far score after the initial design and after each iteration.
    #[getter]
    fn trajectory(&self) -> Vec<f64> {
        self.record.trajectory()
    }
}

#[pyfunction]
#[pyo3(signature = (
    problem, method, budget, seed=0, init=None, alpha=0.5,
    em_iterations=DEFAULT_EM_ITERATIONS, sample_count=DEFAULT_SAMPLE_COUNT, data=None
))]
#[allow(clippy::too_many_arguments)]
fn run_campaign(
    py: Python<'_>,
    problem: &str,
    method: &str,
    budget: usize,
    seed: u64,
    init: Option<usize>,
    alpha: f64,
    em_iterations: usize,
    sample_count: usize,
    data: Option<PathBuf>,
) -> PyResult<PyCampaign> {
    let (surrogate, acquisition) = parse_method(method, alpha).map_err(value_error)?;
    let mut objective: Box<dyn Objective + Send> = match (problem, data) {
        ("sin1d", None) => Box::new(sin_problem()),
        ("branin", None) => Box::new(branin_problem()),
        ("soil", Some(path)) => {
            let mut rng = RandomSource::new(seed);
            Box::new(soil_problem(&path, init.unwrap_or(10), &mut rng).map_err(value_error)?)
        }
        ("soil", None) => return Err(value_error("the soil problem requires `data`")),
        (other, _) => {
            return Err(value_error(format!("unknown problem `{other}` (or `data` given for a toy problem)")))
        }
    };
    let config = CampaignConfig {
        init_design_size: init.unwrap_or(DEFAULT_INIT_DESIGN_SIZE),
        em_iterations,
        sample_count,
        ..CampaignConfig::new(surrogate, acquisition, budget, seed)
    };
    let record = py.detach(|| hetbo::run_campaign(&config, objective.as_mut())).map_err(runtime_error)?;
    Ok(PyCampaign { method: config.method_label(), record })
}

#[pymodule]
fn hetbo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPrediction>()?;
    m.add_class::<PyGp>()?;
    m.add_class::<PyHetGp>()?;
    m.add_class::<PyCampaign>()?;
    m.add_function(wrap_pyfunction!(fit_gp, m)?)?;
    m.add_function(wrap_pyfunction!(fit_mlhgp, m)?)?;
    m.add_function(wrap_pyfunction!(expected_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(augmented_ei, m)?)?;
    m.add_function(wrap_pyfunction!(het_augmented_ei, m)?)?;
    m.add_function(wrap_pyfunction!(anpei, m)?)?;
    m.add_function(wrap_pyfunction!(nlpd, m)?)?;
    m.add_function(wrap_pyfunction!(branin, m)?)?;
    m.add_function(wrap_pyfunction!(problem_values, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    Ok(())
}

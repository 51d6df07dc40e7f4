//! Expected improvement and its noise-aware variants, plus candidate-based
//! maximisation over a box domain.
//!
//! Acquisitions are evaluated on standardised outputs (the surrogate's own
//! output transform), so the ANPEI trade-off constant means the same thing
//! across problems with different target scales.

use nalgebra::DMatrix;

use crate::gp::{Dataset, GPModel, PredictiveDistribution, StandardisationTransform};
use crate::mlhgp::HetGPModel;
use crate::numerics::{std_normal_cdf, std_normal_pdf, RandomSource};
use crate::{AcquisitionError, GpError};

/// Default ANPEI scalarisation constant.
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const GRID_POINTS_1D: usize = 1000;
pub const GRID_POINTS_PER_AXIS_2D: usize = 50;
pub const RANDOM_CANDIDATES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Minimise,
    Maximise,
}

impl Sense {
    /// True if `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Minimise => a < b,
            Sense::Maximise => a > b,
        }
    }

    /// Sign that turns values under this sense into values to minimise.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Minimise => 1.0,
            Sense::Maximise => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AcquisitionKind {
    Ei,
    /// Augmented EI with a fixed noise standard deviation (original units).
    /// `None` uses the surrogate's own homoscedastic noise estimate.
    Aei {
        noise_std: Option<f64>,
    },
    HetAei,
    Anpei {
        alpha: f64,
    },
}

impl AcquisitionKind {
    /// Whether the acquisition relies on an input-dependent noise estimate.
    pub fn is_heteroscedastic(&self) -> bool {
        matches!(self, AcquisitionKind::HetAei | AcquisitionKind::Anpei { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            AcquisitionKind::Ei => "ei",
            AcquisitionKind::Aei { .. } => "aei",
            AcquisitionKind::HetAei => "het-aei",
            AcquisitionKind::Anpei { .. } => "anpei",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    pub sense: Sense,
}

impl AcquisitionSpec {
    pub fn new(kind: AcquisitionKind, sense: Sense) -> Result<Self, AcquisitionError> {
        match kind {
            AcquisitionKind::Anpei { alpha } if !(0.0..=1.0).contains(&alpha) => {
                Err(AcquisitionError::InvalidSpec(format!("alpha must lie in [0, 1], got {alpha}")))
            }
            AcquisitionKind::Aei { noise_std: Some(s) } if !(s >= 0.0) => {
                Err(AcquisitionError::InvalidSpec(format!("AEI noise level must be non-negative, got {s}")))
            }
            _ => Ok(Self { kind, sense }),
        }
    }
}

/// Best observed target so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub value: f64,
    pub location: Vec<f64>,
}

impl Incumbent {
    /// Extremal observed target under `sense` (first occurrence on ties).
    pub fn from_observations(data: &Dataset, sense: Sense) -> Self {
        let mut best = 0;
        for i in 1..data.len() {
            if sense.better(data.target(i), data.target(best)) {
                best = i;
            }
        }
        Self { value: data.target(best), location: data.input(best) }
    }
}

/// Closed-form EI. For minimisation with `u = η − μ`:
/// `u·Φ(u/σ) + σ·φ(u/σ)`, and `max(0, u)` when `σ = 0`.
pub fn expected_improvement(mean: f64, sigma: f64, incumbent: f64, sense: Sense) -> f64 {
    let u = sense.sign() * (incumbent - mean);
    if !(sigma > 0.0) {
        return u.max(0.0);
    }
    let z = u / sigma;
    (u * std_normal_cdf(z) + sigma * std_normal_pdf(z)).max(0.0)
}

fn noise_multiplier(sigma: f64, noise_std: f64) -> f64 {
    let denom = (sigma * sigma + noise_std * noise_std).sqrt();
    if denom == 0.0 {
        1.0
    } else {
        1.0 - noise_std / denom
    }
}

/// EI scaled by `1 − σ_n / √(σ² + σ_n²)`.
pub fn augmented_ei(mean: f64, sigma: f64, incumbent: f64, noise_std: f64, sense: Sense) -> f64 {
    expected_improvement(mean, sigma, incumbent, sense) * noise_multiplier(sigma, noise_std)
}

/// EI scaled by `1 − √r / √(σ² + r)`, with `r` the predicted aleatoric
/// variance at the candidate.
pub fn het_augmented_ei(mean: f64, sigma: f64, incumbent: f64, noise_variance: f64, sense: Sense) -> f64 {
    expected_improvement(mean, sigma, incumbent, sense) * noise_multiplier(sigma, noise_variance.max(0.0).sqrt())
}

/// `α·EI − (1 − α)·√r`.
pub fn anpei(mean: f64, sigma: f64, incumbent: f64, noise_variance: f64, alpha: f64, sense: Sense) -> f64 {
    alpha * expected_improvement(mean, sigma, incumbent, sense) - (1.0 - alpha) * noise_variance.max(0.0).sqrt()
}

/// Axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, AcquisitionError> {
        if lower.is_empty()
            || lower.len() != upper.len()
            || lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite())
        {
            return Err(AcquisitionError::EmptyDomain);
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| v >= l && v <= u)
    }

    pub fn sample(&self, rng: &mut RandomSource) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| rng.uniform_in(*l, *u)).collect()
    }

    /// Regular grid including both end points: 1000 points in 1D, 50×50 in
    /// 2D, and ~2500 points in higher dimensions. Row-major in the first axis.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let per_axis = match d {
            1 => GRID_POINTS_1D,
            2 => GRID_POINTS_PER_AXIS_2D,
            _ => ((2500f64).powf(1.0 / d as f64).floor() as usize).max(2),
        };
        self.grid_with(per_axis)
    }

    pub fn grid_with(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let axis = |k: usize, i: usize| {
            if per_axis == 1 {
                0.5 * (self.lower[k] + self.upper[k])
            } else {
                self.lower[k] + (self.upper[k] - self.lower[k]) * i as f64 / (per_axis - 1) as f64
            }
        };
        let total = per_axis.pow(d as u32);
        (0..total)
            .map(|mut flat| {
                let mut idx = vec![0; d];
                for k in (0..d).rev() {
                    idx[k] = flat % per_axis;
                    flat /= per_axis;
                }
                (0..d).map(|k| axis(k, idx[k])).collect()
            })
            .collect()
    }
}

/// A fitted surrogate of either kind.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Surrogate {
    Homoscedastic(GPModel),
    Heteroscedastic(HetGPModel),
}

impl Surrogate {
    pub fn predict(&self, queries: &DMatrix<f64>) -> Result<PredictiveDistribution, GpError> {
        match self {
            Surrogate::Homoscedastic(g) => g.predict(queries),
            Surrogate::Heteroscedastic(h) => h.predict(queries),
        }
    }

    pub fn transform(&self) -> &StandardisationTransform {
        match self {
            Surrogate::Homoscedastic(g) => g.transform(),
            Surrogate::Heteroscedastic(h) => h.mean_gp().transform(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Surrogate::Homoscedastic(g) => g.data().dim(),
            Surrogate::Heteroscedastic(h) => h.data().dim(),
        }
    }

    /// Homoscedastic noise variance (original units) where defined.
    pub fn noise_variance(&self) -> Option<f64> {
        match self {
            Surrogate::Homoscedastic(g) => g.noise_variance(),
            Surrogate::Heteroscedastic(_) => None,
        }
    }
}

/// Evaluates the acquisition on a batch of predictive marginals, in the
/// standardised output space of `transform`.
pub fn evaluate_acquisition(
    spec: &AcquisitionSpec,
    predictions: &PredictiveDistribution,
    incumbent: f64,
    transform: &StandardisationTransform,
    homoscedastic_noise: Option<f64>,
) -> Result<Vec<f64>, AcquisitionError> {
    let eta = transform.transform_target(incumbent);
    // the standardisation scale is positive, so the sense is preserved
    let aei_noise_std = match spec.kind {
        AcquisitionKind::Aei { noise_std: Some(s) } => Some(s / transform.output_std),
        AcquisitionKind::Aei { noise_std: None } => Some(
            transform
                .transform_variance(homoscedastic_noise.ok_or_else(|| {
                    AcquisitionError::InvalidSpec("AEI needs a fixed noise level or a homoscedastic surrogate".into())
                })?)
                .sqrt(),
        ),
        _ => None,
    };
    Ok((0..predictions.len())
        .map(|i| {
            let mu = transform.transform_target(predictions.mean[i]);
            let sigma = transform.transform_variance(predictions.total_variance[i]).max(0.0).sqrt();
            let r = transform.transform_variance(predictions.aleatoric_variance[i]);
            match spec.kind {
                AcquisitionKind::Ei => expected_improvement(mu, sigma, eta, spec.sense),
                AcquisitionKind::Aei { .. } => augmented_ei(mu, sigma, eta, aei_noise_std.unwrap_or(0.0), spec.sense),
                AcquisitionKind::HetAei => het_augmented_ei(mu, sigma, eta, r, spec.sense),
                AcquisitionKind::Anpei { alpha } => anpei(mu, sigma, eta, r, alpha, spec.sense),
            }
        })
        .collect())
}

/// Candidate set used by [`maximise_acquisition`]: the deterministic grid
/// followed by uniform random draws.
pub fn candidate_set(domain: &Domain, rng: &mut RandomSource) -> Vec<Vec<f64>> {
    let mut candidates = domain.grid();
    candidates.extend((0..RANDOM_CANDIDATES).map(|_| domain.sample(rng)));
    candidates
}

/// Best candidate by acquisition value; ties go to the lowest index.
pub fn maximise_acquisition(
    spec: &AcquisitionSpec,
    surrogate: &Surrogate,
    incumbent: &Incumbent,
    domain: &Domain,
    rng: &mut RandomSource,
) -> Result<(Vec<f64>, f64), AcquisitionError> {
    let domain = Domain::new(domain.lower.clone(), domain.upper.clone())?;
    if domain.dim() != surrogate.dim() {
        return Err(GpError::DimensionMismatch { expected: surrogate.dim(), found: domain.dim() }.into());
    }
    let candidates = candidate_set(&domain, rng);
    let matrix = DMatrix::from_fn(candidates.len(), domain.dim(), |r, c| candidates[r][c]);
    let predictions = surrogate.predict(&matrix)?;
    let values =
        evaluate_acquisition(spec, &predictions, incumbent.value, surrogate.transform(), surrogate.noise_variance())?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] || (values[best].is_nan() && !v.is_nan()) {
            best = i;
        }
    }
    Ok((candidates[best].clone(), values[best]))
}

//! Sequential Bayesian optimisation driver and multi-seed aggregation.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::acquisition::{maximise_acquisition, AcquisitionKind, AcquisitionSpec, Incumbent, Sense, Surrogate};
use crate::gp::{fit_gp, Dataset, NoiseMode};
use crate::mlhgp::{fit_mlhgp, DEFAULT_EM_ITERATIONS, DEFAULT_SAMPLE_COUNT};
use crate::numerics::RandomSource;
use crate::objectives::{Evaluation, Objective};
use crate::CampaignError;

pub const DEFAULT_INIT_DESIGN_SIZE: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurrogateKind {
    Homoscedastic,
    Mlhgp,
}

impl SurrogateKind {
    pub fn label(&self) -> &'static str {
        match self {
            SurrogateKind::Homoscedastic => "gp",
            SurrogateKind::Mlhgp => "mlhgp",
        }
    }
}

/// Parses a `surrogate:acquisition` label such as `gp:ei` or `mlhgp:anpei`.
/// Surrogates are `gp` and `mlhgp`; acquisitions are `ei`, `aei` (learned
/// noise level), `het-aei` and `anpei` (weighted by `alpha`).
pub fn parse_method(label: &str, alpha: f64) -> Result<(SurrogateKind, AcquisitionKind), CampaignError> {
    let (surrogate, acquisition) = label
        .trim()
        .split_once(':')
        .ok_or_else(|| CampaignError::Config(format!("method `{label}`: expected surrogate:acquisition")))?;
    let surrogate = match surrogate.to_ascii_lowercase().as_str() {
        "gp" | "homoscedastic" => SurrogateKind::Homoscedastic,
        "mlhgp" | "hetgp" => SurrogateKind::Mlhgp,
        other => return Err(CampaignError::Config(format!("method `{label}`: unknown surrogate `{other}`"))),
    };
    let acquisition = match acquisition.to_ascii_lowercase().replace('_', "-").as_str() {
        "ei" => AcquisitionKind::Ei,
        "aei" => AcquisitionKind::Aei { noise_std: None },
        "het-aei" | "hetaei" => AcquisitionKind::HetAei,
        "anpei" => AcquisitionKind::Anpei { alpha },
        other => return Err(CampaignError::Config(format!("method `{label}`: unknown acquisition `{other}`"))),
    };
    Ok((surrogate, acquisition))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub surrogate: SurrogateKind,
    pub acquisition: AcquisitionKind,
    /// Evaluations after the initial design.
    pub budget: usize,
    pub init_design_size: usize,
    pub seed: u64,
    pub em_iterations: usize,
    pub sample_count: usize,
}

impl CampaignConfig {
    pub fn new(surrogate: SurrogateKind, acquisition: AcquisitionKind, budget: usize, seed: u64) -> Self {
        Self {
            surrogate,
            acquisition,
            budget,
            init_design_size: DEFAULT_INIT_DESIGN_SIZE,
            seed,
            em_iterations: DEFAULT_EM_ITERATIONS,
            sample_count: DEFAULT_SAMPLE_COUNT,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        if self.acquisition.is_heteroscedastic() && self.surrogate != SurrogateKind::Mlhgp {
            return Err(CampaignError::Config(format!(
                "{} needs the heteroscedastic (mlhgp) surrogate",
                self.acquisition.label()
            )));
        }
        if self.init_design_size == 0 {
            return Err(CampaignError::Config("initial design must contain at least one point".into()));
        }
        if self.surrogate == SurrogateKind::Mlhgp && (self.em_iterations == 0 || self.sample_count == 0) {
            return Err(CampaignError::Config("em_iterations and sample_count must be positive".into()));
        }
        AcquisitionSpec::new(self.acquisition, Sense::Minimise).map_err(|e| CampaignError::Config(e.to_string()))?;
        Ok(())
    }

    /// `surrogate:acquisition`, e.g. `mlhgp:anpei`.
    pub fn method_label(&self) -> String {
        format!("{}:{}", self.surrogate.label(), self.acquisition.label())
    }
}

/// One evaluation in a campaign. Initial-design rows have iteration 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignRow {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub observed: f64,
    pub score: f64,
    /// Incumbent (best observed target) when the point was chosen; for
    /// initial-design rows, the running best including the row itself.
    pub incumbent: f64,
    pub best_so_far: f64,
}

#[derive(Debug, Clone)]
pub struct CampaignRecord {
    pub seed: u64,
    pub sense: Sense,
    pub rows: Vec<CampaignRow>,
    pub wall_time: Duration,
}

impl CampaignRecord {
    pub fn best_score(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.best_so_far)
    }

    /// Input at which the best score was first reached.
    pub fn best_location(&self) -> Option<&[f64]> {
        let best = self.best_score();
        self.rows.iter().find(|r| r.score == best).map(|r| r.x.as_slice())
    }

    /// Last input chosen by the acquisition (not the initial design).
    pub fn final_suggestion(&self) -> Option<&[f64]> {
        self.rows.iter().rev().find(|r| r.iteration > 0).map(|r| r.x.as_slice())
    }

    /// Best-so-far score after the initial design (index 0) and after each
    /// optimisation iteration.
    pub fn trajectory(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut last_initial = None;
        for r in &self.rows {
            if r.iteration == 0 {
                last_initial = Some(r.best_so_far);
            } else {
                if let Some(v) = last_initial.take() {
                    out.push(v);
                }
                out.push(r.best_so_far);
            }
        }
        if let Some(v) = last_initial {
            out.push(v);
        }
        out
    }
}

fn fit_surrogate(config: &CampaignConfig, data: &Dataset, rng: &mut RandomSource) -> Result<Surrogate, CampaignError> {
    Ok(match config.surrogate {
        SurrogateKind::Homoscedastic => Surrogate::Homoscedastic(fit_gp(data, NoiseMode::Learn)?),
        SurrogateKind::Mlhgp => {
            Surrogate::Heteroscedastic(fit_mlhgp(data, config.em_iterations, config.sample_count, rng)?)
        }
    })
}

/// Runs one campaign: initial design, then `budget` rounds of
/// fit → maximise acquisition → query. Pool-backed objectives stop early
/// when exhausted.
pub fn run_campaign(config: &CampaignConfig, objective: &mut dyn Objective) -> Result<CampaignRecord, CampaignError> {
    config.validate()?;
    let start = Instant::now();
    let sense = objective.sense();
    let spec = AcquisitionSpec::new(config.acquisition, sense)?;
    let domain = objective.domain().clone();
    let mut rng = RandomSource::new(config.seed);

    let initial = objective.initial_design(config.init_design_size, &mut rng)?;
    if initial.is_empty() {
        return Err(CampaignError::Config("objective produced an empty initial design".into()));
    }
    let rows_x: Vec<Vec<f64>> = initial.iter().map(|e| e.x.clone()).collect();
    let mut data = Dataset::from_rows(&rows_x, initial.iter().map(|e| e.observed).collect())?;

    let mut rows = Vec::with_capacity(initial.len() + config.budget);
    let mut incumbent = f64::NAN;
    let mut best = f64::NAN;
    let push = |rows: &mut Vec<CampaignRow>, iteration: usize, e: Evaluation, incumbent: f64, best: &mut f64| {
        if best.is_nan() || sense.better(e.score, *best) {
            *best = e.score;
        }
        rows.push(CampaignRow {
            iteration,
            x: e.x,
            observed: e.observed,
            score: e.score,
            incumbent,
            best_so_far: *best,
        });
    };
    for e in initial {
        if incumbent.is_nan() || sense.better(e.observed, incumbent) {
            incumbent = e.observed;
        }
        push(&mut rows, 0, e, incumbent, &mut best);
    }

    let budget = objective.remaining().map_or(config.budget, |r| r.min(config.budget));
    for iteration in 1..=budget {
        let surrogate = fit_surrogate(config, &data, &mut rng)?;
        let eta = Incumbent::from_observations(&data, sense);
        let (x, _) = maximise_acquisition(&spec, &surrogate, &eta, &domain, &mut rng)?;
        let e = objective.query(&x, &mut rng)?;
        data.push(&e.x, e.observed)?;
        push(&mut rows, iteration, e, eta.value, &mut best);
    }

    Ok(CampaignRecord { seed: config.seed, sense, rows, wall_time: start.elapsed() })
}

/// Per-iteration mean and standard error of best-so-far scores over seeds.
#[derive(Debug, Clone)]
pub struct ReplicateSummary {
    pub mean: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub records: Vec<CampaignRecord>,
}

impl ReplicateSummary {
    pub fn final_mean(&self) -> f64 {
        *self.mean.last().unwrap_or(&f64::NAN)
    }

    pub fn final_standard_error(&self) -> f64 {
        *self.standard_error.last().unwrap_or(&f64::NAN)
    }
}

/// Mean and `std/√k` (sample std, zero for a single record) per iteration.
/// Sums run in record order.
pub fn aggregate(records: &[CampaignRecord]) -> (Vec<f64>, Vec<f64>) {
    let trajectories: Vec<Vec<f64>> = records.iter().map(CampaignRecord::trajectory).collect();
    let len = trajectories.iter().map(Vec::len).min().unwrap_or(0);
    let k = trajectories.len() as f64;
    let mut mean = Vec::with_capacity(len);
    let mut se = Vec::with_capacity(len);
    for i in 0..len {
        let m = trajectories.iter().map(|t| t[i]).sum::<f64>() / k;
        let s = if trajectories.len() > 1 {
            let var = trajectories.iter().map(|t| (t[i] - m) * (t[i] - m)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        } else {
            0.0
        };
        mean.push(m);
        se.push(s);
    }
    (mean, se)
}

/// One campaign per seed, each with a freshly built objective. Seeds run in
/// parallel; results are kept in seed-list order.
pub fn run_replicates<F>(
    template: &CampaignConfig,
    seeds: &[u64],
    objective_factory: F,
) -> Result<ReplicateSummary, CampaignError>
where
    F: Fn(u64) -> Result<Box<dyn Objective + Send>, CampaignError> + Sync,
{
    if seeds.is_empty() {
        return Err(CampaignError::Config("at least one seed is required".into()));
    }
    template.validate()?;
    let records = seeds
        .par_iter()
        .map(|&seed| {
            let mut objective = objective_factory(seed)?;
            run_campaign(&template.with_seed(seed), objective.as_mut())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (mean, standard_error) = aggregate(&records);
    Ok(ReplicateSummary { mean, standard_error, records })
}

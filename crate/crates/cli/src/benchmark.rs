use std::path::{Path, PathBuf};

use chrono::Utc;
use hetbo::bo::{CampaignConfig, ReplicateSummary, SurrogateKind};
use hetbo::objectives::{branin_problem, load_pool_csv, sin_problem, soil_problem_from_pool, Objective};
use hetbo::{run_replicates, AcquisitionKind, CampaignError, Dataset, RandomSource, Sense};
use serde_json::json;

use crate::output::{prepare_out_dir, Manifest, Table};
use crate::plot::{chart, Layer, PALETTE};
use crate::{BenchmarkArgs, CliError, Problem};

pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const PLOT_FILE: &str = "benchmark.svg";

const DEFAULT_METHODS: [&str; 3] = ["gp:ei", "mlhgp:anpei", "mlhgp:het-aei"];
const DEFAULT_SEEDS: u64 = 10;
const DEFAULT_SOIL_INIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Method {
    pub surrogate: SurrogateKind,
    pub acquisition: AcquisitionKind,
}

impl Method {
    pub fn label(&self) -> String {
        format!("{}:{}", self.surrogate.label(), self.acquisition.label())
    }
}

/// Parses `surrogate:acquisition`; see [`hetbo::bo::parse_method`].
pub fn parse_method(s: &str, alpha: f64) -> Result<Method, CliError> {
    let (surrogate, acquisition) =
        hetbo::bo::parse_method(s, alpha).map_err(|e| CliError::config(format!("--method: {e}")))?;
    Ok(Method { surrogate, acquisition })
}

pub struct BenchmarkOutcome {
    pub out_dir: PathBuf,
    pub results: Vec<(Method, ReplicateSummary)>,
}

enum ProblemSource {
    Analytic(Problem),
    Pool { pool: Dataset, init: usize },
}

impl ProblemSource {
    fn build(&self, seed: u64) -> Result<Box<dyn Objective + Send>, CampaignError> {
        Ok(match self {
            ProblemSource::Analytic(Problem::Sin1d) => Box::new(sin_problem()),
            ProblemSource::Analytic(Problem::Branin) => Box::new(branin_problem()),
            ProblemSource::Analytic(Problem::Soil) => unreachable!("soil is pool backed"),
            ProblemSource::Pool { pool, init } => {
                let mut rng = RandomSource::new(seed);
                Box::new(soil_problem_from_pool(pool.clone(), *init, &mut rng)?)
            }
        })
    }

    fn dim(&self) -> usize {
        match self {
            ProblemSource::Analytic(Problem::Branin) => 2,
            ProblemSource::Analytic(_) => 1,
            ProblemSource::Pool { pool, .. } => pool.dim(),
        }
    }
}

fn resolve_seeds(args: &BenchmarkArgs) -> Result<Vec<u64>, CliError> {
    let seeds = if !args.seed_list.is_empty() {
        args.seed_list.clone()
    } else {
        (0..args.seeds.unwrap_or(DEFAULT_SEEDS)).collect()
    };
    if seeds.is_empty() {
        return Err(CliError::config("at least one seed is required"));
    }
    Ok(seeds)
}

pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<BenchmarkOutcome, CliError> {
    let started = Utc::now();
    let labels: Vec<String> = if args.methods.is_empty() {
        DEFAULT_METHODS.iter().map(|s| s.to_string()).collect()
    } else {
        args.methods.clone()
    };
    let methods = labels.iter().map(|m| parse_method(m, args.alpha)).collect::<Result<Vec<_>, _>>()?;
    let seeds = resolve_seeds(args)?;
    if args.problem != Problem::Soil && args.data.is_some() {
        return Err(CliError::config("--data is only used by the soil problem"));
    }

    let (source, budget, init) = match args.problem {
        Problem::Soil => {
            let path =
                args.data.as_deref().ok_or_else(|| CliError::data("the soil problem requires --data <pool.csv>"))?;
            let pool = load_pool_csv(path)?;
            let init = args.init.unwrap_or(DEFAULT_SOIL_INIT);
            let budget = args.budget.unwrap_or(pool.len());
            (ProblemSource::Pool { pool, init }, budget, init)
        }
        p => {
            let budget = args.budget.unwrap_or(if p == Problem::Sin1d { 30 } else { 50 });
            (ProblemSource::Analytic(p), budget, args.init.unwrap_or(hetbo::bo::DEFAULT_INIT_DESIGN_SIZE))
        }
    };

    let configs: Vec<CampaignConfig> = methods
        .iter()
        .map(|m| {
            let c = CampaignConfig {
                init_design_size: init,
                em_iterations: args.em_iters,
                sample_count: args.sample_count,
                ..CampaignConfig::new(m.surrogate, m.acquisition, budget, 0)
            };
            c.validate().map(|_| c)
        })
        .collect::<Result<_, _>>()?;
    let out_dir = prepare_out_dir(&args.out)?;

    let mut results = Vec::with_capacity(methods.len());
    for (m, c) in methods.iter().zip(&configs) {
        let summary = run_replicates(c, &seeds, |seed| source.build(seed))?;
        println!(
            "{:<16} final best-so-far f = {:.4} ± {:.4} ({} seeds)",
            m.label(),
            summary.final_mean(),
            summary.final_standard_error(),
            seeds.len()
        );
        results.push((*m, summary));
    }

    write_trajectories(&out_dir, source.dim(), &results)?;
    write_summary(&out_dir, &results)?;
    write_curves(&out_dir, &results)?;
    let sense = results[0].1.records[0].sense;
    write_plot(&out_dir, args.problem, sense, &results)?;

    Manifest {
        command: "benchmark",
        config: json!({
            "problem": args.problem.name(),
            "methods": methods.iter().map(Method::label).collect::<Vec<_>>(),
            "budget": budget,
            "init": init,
            "alpha": args.alpha,
            "em_iters": args.em_iters,
            "sample_count": args.sample_count,
        }),
        seeds: &seeds,
        input: args.data.as_deref(),
        started,
    }
    .write(&out_dir)?;
    Ok(BenchmarkOutcome { out_dir, results })
}

fn write_trajectories(dir: &Path, dim: usize, results: &[(Method, ReplicateSummary)]) -> Result<(), CliError> {
    let mut header: Vec<String> = vec!["method".into(), "seed".into(), "iteration".into()];
    header.extend((1..=dim).map(|k| format!("x{k}")));
    header.extend(["observed_t", "f_score", "best_so_far_f"].map(String::from));
    let mut table = Table::new(&header)?;
    for (m, summary) in results {
        let label = m.label();
        for record in &summary.records {
            let seed = record.seed.to_string();
            for row in &record.rows {
                let iteration = row.iteration.to_string();
                let mut numbers = row.x.clone();
                numbers.extend([row.observed, row.score, row.best_so_far]);
                table.row(&[&label, &seed, &iteration], &numbers)?;
            }
        }
    }
    table.save(&dir.join(TRAJECTORIES_FILE))
}

fn write_summary(dir: &Path, results: &[(Method, ReplicateSummary)]) -> Result<(), CliError> {
    let mut table = Table::new(&["method", "seeds", "final_mean", "final_standard_error"])?;
    for (m, s) in results {
        table.row(&[&m.label(), &s.records.len().to_string()], &[s.final_mean(), s.final_standard_error()])?;
    }
    table.save(&dir.join(SUMMARY_FILE))
}

fn write_curves(dir: &Path, results: &[(Method, ReplicateSummary)]) -> Result<(), CliError> {
    let mut table = Table::new(&["method", "step", "mean_best_so_far_f", "standard_error"])?;
    for (m, s) in results {
        let label = m.label();
        for (i, (mean, se)) in s.mean.iter().zip(&s.standard_error).enumerate() {
            table.row(&[&label, &i.to_string()], &[*mean, *se])?;
        }
    }
    table.save(&dir.join(CURVES_FILE))
}

fn write_plot(
    dir: &Path,
    problem: Problem,
    sense: Sense,
    results: &[(Method, ReplicateSummary)],
) -> Result<(), CliError> {
    let layers: Vec<Layer> = results
        .iter()
        .enumerate()
        .map(|(i, (m, s))| Layer::Line {
            label: m.label(),
            xs: (0..s.mean.len()).map(|k| k as f64).collect(),
            ys: s.mean.clone(),
            errors: Some(s.standard_error.clone()),
            color: PALETTE[i % PALETTE.len()].into(),
        })
        .collect();
    let direction = match sense {
        Sense::Minimise => "lower is better",
        Sense::Maximise => "higher is better",
    };
    let svg = chart(
        &format!("{}: best-so-far objective (mean ± SE over seeds)", problem.name()),
        "iteration (0 = initial design)",
        &format!("best-so-far f ({direction})"),
        &layers,
    );
    crate::output::write_text(&dir.join(PLOT_FILE), &svg)
}

use std::path::Path;

use chrono::Utc;
use hetbo::objectives::{branin_problem, sin_problem, Objective};
use hetbo::{fit_gp, fit_mlhgp, Dataset, NoiseMode, NoisyObjective, PredictiveDistribution, RandomSource};
use serde_json::json;

use crate::output::{prepare_out_dir, write_text, Manifest, Table};
use crate::plot::{chart, heatmap_panels, Heatmap, Layer, PALETTE};
use crate::{CliError, DemoFitArgs, Problem};

pub const SAMPLES_FILE: &str = "samples.csv";
pub const FIT_FILE: &str = "demo_fit.csv";
pub const FIT_PLOT: &str = "demo_fit.svg";
pub const GRID_FILE: &str = "demo_grid.csv";
pub const FUNCTIONS_PLOT: &str = "demo_functions.svg";

const CURVE_POINTS: usize = 200;
const GRID_PER_AXIS: usize = 50;

pub fn cmd_demo_fit(args: &DemoFitArgs) -> Result<(), CliError> {
    let started = Utc::now();
    let problem = match args.problem {
        Problem::Sin1d => sin_problem(),
        Problem::Branin => branin_problem(),
        Problem::Soil => return Err(CliError::config("demo-fit supports the sin1d and branin problems")),
    };
    if args.n < 2 {
        return Err(CliError::config("--n must be at least 2"));
    }
    let out_dir = prepare_out_dir(&args.out)?;
    let mut rng = RandomSource::new(args.seed);
    let data = sample(&problem, args.n, &mut rng)?;
    write_samples(&out_dir, &data)?;

    let gp = fit_gp(&data, NoiseMode::Learn)?;
    let het = fit_mlhgp(&data, args.em_iters, args.sample_count, &mut rng)?;
    match args.problem {
        Problem::Sin1d => demo_1d(
            &out_dir,
            &problem,
            &data,
            &gp.predict_rows(&curve(&problem))?,
            &het.predict_rows(&curve(&problem))?,
        )?,
        _ => {
            let grid = problem.domain().grid_with(GRID_PER_AXIS);
            demo_2d(&out_dir, &problem, &grid, &gp.predict_rows(&grid)?, &het.predict_rows(&grid)?)?
        }
    }

    let seeds = [args.seed];
    Manifest {
        command: "demo-fit",
        config: json!({
            "problem": args.problem.name(),
            "n": args.n,
            "em_iters": args.em_iters,
            "sample_count": args.sample_count,
        }),
        seeds: &seeds,
        input: None,
        started,
    }
    .write(&out_dir)
}

fn sample(problem: &NoisyObjective, n: usize, rng: &mut RandomSource) -> Result<Dataset, CliError> {
    let mut rows = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let x = problem.domain().sample(rng);
        let (t, _) = problem.query_noisy(&x, rng)?;
        rows.push(x);
        targets.push(t);
    }
    Ok(Dataset::from_rows(&rows, targets)?)
}

fn write_samples(dir: &Path, data: &Dataset) -> Result<(), CliError> {
    let mut header: Vec<String> = (1..=data.dim()).map(|k| format!("x{k}")).collect();
    header.push("t".into());
    let mut table = Table::new(&header)?;
    for i in 0..data.len() {
        let mut row = data.input(i);
        row.push(data.target(i));
        table.row(&[], &row)?;
    }
    table.save(&dir.join(SAMPLES_FILE))
}

fn curve(problem: &NoisyObjective) -> Vec<Vec<f64>> {
    let d = problem.domain();
    (0..CURVE_POINTS)
        .map(|i| vec![d.lower[0] + (d.upper[0] - d.lower[0]) * i as f64 / (CURVE_POINTS - 1) as f64])
        .collect()
}

fn band(p: &PredictiveDistribution) -> (Vec<f64>, Vec<f64>) {
    p.mean.iter().zip(&p.total_variance).map(|(m, v)| (m - 2.0 * v.sqrt(), m + 2.0 * v.sqrt())).unzip()
}

fn demo_1d(
    dir: &Path,
    problem: &NoisyObjective,
    data: &Dataset,
    gp: &PredictiveDistribution,
    het: &PredictiveDistribution,
) -> Result<(), CliError> {
    let xs: Vec<f64> = curve(problem).into_iter().map(|x| x[0]).collect();
    let (gl, gu) = band(gp);
    let (hl, hu) = band(het);
    let mut table = Table::new(&[
        "x",
        "g",
        "s",
        "f",
        "gp_mean",
        "gp_lower",
        "gp_upper",
        "mlhgp_mean",
        "mlhgp_lower",
        "mlhgp_upper",
        "mlhgp_noise_std",
    ])?;
    for (i, &x) in xs.iter().enumerate() {
        let q = [x];
        table.row(
            &[],
            &[
                x,
                problem.g(&q),
                problem.s(&q),
                problem.f(&q),
                gp.mean[i],
                gl[i],
                gu[i],
                het.mean[i],
                hl[i],
                hu[i],
                het.aleatoric_variance[i].sqrt(),
            ],
        )?;
    }
    table.save(&dir.join(FIT_FILE))?;

    let g: Vec<f64> = xs.iter().map(|&x| problem.g(&[x])).collect();
    let layers = vec![
        Layer::Band { label: "GP ±2σ".into(), xs: xs.clone(), lower: gl, upper: gu, color: PALETTE[0].into() },
        Layer::Band { label: "MLHGP ±2σ".into(), xs: xs.clone(), lower: hl, upper: hu, color: PALETTE[1].into() },
        Layer::Line {
            label: "GP mean".into(),
            xs: xs.clone(),
            ys: gp.mean.clone(),
            errors: None,
            color: PALETTE[0].into(),
        },
        Layer::Line {
            label: "MLHGP mean".into(),
            xs: xs.clone(),
            ys: het.mean.clone(),
            errors: None,
            color: PALETTE[1].into(),
        },
        Layer::Line { label: "g(x)".into(), xs, ys: g, errors: None, color: "#333333".into() },
        Layer::Scatter {
            label: "samples".into(),
            xs: (0..data.len()).map(|i| data.input(i)[0]).collect(),
            ys: data.targets().iter().copied().collect(),
            color: "#555555".into(),
        },
    ];
    write_text(&dir.join(FIT_PLOT), &chart("Homoscedastic vs heteroscedastic GP fit", "x", "t", &layers))
}

fn demo_2d(
    dir: &Path,
    problem: &NoisyObjective,
    grid: &[Vec<f64>],
    gp: &PredictiveDistribution,
    het: &PredictiveDistribution,
) -> Result<(), CliError> {
    let mut table = Table::new(&["x1", "x2", "g", "s", "f", "gp_mean", "mlhgp_mean", "mlhgp_noise_std"])?;
    let mut panels: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(grid.len())).collect();
    // The grid varies x2 fastest; heatmaps want x1 fastest.
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by_key(|&i| (i % GRID_PER_AXIS, i / GRID_PER_AXIS));
    for (i, x) in grid.iter().enumerate() {
        let (g, s, f) = (problem.g(x), problem.s(x), problem.f(x));
        let noise = het.aleatoric_variance[i].sqrt();
        table.row(&[], &[x[0], x[1], g, s, f, gp.mean[i], het.mean[i], noise])?;
    }
    for &i in &order {
        let x = &grid[i];
        let values =
            [problem.g(x), problem.s(x), problem.f(x), gp.mean[i], het.mean[i], het.aleatoric_variance[i].sqrt()];
        for (p, v) in panels.iter_mut().zip(values) {
            p.push(v);
        }
    }
    table.save(&dir.join(GRID_FILE))?;

    let d = problem.domain();
    let (xr, yr) = ((d.lower[0], d.upper[0]), (d.lower[1], d.upper[1]));
    let map =
        |title: &str, values: Vec<f64>| Heatmap { title: title.into(), nx: GRID_PER_AXIS, ny: GRID_PER_AXIS, values };
    let mut it = panels.into_iter();
    let mut next = || it.next().unwrap_or_default();
    let functions = [map("g: latent", next()), map("s: noise std", next()), map("f = g + s", next())];
    let fits = [map("GP mean", next()), map("MLHGP mean", next()), map("MLHGP noise std", next())];
    write_text(
        &dir.join(FUNCTIONS_PLOT),
        &heatmap_panels("Branin-Hoo, noise and black-box objective", &functions, xr, yr),
    )?;
    write_text(&dir.join(FIT_PLOT), &heatmap_panels("Surrogate fits", &fits, xr, yr))
}

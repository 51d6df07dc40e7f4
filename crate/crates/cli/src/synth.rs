use hetbo::objectives::{synthetic_soil_pool, write_pool_csv};
use hetbo::{Dataset, RandomSource};

use crate::output::Table;
use crate::{CliError, SynthArgs, SynthKind};

/// Noise std of the flat synthetic dataset (variance 0.25).
pub const FLAT_NOISE_STD: f64 = 0.5;

/// Draws `n` uniform inputs on [0, 10] with targets `sin(x) + 0.2x` plus
/// Gaussian noise of std `noise_std(x)`.
pub fn synthetic_sin_dataset(n: usize, seed: u64, noise_std: impl Fn(f64) -> f64) -> Dataset {
    let mut rng = RandomSource::new(seed);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.uniform_in(0.0, 10.0)]).collect();
    let ts = xs.iter().map(|x| x[0].sin() + 0.2 * x[0] + noise_std(x[0]) * rng.standard_normal()).collect();
    Dataset::from_rows(&xs, ts).expect("finite synthetic data")
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    if args.n < 2 {
        return Err(CliError::config("--n must be at least 2"));
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        if !parent.is_dir() {
            return Err(CliError::config(format!("--out: parent directory {} does not exist", parent.display())));
        }
    }
    match args.kind {
        SynthKind::Soil => write_pool_csv(&args.out, &synthetic_soil_pool(args.n, args.seed))
            .map_err(|e| CliError::runtime(e.to_string())),
        kind => {
            let data = match kind {
                SynthKind::Sin1d => synthetic_sin_dataset(args.n, args.seed, |x| 0.25 * x),
                _ => synthetic_sin_dataset(args.n, args.seed, |_| FLAT_NOISE_STD),
            };
            let mut table = Table::new(&["x", "t"])?;
            for i in 0..data.len() {
                table.row(&[], &[data.input(i)[0], data.target(i)])?;
            }
            table.save(&args.out)
        }
    }
}

//! Shared numerical building blocks: jittered Cholesky factorisation, SPD
//! solves, a bound-constrained quasi-Newton minimiser, the standard normal
//! density/CDF and a seedable random source.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::VecDeque;
use std::f64::consts::{PI, SQRT_2};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not positive definite even with jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("objective is not finite at the starting point")]
    NonFiniteObjective,
}

/// Relative asymmetry tolerated before a matrix is rejected.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Jitter used for the first escalation when the caller starts from zero,
/// relative to the mean diagonal.
pub const RELATIVE_BASE_JITTER: f64 = 1e-8;
/// Number of ×10 escalations attempted after the initial factorisation.
pub const MAX_JITTER_ESCALATIONS: usize = 6;

/// Lower-triangular factor `L` with `L Lᵀ = A + jitter·I`.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    lower: DMatrix<f64>,
    jitter: f64,
}

impl SpdFactor {
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Jitter actually added to the diagonal.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// `log det(A + jitter·I)`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>, NumericsError> {
        solve_spd(self, b)
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> Result<DVector<f64>, NumericsError> {
        if b.len() != self.dim() {
            return Err(NumericsError::DimensionMismatch { expected: self.dim(), found: b.len() });
        }
        let y = forward_substitute(&self.lower, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()));
        let x = backward_substitute_transposed(&self.lower, &y);
        Ok(x.column(0).into_owned())
    }

    /// Explicit inverse of `A + jitter·I`; only used where the full matrix is
    /// needed (likelihood gradients).
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let identity = DMatrix::identity(n, n);
        let y = forward_substitute(&self.lower, &identity);
        backward_substitute_transposed(&self.lower, &y)
    }
}

fn try_cholesky(a: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)] + jitter;
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Some(l)
}

/// Factorises `A + jitter·I`, escalating the jitter ×10 (up to six times)
/// until the factorisation succeeds.
pub fn cholesky_with_jitter(a: &DMatrix<f64>, initial_jitter: f64) -> Result<SpdFactor, NumericsError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(NumericsError::DimensionMismatch { expected: n, found: a.ncols() });
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut asymmetry = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asymmetry = asymmetry.max((a[(i, j)] - a[(j, i)]).abs() / scale);
        }
    }
    if asymmetry > SYMMETRY_TOLERANCE {
        return Err(NumericsError::NotSymmetric { asymmetry });
    }

    let mean_diag = if n == 0 { 1.0 } else { a.diagonal().iter().sum::<f64>() / n as f64 };
    let base = RELATIVE_BASE_JITTER * if mean_diag > 0.0 { mean_diag } else { 1.0 };
    let mut jitter = initial_jitter.max(0.0);
    for attempt in 0..=MAX_JITTER_ESCALATIONS {
        if let Some(lower) = try_cholesky(a, jitter) {
            return Ok(SpdFactor { lower, jitter });
        }
        if attempt == MAX_JITTER_ESCALATIONS {
            break;
        }
        jitter = if jitter == 0.0 { base } else { jitter * 10.0 };
    }
    Err(NumericsError::NotPositiveDefinite { jitter })
}

fn forward_substitute(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut y = b.clone();
    for c in 0..b.ncols() {
        for i in 0..n {
            let mut v = y[(i, c)];
            for k in 0..i {
                v -= l[(i, k)] * y[(k, c)];
            }
            y[(i, c)] = v / l[(i, i)];
        }
    }
    y
}

fn backward_substitute_transposed(l: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut x = y.clone();
    for c in 0..y.ncols() {
        for i in (0..n).rev() {
            let mut v = x[(i, c)];
            for k in (i + 1)..n {
                v -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = v / l[(i, i)];
        }
    }
    x
}

/// Solves `(A + jitter·I) X = B` with two triangular solves.
pub fn solve_spd(factor: &SpdFactor, b: &DMatrix<f64>) -> Result<DMatrix<f64>, NumericsError> {
    if b.nrows() != factor.dim() {
        return Err(NumericsError::DimensionMismatch { expected: factor.dim(), found: b.nrows() });
    }
    let y = forward_substitute(&factor.lower, b);
    Ok(backward_substitute_transposed(&factor.lower, &y))
}

/// Solves `L X = B` for the lower factor only. Used for predictive variances.
pub fn solve_lower(factor: &SpdFactor, b: &DMatrix<f64>) -> Result<DMatrix<f64>, NumericsError> {
    if b.nrows() != factor.dim() {
        return Err(NumericsError::DimensionMismatch { expected: factor.dim(), found: b.nrows() });
    }
    Ok(forward_substitute(&factor.lower, b))
}

/// Termination settings for [`minimize_bounded`].
#[derive(Debug, Clone, Copy)]
pub struct MinimizerOptions {
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    pub memory: usize,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        Self { gradient_tolerance: 1e-5, max_iterations: 200, memory: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Components of the gradient that can still move `x` inside the box.
fn projected_gradient(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((&xi, &gi), (&lo, &hi))| if (xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0) { 0.0 } else { gi })
        .collect()
}

/// Bound-constrained minimisation with a projected limited-memory BFGS
/// iteration and a backtracking Armijo line search along the projected path.
pub fn minimize_bounded<F>(
    objective_and_gradient: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Result<Minimum, NumericsError>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    minimize_bounded_with(objective_and_gradient, start, lower, upper, MinimizerOptions::default())
}

pub fn minimize_bounded_with<F>(
    mut objective_and_gradient: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    options: MinimizerOptions,
) -> Result<Minimum, NumericsError>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = start.len();
    for len in [lower.len(), upper.len()] {
        if len != n {
            return Err(NumericsError::DimensionMismatch { expected: n, found: len });
        }
    }
    let mut x = start.to_vec();
    project(&mut x, lower, upper);
    let (mut f, mut g) = objective_and_gradient(&x);
    if g.len() != n {
        return Err(NumericsError::DimensionMismatch { expected: n, found: g.len() });
    }
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFiniteObjective);
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        let pg = projected_gradient(&x, &g, lower, upper);
        if pg.iter().fold(0.0f64, |m, v| m.max(v.abs())) < options.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let free: Vec<bool> = x
            .iter()
            .zip(&g)
            .zip(lower.iter().zip(upper))
            .map(|((&xi, &gi), (&lo, &hi))| !((xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0)))
            .collect();
        let direction = lbfgs_direction(&pg, &history, &free);
        let mut accepted = line_search(&mut objective_and_gradient, &x, f, &g, &direction, lower, upper);
        if accepted.is_none() && !history.is_empty() {
            history.clear();
            let steepest: Vec<f64> = pg.iter().map(|v| -v).collect();
            accepted = line_search(&mut objective_and_gradient, &x, f, &g, &steepest, lower, upper);
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if history.len() == options.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let stalled = (f - f_new).abs() <= f64::EPSILON * f.abs().max(1.0) * 10.0;
        x = x_new;
        f = f_new;
        g = g_new;
        if stalled {
            let pg = projected_gradient(&x, &g, lower, upper);
            converged = pg.iter().fold(0.0f64, |m, v| m.max(v.abs())) < options.gradient_tolerance;
            break;
        }
    }

    Ok(Minimum { argmin: x, value: f, iterations, converged })
}

fn lbfgs_direction(pg: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, free: &[bool]) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(x, &keep)| if keep { *x } else { 0.0 }).collect() };
    let mut q = pg.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let s = mask(s);
        let y = mask(y);
        let a = rho * dot(&s, &q);
        for (qi, yi) in q.iter_mut().zip(&y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let gamma = history
        .back()
        .map(|(s, y, _)| {
            let yy = dot(y, y);
            if yy > 0.0 {
                dot(s, y) / yy
            } else {
                1.0
            }
        })
        .unwrap_or(1.0);
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let s = mask(s);
        let y = mask(y);
        let b = rho * dot(&y, &q);
        for (qi, si) in q.iter_mut().zip(&s) {
            *qi += (a - b) * si;
        }
    }
    let mut d: Vec<f64> = mask(&q).into_iter().map(|v| -v).collect();
    if dot(&d, pg) >= 0.0 || d.iter().any(|v| !v.is_finite()) {
        d = pg.iter().map(|v| -v).collect();
    }
    if history.is_empty() {
        let norm = dot(&d, &d).sqrt();
        if norm > 1.0 {
            d.iter_mut().for_each(|v| *v /= norm);
        }
    }
    d
}

type Accepted = (Vec<f64>, f64, Vec<f64>);

fn line_search<F>(
    objective_and_gradient: &mut F,
    x: &[f64],
    f: f64,
    g: &[f64],
    direction: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Option<Accepted>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    const ARMIJO: f64 = 1e-4;
    let mut step = 1.0;
    for _ in 0..50 {
        let mut trial: Vec<f64> = x.iter().zip(direction).map(|(xi, di)| xi + step * di).collect();
        project(&mut trial, lower, upper);
        let moved: Vec<f64> = trial.iter().zip(x).map(|(a, b)| a - b).collect();
        if moved.iter().all(|v| *v == 0.0) {
            return None;
        }
        let decrease = dot(g, &moved);
        let (ft, gt) = objective_and_gradient(&trial);
        if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= f + ARMIJO * decrease && ft <= f {
            return Some((trial, ft, gt));
        }
        step *= 0.5;
    }
    None
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Log density of `N(mean, variance)` at `x`.
pub fn normal_log_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let r = x - mean;
    -0.5 * (2.0 * PI * variance).ln() - r * r / (2.0 * variance)
}

/// Seeded, platform-independent random stream (ChaCha8).
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_in(&mut self, lower: f64, upper: f64) -> f64 {
        lower + (upper - lower) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// `count` distinct indices from `0..n`, in draw order.
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.rng, n, count.min(n)).into_vec()
    }

    /// Fisher-Yates permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.rng.random_range(0..=i);
            idx.swap(i, j);
        }
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn identity_factor_is_identity() {
        let f = cholesky_with_jitter(&DMatrix::identity(3, 3), 0.0).unwrap();
        assert_eq!(f.jitter(), 0.0);
        assert_eq!(f.lower(), &DMatrix::<f64>::identity(3, 3));
    }

    #[test]
    fn two_by_two_hand_cholesky() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let f = cholesky_with_jitter(&a, 0.0).unwrap();
        let l = f.lower();
        assert_close(l[(0, 0)], 2.0, 1e-15);
        assert_close(l[(0, 1)], 0.0, 0.0);
        assert_close(l[(1, 0)], 1.0, 1e-15);
        assert_close(l[(1, 1)], 2f64.sqrt(), 1e-15);
    }

    #[test]
    fn rank_deficient_gets_jitter() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let f = cholesky_with_jitter(&a, 1e-10).unwrap();
        assert!(f.jitter() > 0.0);
        let rebuilt = f.lower() * f.lower().transpose();
        let target = &a + DMatrix::identity(2, 2) * f.jitter();
        assert!((rebuilt - &target).norm() / target.norm() < 1e-8);
        assert!(f.lower().diagonal().iter().all(|d| *d > 0.0));
    }

    #[test]
    fn rank_deficient_from_zero_escalates() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let f = cholesky_with_jitter(&a, 0.0).unwrap();
        assert!(f.jitter() >= RELATIVE_BASE_JITTER);
    }

    #[test]
    fn negative_definite_fails_after_escalation() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        let err = cholesky_with_jitter(&a, 0.0).unwrap_err();
        assert!(matches!(err, NumericsError::NotPositiveDefinite { .. }));
    }

    #[test]
    fn asymmetric_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 2.0]);
        assert!(matches!(cholesky_with_jitter(&a, 0.0), Err(NumericsError::NotSymmetric { .. })));
    }

    #[test]
    fn hand_solve() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let f = cholesky_with_jitter(&a, 0.0).unwrap();
        let x = solve_spd(&f, &DMatrix::from_row_slice(2, 1, &[1.0, 0.0])).unwrap();
        assert_close(x[(0, 0)], 0.375, 1e-15);
        assert_close(x[(1, 0)], -0.25, 1e-15);
        let inv_a = solve_spd(&f, &a).unwrap();
        assert!((inv_a - DMatrix::<f64>::identity(2, 2)).amax() < 1e-8);
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let f = cholesky_with_jitter(&DMatrix::identity(3, 3), 0.0).unwrap();
        let b = DMatrix::from_row_slice(3, 2, &[1.0, -2.0, 3.5, 0.25, 7.0, -1.0]);
        assert_eq!(solve_spd(&f, &b).unwrap(), b);
    }

    #[test]
    fn solve_dimension_mismatch() {
        let f = cholesky_with_jitter(&DMatrix::identity(3, 3), 0.0).unwrap();
        assert!(matches!(
            solve_spd(&f, &DMatrix::zeros(2, 1)),
            Err(NumericsError::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn quadratic_bowl() {
        let m =
            minimize_bounded(|p| ((p[0] - 3.0).powi(2), vec![2.0 * (p[0] - 3.0)]), &[0.0], &[-10.0], &[10.0]).unwrap();
        assert_close(m.argmin[0], 3.0, 1e-4);
    }

    #[test]
    fn quadratic_active_bound() {
        let m =
            minimize_bounded(|p| ((p[0] - 3.0).powi(2), vec![2.0 * (p[0] - 3.0)]), &[5.0], &[4.0], &[10.0]).unwrap();
        assert_eq!(m.argmin[0], 4.0);
        assert_close(m.value, 1.0, 0.0);
    }

    #[test]
    fn rosenbrock() {
        let rosen = |p: &[f64]| {
            let (x, y) = (p[0], p[1]);
            let v = (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2);
            let gx = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
            let gy = 200.0 * (y - x * x);
            (v, vec![gx, gy])
        };
        let m = minimize_bounded(rosen, &[-1.0, 1.0], &[-5.0, -5.0], &[5.0, 5.0]).unwrap();
        assert!(m.value < 1e-6, "value {} after {} iterations", m.value, m.iterations);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let err = minimize_bounded(|_| (f64::NAN, vec![0.0]), &[0.0], &[-1.0], &[1.0]).unwrap_err();
        assert_eq!(err, NumericsError::NonFiniteObjective);
    }

    #[test]
    fn normal_values() {
        assert_close(std_normal_pdf(0.0), 0.3989422804, 1e-10);
        assert_eq!(std_normal_cdf(0.0), 0.5);
    }

    #[test]
    fn cdf_against_quadrature() {
        // Composite Simpson on [-12, z] of the density.
        let z = 1.959964;
        let (a, n) = (-12.0, 200_000);
        let h = (z - a) / n as f64;
        let mut s = std_normal_pdf(a) + std_normal_pdf(z);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * std_normal_pdf(a + i as f64 * h);
        }
        let quad = s * h / 3.0;
        assert_close(quad, 0.975, 1e-6);
        assert_close(std_normal_cdf(z), quad, 1e-10);
    }

    #[test]
    fn random_source_is_reproducible() {
        let mut a = RandomSource::new(42);
        let mut b = RandomSource::new(42);
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
        assert_eq!(a.sample_indices(50, 10), b.sample_indices(50, 10));
    }
}

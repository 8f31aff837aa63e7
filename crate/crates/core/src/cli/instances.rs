//! Built-in and synthetic problem instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::Builtin;
use crate::error::{Error, Result};
use crate::operators::{DenseMatrix, LeastSquaresTerm, LinearOperator, NORM_SAFETY_FACTOR};
use crate::regularizers::{Interval, ScalarPenalty, SeparableRegularizer};
use crate::solver::Problem;

/// Data term of a built-in example with its default starting point.
pub fn builtin_data(which: Builtin) -> Result<(LeastSquaresTerm, Vec<f64>)> {
    match which {
        Builtin::ExCq => {
            // (x₁ − x₂ − 1)² = (2/2)·‖[1, −1]x − 1‖², exact in floating point
            let a = LinearOperator::dense(DenseMatrix::from_rows(&[vec![1.0, -1.0]])?);
            let h = LeastSquaresTerm::with_lipschitz(a, vec![1.0], 2.0)?.with_weight(2.0)?;
            Ok((h, vec![0.0, 0.0]))
        }
        Builtin::ExNocq => {
            let h = LeastSquaresTerm::with_lipschitz(LinearOperator::identity(1)?, vec![1.0], 1.0)?;
            Ok((h, vec![1.0]))
        }
    }
}

/// A seeded random LASSO-type instance.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub matrix: DenseMatrix,
    pub y: Vec<f64>,
    pub x_true: Vec<f64>,
    pub problem: Problem,
}

/// Standard deviation of the additive observation noise.
pub const SYNTHETIC_NOISE: f64 = 0.1;

/// Range of `|aₖᵀaₖ·x_true,k|` on the planted support, well above the unit threshold.
pub const SIGNAL_RANGE: std::ops::Range<f64> = 2.0..4.0;

/// Generates `y = A·x_true + noise` with ChaCha8 seeded by `seed`.
///
/// `A` has i.i.d. standard normal entries rescaled so `‖A‖² ≈ scale`. `x_true` has `⌈n/10⌉`
/// nonzeros with random signs and `‖aₖ‖²·|x_true,k|` drawn from [`SIGNAL_RANGE`]. Every `Iₖ`
/// is `[−1, 1]` with the given `ψ` on each coordinate.
pub fn generate_synthetic(
    m: usize,
    n: usize,
    seed: u64,
    scale: f64,
    penalty: ScalarPenalty,
) -> Result<SyntheticInstance> {
    if m == 0 || n == 0 || !(scale > 0.0) {
        return Err(Error::InvalidInput(format!(
            "synthetic instance needs m, n ≥ 1 and scale > 0 (got {m}, {n}, {scale})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..m * n)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let raw = DenseMatrix::new(m, n, data)?;
    let est =
        LinearOperator::dense(raw.clone()).operator_norm_sq(1e-10, 10_000)? / NORM_SAFETY_FACTOR;
    let mut matrix = raw;
    if est > 0.0 {
        matrix.scale((scale / est).sqrt());
    }

    // partial Fisher–Yates for the support
    let k = n.div_ceil(10);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut x_true = vec![0.0; n];
    for &j in &idx[..k] {
        let col_sq: f64 = (0..m).map(|i| matrix.get(i, j).powi(2)).sum();
        let mag = rng.random_range(SIGNAL_RANGE) / col_sq.max(f64::MIN_POSITIVE);
        x_true[j] = if rng.random_bool(0.5) { mag } else { -mag };
    }

    let op = LinearOperator::dense(matrix.clone());
    let mut y = op.apply(&x_true)?;
    for v in &mut y {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += SYNTHETIC_NOISE * e;
    }
    let h = LeastSquaresTerm::new(op, y.clone())?;
    let g = SeparableRegularizer::uniform(n, Interval::symmetric(1.0)?, penalty)?;
    Ok(SyntheticInstance {
        matrix,
        y,
        x_true,
        problem: Problem::new(g, h)?,
    })
}

//! Linear operators and the least-squares data term `h(x) = ½‖Ax − y‖²`.
//!
//! Vectors are plain `&[f64]` slices indexed from 0. The operator maps the truncated coefficient
//! space of dimension `n` into the data space of dimension `m`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Multiplicative safety factor applied to power-iteration estimates of `‖A‖²`.
pub const NORM_SAFETY_FACTOR: f64 = 1.01;
pub const DEFAULT_NORM_TOL: f64 = 1e-9;
pub const DEFAULT_NORM_MAX_ITER: usize = 5000;

const POWER_ITERATION_SEED: u64 = 0x0005_eed0_fa11;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        check_len(rows * cols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            check_len(cols, row.len())?;
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearOperator {
    Dense(DenseMatrix),
    Diagonal(Vec<f64>),
    Identity(usize),
}

impl LinearOperator {
    pub fn dense(matrix: DenseMatrix) -> Self {
        Self::Dense(matrix)
    }

    pub fn diagonal(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("diagonal operator of size 0".into()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "diagonal has non-finite entries".into(),
            ));
        }
        Ok(Self::Diagonal(entries))
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("identity operator of size 0".into()));
        }
        Ok(Self::Identity(n))
    }

    /// Dimension of the coefficient space.
    pub fn domain_dim(&self) -> usize {
        match self {
            Self::Dense(a) => a.cols,
            Self::Diagonal(d) => d.len(),
            Self::Identity(n) => *n,
        }
    }

    /// Dimension of the data space.
    pub fn codomain_dim(&self) -> usize {
        match self {
            Self::Dense(a) => a.rows,
            Self::Diagonal(d) => d.len(),
            Self::Identity(n) => *n,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.codomain_dim()];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.domain_dim(), x.len())?;
        check_len(self.codomain_dim(), out.len())?;
        match self {
            Self::Dense(a) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = dot(a.row(i), x);
                }
            }
            Self::Diagonal(d) => {
                for ((o, di), xi) in out.iter_mut().zip(d).zip(x) {
                    *o = di * xi;
                }
            }
            Self::Identity(_) => out.copy_from_slice(x),
        }
        Ok(())
    }

    pub fn adjoint_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.domain_dim()];
        self.adjoint_apply_into(u, &mut out)?;
        Ok(out)
    }

    pub fn adjoint_apply_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.codomain_dim(), u.len())?;
        check_len(self.domain_dim(), out.len())?;
        match self {
            Self::Dense(a) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (i, ui) in u.iter().enumerate() {
                    if *ui == 0.0 {
                        continue;
                    }
                    for (o, aij) in out.iter_mut().zip(a.row(i)) {
                        *o += aij * ui;
                    }
                }
            }
            Self::Diagonal(d) => {
                for ((o, di), ui) in out.iter_mut().zip(d).zip(u) {
                    *o = di * ui;
                }
            }
            Self::Identity(_) => out.copy_from_slice(u),
        }
        Ok(())
    }

    /// Column `j` of the operator as a dense vector of length `m`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        let m = self.codomain_dim();
        match self {
            Self::Dense(a) => (0..m).map(|i| a.get(i, j)).collect(),
            Self::Diagonal(d) => {
                let mut c = vec![0.0; m];
                c[j] = d[j];
                c
            }
            Self::Identity(_) => {
                let mut c = vec![0.0; m];
                c[j] = 1.0;
                c
            }
        }
    }

    /// Estimate of `‖A‖²` by power iteration on `A*A`, inflated by [`NORM_SAFETY_FACTOR`].
    ///
    /// The start vector has strictly positive seeded-random entries, so the result is
    /// deterministic. A zero operator yields `0.0`.
    pub fn operator_norm_sq(&self, tol: f64, max_iter: usize) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        match self {
            Self::Identity(_) => return Ok(NORM_SAFETY_FACTOR),
            Self::Diagonal(d) => {
                let max = d.iter().map(|v| v * v).fold(0.0, f64::max);
                return Ok(max * NORM_SAFETY_FACTOR);
            }
            Self::Dense(_) => {}
        }
        let n = self.domain_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let mut av = vec![0.0; self.codomain_dim()];
        let mut w = vec![0.0; n];
        let mut estimate = 0.0;
        for _ in 0..max_iter {
            self.apply_into(&v, &mut av)?;
            self.adjoint_apply_into(&av, &mut w)?;
            // Rayleigh quotient of A*A at the unit vector v.
            let next = dot(&v, &w);
            let nw = norm(&w);
            if nw == 0.0 {
                return Ok(0.0);
            }
            let converged = (next - estimate).abs() <= tol * next.abs();
            estimate = next;
            if converged {
                return Ok(estimate * NORM_SAFETY_FACTOR);
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / nw;
            }
        }
        Err(Error::NotConverged {
            what: "power iteration",
            iterations: max_iter,
        })
    }
}

/// The smooth term `h(x) = (w/2)‖Ax − y‖²` (default `w = 1`) together with a Lipschitz
/// constant of its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresTerm {
    op: LinearOperator,
    y: Vec<f64>,
    weight: f64,
    lipschitz: f64,
}

impl LeastSquaresTerm {
    /// Builds the term with `L` estimated by [`LinearOperator::operator_norm_sq`].
    pub fn new(op: LinearOperator, y: Vec<f64>) -> Result<Self> {
        let l = op.operator_norm_sq(DEFAULT_NORM_TOL, DEFAULT_NORM_MAX_ITER)?;
        Self::with_lipschitz(op, y, l)
    }

    /// Builds the term with a caller-supplied Lipschitz constant. `L` must be positive and at
    /// least `‖A‖²`; only positivity is checked here.
    pub fn with_lipschitz(op: LinearOperator, y: Vec<f64>, lipschitz: f64) -> Result<Self> {
        check_len(op.codomain_dim(), y.len())?;
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "Lipschitz constant must be positive and finite, got {lipschitz}"
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "data vector has non-finite entries".into(),
            ));
        }
        Ok(Self {
            op,
            y,
            weight: 1.0,
            lipschitz,
        })
    }

    /// Multiplies `h` by `weight`; the Lipschitz constant scales with it.
    pub fn with_weight(mut self, weight: f64) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "weight must be positive and finite, got {weight}"
            )));
        }
        self.lipschitz *= weight / self.weight;
        self.weight = weight;
        Ok(self)
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn op(&self) -> &LinearOperator {
        &self.op
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn dim(&self) -> usize {
        self.op.domain_dim()
    }

    /// `Ax − y`.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.op.apply(x)?;
        r.iter_mut().zip(&self.y).for_each(|(ri, yi)| *ri -= yi);
        Ok(r)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let r = self.residual(x)?;
        Ok(0.5 * self.weight * dot(&r, &r))
    }

    /// `w·A*(Ax − y)`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.residual(x)?;
        r.iter_mut().for_each(|v| *v *= self.weight);
        self.op.adjoint_apply(&r)
    }

    /// Writes `∇h(x)` into `grad` and returns `h(x)`, reusing `resid` as scratch of length `m`.
    pub(crate) fn value_and_gradient_into(
        &self,
        x: &[f64],
        resid: &mut [f64],
        grad: &mut [f64],
    ) -> Result<f64> {
        self.op.apply_into(x, resid)?;
        resid.iter_mut().zip(&self.y).for_each(|(ri, yi)| *ri -= yi);
        let value = 0.5 * self.weight * dot(resid, resid);
        resid.iter_mut().for_each(|v| *v *= self.weight);
        self.op.adjoint_apply_into(resid, grad)?;
        Ok(value)
    }
}

//! Forward-backward (thresholding gradient) iteration
//! `xⁿ⁺¹ = prox_{λg}(xⁿ − λ∇h(xⁿ))` with per-iteration trace recording.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{distance, LeastSquaresTerm};
use crate::regularizers::SeparableRegularizer;
use crate::support::{support, IndexSet};

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200_000;

/// Slack for the distance-to-reference monotonicity check.
pub const FEJER_SLACK: f64 = 1e-10;

/// Stored iterates are dropped past this many records; supports and scalars are kept.
pub const ITERATE_MEMORY_GUARD: usize = 1_000_000;

/// `min f = g + h`.
#[derive(Debug, Clone)]
pub struct Problem {
    g: SeparableRegularizer,
    h: LeastSquaresTerm,
}

impl Problem {
    pub fn new(g: SeparableRegularizer, h: LeastSquaresTerm) -> Result<Self> {
        if g.len() != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                got: g.len(),
            });
        }
        Ok(Self { g, h })
    }

    pub fn g(&self) -> &SeparableRegularizer {
        &self.g
    }

    pub fn h(&self) -> &LeastSquaresTerm {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn lipschitz(&self) -> f64 {
        self.h.lipschitz()
    }

    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        Ok(self.h.value(x)? + self.g.value(x)?)
    }

    /// Checks `0 < λ < 2/L`.
    pub fn validate_step(&self, lambda: f64) -> Result<()> {
        let bound = 2.0 / self.lipschitz();
        if lambda > 0.0 && lambda < bound {
            Ok(())
        } else {
            Err(Error::InvalidStep {
                lambda,
                lipschitz: self.lipschitz(),
                bound,
            })
        }
    }

    pub fn default_step(&self) -> f64 {
        1.0 / self.lipschitz()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Step size; `None` means `1/L`.
    pub step: Option<f64>,
    pub max_iter: usize,
    pub residual_tol: f64,
    pub record_every: usize,
    /// Starting point; `None` means the zero vector.
    pub x0: Option<Vec<f64>>,
    /// Keep every recorded iterate (needed for Fejér checks against a reference found later).
    pub keep_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: None,
            max_iter: DEFAULT_MAX_ITER,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            record_every: 1,
            x0: None,
            keep_iterates: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    /// `‖xⁿ − T(xⁿ)‖ / λ` for the forward-backward map `T`.
    pub residual: f64,
    pub support_size: usize,
    pub dist_to_ref: Option<f64>,
}

/// Run-length encoded supports: `start` is the first record index carrying `support`.
#[derive(Debug, Clone, PartialEq)]
struct SupportSpan {
    start: usize,
    support: IndexSet,
}

#[derive(Debug, Clone)]
pub struct IterateTrace {
    lambda: f64,
    record_every: usize,
    records: Vec<TraceRecord>,
    supports: Vec<SupportSpan>,
    iterates: Option<Vec<Vec<f64>>>,
    iterates_truncated: bool,
    x0: Vec<f64>,
    x: Vec<f64>,
    converged: bool,
    iterations: usize,
}

impl IterateTrace {
    fn new(lambda: f64, record_every: usize, keep_iterates: bool, x0: Vec<f64>) -> Self {
        Self {
            lambda,
            record_every,
            records: Vec::new(),
            supports: Vec::new(),
            iterates: keep_iterates.then(Vec::new),
            iterates_truncated: false,
            x0,
            x: Vec::new(),
            converged: false,
            iterations: 0,
        }
    }

    fn push(&mut self, record: TraceRecord, x: &[f64]) {
        let idx = self.records.len();
        let supp = support(x);
        if self.supports.last().map(|s| &s.support) != Some(&supp) {
            self.supports.push(SupportSpan {
                start: idx,
                support: supp,
            });
        }
        if let Some(iterates) = self.iterates.as_mut() {
            if iterates.len() < ITERATE_MEMORY_GUARD {
                iterates.push(x.to_vec());
            } else {
                self.iterates_truncated = true;
            }
        }
        self.records.push(record);
    }

    /// Builds a trace from externally produced records and supports (e.g. a CSV export).
    pub fn from_parts(
        lambda: f64,
        record_every: usize,
        records: Vec<TraceRecord>,
        supports: Vec<IndexSet>,
    ) -> Result<Self> {
        if records.len() != supports.len() {
            return Err(Error::DimensionMismatch {
                expected: records.len(),
                got: supports.len(),
            });
        }
        let mut trace = Self::new(lambda, record_every, false, Vec::new());
        for (i, s) in supports.into_iter().enumerate() {
            if trace.supports.last().map(|sp| &sp.support) != Some(&s) {
                trace.supports.push(SupportSpan {
                    start: i,
                    support: s,
                });
            }
        }
        trace.iterations = records.last().map_or(0, |r| r.iteration);
        trace.records = records;
        Ok(trace)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn record_every(&self) -> usize {
        self.record_every
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    /// Support of the `i`-th record.
    pub fn support_at(&self, i: usize) -> &IndexSet {
        let pos = self.supports.partition_point(|s| s.start <= i);
        &self.supports[pos - 1].support
    }

    pub fn iterates(&self) -> Option<&[Vec<f64>]> {
        self.iterates.as_deref()
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// Final iterate.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Index of the final iterate.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual)
    }

    /// Fills `dist_to_ref` from the stored iterates.
    pub fn attach_reference(&mut self, reference: &[f64]) -> Result<()> {
        let iterates = self.iterates.as_ref().ok_or(Error::MissingIterates)?;
        if self.iterates_truncated {
            return Err(Error::MissingIterates);
        }
        for (r, x) in self.records.iter_mut().zip(iterates) {
            r.dist_to_ref = Some(distance(x, reference));
        }
        Ok(())
    }

    /// `f(xⁿ⁺¹) ≤ f(xⁿ) + slack` over consecutive records.
    pub fn objective_nonincreasing(&self, slack: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| !(w[1].objective > w[0].objective + slack))
    }

    /// Drops stored iterates after they are no longer needed.
    pub fn discard_iterates(&mut self) {
        self.iterates = None;
    }
}

struct Workspace {
    resid: Vec<f64>,
    grad: Vec<f64>,
    forward: Vec<f64>,
}

impl Workspace {
    fn new(problem: &Problem) -> Self {
        let n = problem.dim();
        Self {
            resid: vec![0.0; problem.h().op().codomain_dim()],
            grad: vec![0.0; n],
            forward: vec![0.0; n],
        }
    }

    /// Writes `T(x)` into `out` and returns `h(x)`.
    fn step(&mut self, problem: &Problem, lambda: f64, x: &[f64], out: &mut [f64]) -> Result<f64> {
        let hx = problem
            .h()
            .value_and_gradient_into(x, &mut self.resid, &mut self.grad)?;
        for ((f, xi), gi) in self.forward.iter_mut().zip(x).zip(&self.grad) {
            *f = xi - lambda * gi;
        }
        problem.g().prox_into(&self.forward, lambda, out)?;
        Ok(hx)
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// One forward-backward step `prox_{λg}(x − λ∇h(x))`.
pub fn fb_step(problem: &Problem, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
    problem.validate_step(lambda)?;
    let mut ws = Workspace::new(problem);
    let mut out = vec![0.0; x.len()];
    ws.step(problem, lambda, x, &mut out)?;
    if !all_finite(&ws.grad) {
        return Err(Error::NonFinite { iteration: 0 });
    }
    Ok(out)
}

/// `‖x − fb_step(x)‖ / λ`.
pub fn fixed_point_residual(problem: &Problem, lambda: f64, x: &[f64]) -> Result<f64> {
    let next = fb_step(problem, lambda, x)?;
    Ok(distance(x, &next) / lambda)
}

/// Iterates until the fixed-point residual drops to `residual_tol` or `max_iter` steps were taken.
///
/// The final iterate is the one whose residual met the tolerance, so a minimizer passed as `x0`
/// terminates at iteration 0.
pub fn run(problem: &Problem, config: &SolverConfig) -> Result<IterateTrace> {
    let lambda = config.step.unwrap_or_else(|| problem.default_step());
    problem.validate_step(lambda)?;
    if config.record_every == 0 {
        return Err(Error::InvalidInput(
            "record_every must be at least 1".into(),
        ));
    }
    if !(config.residual_tol >= 0.0) {
        return Err(Error::InvalidInput(
            "residual_tol must be nonnegative".into(),
        ));
    }
    let n = problem.dim();
    let x0 = config.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    if !all_finite(&x0) {
        return Err(Error::NonFinite { iteration: 0 });
    }

    let mut trace = IterateTrace::new(
        lambda,
        config.record_every,
        config.keep_iterates,
        x0.clone(),
    );
    let mut ws = Workspace::new(problem);
    let mut x = x0;
    let mut next = vec![0.0; n];
    let mut k = 0;
    loop {
        let hx = ws.step(problem, lambda, &x, &mut next)?;
        if !all_finite(&ws.grad) || !all_finite(&next) {
            return Err(Error::NonFinite { iteration: k });
        }
        let objective = hx + problem.g().value(&x)?;
        let residual = distance(&x, &next) / lambda;
        let converged = residual <= config.residual_tol;
        let last = converged || k == config.max_iter;
        if k % config.record_every == 0 || last {
            let record = TraceRecord {
                iteration: k,
                objective,
                residual,
                support_size: x.iter().filter(|v| **v != 0.0).count(),
                dist_to_ref: None,
            };
            trace.push(record, &x);
        }
        if last {
            trace.converged = converged;
            trace.iterations = k;
            trace.x = x;
            return Ok(trace);
        }
        std::mem::swap(&mut x, &mut next);
        k += 1;
    }
}

/// `‖xⁿ⁺¹ − x̄‖ ≤ ‖xⁿ − x̄‖ + 1e−10` across consecutive records.
pub fn fejer_check(trace: &IterateTrace, reference: &[f64]) -> Result<bool> {
    if trace.record_every != 1 {
        return Err(Error::SparseTrace {
            record_every: trace.record_every,
        });
    }
    let iterates = trace.iterates().ok_or(Error::MissingIterates)?;
    if trace.iterates_truncated {
        return Err(Error::MissingIterates);
    }
    let dists: Vec<f64> = iterates.iter().map(|x| distance(x, reference)).collect();
    Ok(distances_nonincreasing(&dists, FEJER_SLACK))
}

pub fn distances_nonincreasing(dists: &[f64], slack: f64) -> bool {
    dists.windows(2).all(|w| !(w[1] > w[0] + slack))
}

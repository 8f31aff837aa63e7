//! Reference-solution polishing, conditioning-constant estimation, convergence-rate fits, and
//! brute-force scalar oracles.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{distance, norm};
use crate::regularizers::{Interval, ScalarPenalty};
use crate::solver::{self, IterateTrace, Problem, SolverConfig};
use crate::support::{support, IndexSet};

/// FB iterations spent by [`polish`] when the restricted solve does not verify.
pub const POLISH_FALLBACK_ITERS: usize = 10 * 20_000;
/// R² threshold for accepting a rate fit.
pub const FIT_R2_THRESHOLD: f64 = 0.99;
/// A fit window with fewer points than this is reported as inconclusive.
pub const MIN_FIT_POINTS: usize = 8;
pub const UNIQUENESS_STARTS: usize = 5;
pub const UNIQUENESS_TOL: f64 = 1e-8;

const GRID_POINTS: usize = 10_000;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Noise floor below which objective gaps are rounding noise.
pub fn noise_floor(f_star: f64) -> f64 {
    1e-14 * (1.0 + f_star.abs())
}

/// Refines an approximate minimizer to a fixed-point residual (at `λ = 1/L`) of at most `tol`.
///
/// With `ψ ≡ 0` the stationarity system restricted to `J = supp(x_approx)` is solved in the
/// least-squares sense, taking the minimum-norm correction of `x_approx` when `A_J` is rank
/// deficient, followed by one forward-backward step that snaps exact zeros. If that point does
/// not verify, or `ψ ≢ 0`, forward-backward iterations continue from `x_approx`.
pub fn polish(problem: &Problem, x_approx: &[f64], tol: f64) -> Result<Vec<f64>> {
    if x_approx.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x_approx.len(),
        });
    }
    let lambda = problem.default_step();
    let f_in = problem.objective(x_approx)?;
    let residual_in = solver::fixed_point_residual(problem, lambda, x_approx)?;
    let mut best = (residual_in, x_approx.to_vec());
    let consider = |best: &mut (f64, Vec<f64>), x: Vec<f64>| -> Result<()> {
        let r = solver::fixed_point_residual(problem, lambda, &x)?;
        let f = problem.objective(&x)?;
        if r <= tol && f <= f_in {
            if best.0 > tol || r < best.0 {
                *best = (r, x);
            }
        } else if best.0 > tol && r < best.0 {
            *best = (r, x);
        }
        Ok(())
    };

    if problem.g().is_penalty_free() {
        if let Some(x) = restricted_solve(problem, x_approx)? {
            let snapped = solver::fb_step(problem, lambda, &x)?;
            consider(&mut best, snapped)?;
        }
        if best.0 <= tol {
            return Ok(best.1);
        }
    }

    let cfg = SolverConfig {
        step: Some(lambda),
        max_iter: POLISH_FALLBACK_ITERS,
        residual_tol: tol,
        x0: Some(x_approx.to_vec()),
        ..SolverConfig::default()
    };
    let trace = solver::run(problem, &cfg)?;
    let continued = trace.x().to_vec();
    if problem.g().is_penalty_free() {
        if let Some(x) = restricted_solve(problem, &continued)? {
            let snapped = solver::fb_step(problem, lambda, &x)?;
            consider(&mut best, snapped)?;
        }
    }
    consider(&mut best, continued)?;
    if best.0 <= tol {
        Ok(best.1)
    } else {
        Err(Error::PolishFailed {
            best_residual: best.0,
            tol,
        })
    }
}

/// Solves `w·A_J*(A_J x_J − y) + s_J = 0` for `x_J`, with `s_k` the endpoint of `I_k` on the side
/// of `sign(x_k)`. Returns `None` if a selected endpoint is infinite.
fn restricted_solve(problem: &Problem, x: &[f64]) -> Result<Option<Vec<f64>>> {
    let j = support(x);
    let mut out = vec![0.0; x.len()];
    if j.is_empty() {
        return Ok(Some(out));
    }
    let g = problem.g();
    let mut sides = Vec::with_capacity(j.len());
    for k in j.iter() {
        let iv = g.interval(k);
        let s = if x[k] > 0.0 { iv.hi() } else { iv.lo() };
        if !s.is_finite() {
            return Ok(None);
        }
        sides.push(s / problem.h().weight());
    }
    let op = problem.h().op();
    let m = op.codomain_dim();
    let cols: Vec<Vec<f64>> = j.iter().map(|k| op.column(k)).collect();
    let a_j = DMatrix::from_fn(m, j.len(), |i, c| cols[c][i]);
    let y = DVector::from_column_slice(problem.h().y());
    let x_j = DVector::from_iterator(j.len(), j.iter().map(|k| x[k]));
    let gram = a_j.transpose() * &a_j;
    let rhs = a_j.transpose() * y - DVector::from_vec(sides) - &gram * &x_j;
    let scale = gram.amax().max(1.0);
    let svd = gram.svd(true, true);
    let correction = svd
        .solve(&rhs, 1e-12 * scale)
        .map_err(|e| Error::InvalidInput(format!("restricted solve failed: {e}")))?;
    for (c, k) in j.iter().enumerate() {
        out[k] = x_j[c] + correction[c];
    }
    Ok(Some(out))
}

/// Runs the solver from `UNIQUENESS_STARTS` seeded random points, polishes, and checks that all
/// limits lie within `UNIQUENESS_TOL` of `x_ref`. Returns the largest distance seen.
pub fn verify_unique_minimizer(problem: &Problem, x_ref: &[f64], seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 + x_ref.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut limits = vec![x_ref.to_vec()];
    for _ in 0..UNIQUENESS_STARTS {
        let x0: Vec<f64> = (0..problem.dim())
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
            .collect();
        let cfg = SolverConfig {
            x0: Some(x0),
            residual_tol: 1e-11,
            ..SolverConfig::default()
        };
        let trace = solver::run(problem, &cfg)?;
        limits.push(polish(problem, trace.x(), 1e-12)?);
    }
    let mut spread = 0.0f64;
    for a in 0..limits.len() {
        for b in a + 1..limits.len() {
            spread = spread.max(distance(&limits[a], &limits[b]));
        }
    }
    if spread > UNIQUENESS_TOL {
        return Err(Error::NonUniqueMinimizer { spread });
    }
    Ok(spread)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRegion {
    pub subspace: IndexSet,
    pub delta: f64,
    pub r: f64,
}

/// Empirical `inf p·(f(x) − f*)/dist(x, x̄)ᵖ` over sampled points; an upper bound on the true
/// conditioning constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub gamma: f64,
    pub p: f64,
    pub samples: usize,
    pub attempts: usize,
    pub region: GammaRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSpec {
    pub delta: f64,
    pub r: f64,
    pub p: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Samples `X_J ∩ B(x̄, δ) ∩ S_f(r) ∖ {x̄}` uniformly (Gaussian direction, radius `δ·U^{1/|J|}`,
/// rejection to the sublevel set) and returns the smallest conditioning ratio.
///
/// Requires bounded intervals, `supp(x̄) ⊆ J`, and a minimizer that passes
/// [`verify_unique_minimizer`].
pub fn estimate_gamma(
    problem: &Problem,
    subspace: &IndexSet,
    x_ref: &[f64],
    spec: &GammaSpec,
) -> Result<GammaEstimate> {
    if !problem.g().all_bounded() {
        return Err(Error::InvalidInput(
            "conditioning estimates require bounded intervals".into(),
        ));
    }
    if !(spec.delta > 0.0 && spec.r > 0.0 && spec.p >= 1.0 && spec.samples > 0) {
        return Err(Error::InvalidInput(format!("invalid gamma spec {spec:?}")));
    }
    if subspace.is_empty() || subspace.max().is_some_and(|k| k >= problem.dim()) {
        return Err(Error::InvalidInput(
            "subspace index set is empty or out of range".into(),
        ));
    }
    if !support(x_ref).is_subset(subspace) {
        return Err(Error::InvalidInput(
            "supp(x_ref) is not contained in the subspace".into(),
        ));
    }
    verify_unique_minimizer(problem, x_ref, spec.seed)?;
    sample_gamma(problem, subspace, x_ref, spec)
}

fn sample_gamma(
    problem: &Problem,
    subspace: &IndexSet,
    x_ref: &[f64],
    spec: &GammaSpec,
) -> Result<GammaEstimate> {
    let f_star = problem.objective(x_ref)?;
    let d = subspace.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    let max_attempts = spec.samples.saturating_mul(1000);
    let mut gamma = f64::INFINITY;
    let (mut accepted, mut attempts) = (0, 0);
    let mut x = x_ref.to_vec();
    let mut dir = vec![0.0; d];
    while accepted < spec.samples && attempts < max_attempts {
        attempts += 1;
        dir.iter_mut()
            .for_each(|v| *v = StandardNormal.sample(&mut rng));
        let u: f64 = rng.random();
        let len = norm(&dir);
        if len == 0.0 {
            continue;
        }
        let radius = spec.delta * u.powf(1.0 / d as f64);
        for (c, k) in subspace.iter().enumerate() {
            x[k] = x_ref[k] + radius * dir[c] / len;
        }
        let dist = distance(&x, x_ref);
        let gap = (problem.objective(&x)? - f_star).max(0.0);
        if dist == 0.0 || !(gap < spec.r) {
            continue;
        }
        accepted += 1;
        gamma = gamma.min(spec.p * gap / dist.powf(spec.p));
    }
    if accepted < spec.samples {
        return Err(Error::EmptyRegion { accepted, attempts });
    }
    Ok(GammaEstimate {
        gamma,
        p: spec.p,
        samples: accepted,
        attempts,
        region: GammaRegion {
            subspace: subspace.clone(),
            delta: spec.delta,
            r: spec.r,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LineFit {
        slope,
        intercept,
        r_squared,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "lowercase")]
pub enum Regime {
    /// Gap decays like `εⁿ`.
    Linear {
        ratio: f64,
    },
    /// Gap decays like `C·n^{−exponent}`.
    Sublinear {
        exponent: f64,
        constant: f64,
    },
    Inconclusive {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    #[serde(flatten)]
    pub regime: Regime,
    /// R² of the fit backing the regime (0 when inconclusive without fits).
    pub r_squared: f64,
    pub linear_fit: Option<LineFit>,
    pub loglog_fit: Option<LineFit>,
    pub window: [usize; 2],
    pub n_points: usize,
}

impl RateReport {
    pub fn is_linear(&self) -> bool {
        matches!(self.regime, Regime::Linear { .. })
    }

    pub fn ratio(&self) -> Option<f64> {
        match self.regime {
            Regime::Linear { ratio } => Some(ratio),
            _ => None,
        }
    }
}

/// The tail window of a gap sequence: iterations `n ≥ 1` before the gap first falls to the
/// noise floor, last `window_fraction` of them.
fn tail_window(
    iterations: &[usize],
    objectives: &[f64],
    f_star: f64,
    window_fraction: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "window_fraction must lie in (0, 1], got {window_fraction}"
        )));
    }
    let floor = noise_floor(f_star);
    let mut segment = Vec::new();
    for (&n, &f) in iterations.iter().zip(objectives) {
        if n == 0 {
            continue;
        }
        let gap = f - f_star;
        if !(gap > floor) || !gap.is_finite() {
            break;
        }
        segment.push((n as f64, gap));
    }
    if segment.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let take = ((segment.len() as f64) * window_fraction).ceil() as usize;
    Ok(segment.split_off(segment.len() - take.clamp(1, segment.len())))
}

/// Classifies the decay of `f(xⁿ) − f*` on the trace tail.
pub fn fit_rate(trace: &IterateTrace, f_star: f64, window_fraction: f64) -> Result<RateReport> {
    let iterations: Vec<usize> = trace.records().iter().map(|r| r.iteration).collect();
    let objectives: Vec<f64> = trace.records().iter().map(|r| r.objective).collect();
    fit_rate_series(&iterations, &objectives, f_star, window_fraction)
}

/// [`fit_rate`] on raw `(iteration, objective)` series.
///
/// Both the log-linear (`log gap` vs `n`) and log-log (`log gap` vs `log n`) fits are computed.
/// A fit qualifies with R² ≥ 0.99 and negative slope; when both qualify the higher R² wins.
pub fn fit_rate_series(
    iterations: &[usize],
    objectives: &[f64],
    f_star: f64,
    window_fraction: f64,
) -> Result<RateReport> {
    let window = tail_window(iterations, objectives, f_star, window_fraction)?;
    let span = [window[0].0 as usize, window[window.len() - 1].0 as usize];
    if window.len() < MIN_FIT_POINTS {
        return Ok(RateReport {
            regime: Regime::Inconclusive {
                reason: format!("only {} points above the noise floor", window.len()),
            },
            r_squared: 0.0,
            linear_fit: None,
            loglog_fit: None,
            window: span,
            n_points: window.len(),
        });
    }
    let ns: Vec<f64> = window.iter().map(|w| w.0).collect();
    let log_ns: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let log_gaps: Vec<f64> = window.iter().map(|w| w.1.ln()).collect();
    let lin = least_squares_line(&ns, &log_gaps);
    let loglog = least_squares_line(&log_ns, &log_gaps);
    let lin_ok = lin.r_squared >= FIT_R2_THRESHOLD && lin.slope < 0.0;
    let log_ok = loglog.r_squared >= FIT_R2_THRESHOLD && loglog.slope < 0.0;
    let (regime, r_squared) = match (lin_ok, log_ok) {
        (true, true) if loglog.r_squared > lin.r_squared => (sublinear(&loglog), loglog.r_squared),
        (true, _) => (
            Regime::Linear {
                ratio: lin.slope.exp(),
            },
            lin.r_squared,
        ),
        (false, true) => (sublinear(&loglog), loglog.r_squared),
        (false, false) => (
            Regime::Inconclusive {
                reason: format!(
                    "R² {:.4} (log-linear) and {:.4} (log-log) below {FIT_R2_THRESHOLD}",
                    lin.r_squared, loglog.r_squared
                ),
            },
            lin.r_squared.max(loglog.r_squared),
        ),
    };
    Ok(RateReport {
        regime,
        r_squared,
        linear_fit: Some(lin),
        loglog_fit: Some(loglog),
        window: span,
        n_points: window.len(),
    })
}

fn sublinear(fit: &LineFit) -> Regime {
    Regime::Sublinear {
        exponent: -fit.slope,
        constant: fit.intercept.exp(),
    }
}

/// Tail behaviour of `gap(n)·n^{p/(p−2)}` for `p > 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConsistency {
    /// Slope of `log(gap(n)·n^{p/(p−2)})` against `log n`.
    pub slope: f64,
    /// Largest scaled gap over the window.
    pub c1: f64,
    pub n_points: usize,
}

/// Checks the `O(n^{−p/(p−2)})` upper bound for an ℓ¹+ℓᵖ run: the scaled gap should show no
/// upward trend on the tail.
pub fn sublinear_bound_consistency(
    trace: &IterateTrace,
    f_star: f64,
    p: f64,
    window_fraction: f64,
) -> Result<BoundConsistency> {
    if !(p > 2.0) {
        return Err(Error::InvalidInput(format!(
            "bound consistency needs p > 2, got {p}"
        )));
    }
    let iterations: Vec<usize> = trace.records().iter().map(|r| r.iteration).collect();
    let objectives: Vec<f64> = trace.records().iter().map(|r| r.objective).collect();
    let window = tail_window(&iterations, &objectives, f_star, window_fraction)?;
    let e = p / (p - 2.0);
    let log_ns: Vec<f64> = window.iter().map(|w| w.0.ln()).collect();
    let scaled: Vec<f64> = window.iter().map(|w| w.1 * w.0.powf(e)).collect();
    let logs: Vec<f64> = scaled.iter().map(|s| s.ln()).collect();
    let fit = if window.len() >= 2 {
        least_squares_line(&log_ns, &logs)
    } else {
        LineFit {
            slope: 0.0,
            intercept: logs[0],
            r_squared: 1.0,
        }
    };
    Ok(BoundConsistency {
        slope: fit.slope,
        c1: scaled.iter().cloned().fold(0.0, f64::max),
        n_points: window.len(),
    })
}

/// Grid scan at 10⁴ points then golden-section refinement of the best bracket to `tol`.
/// Returns `(argmin, min)`.
pub fn brute_force_scalar_min(fun: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..GRID_POINTS {
        let v = fun(lo + step * i as f64);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let grid_best = (lo + step * best_i as f64, best_v);
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (fun(c), fun(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = fun(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = fun(d);
        }
        if c == d {
            break;
        }
    }
    let mid = 0.5 * (a + b);
    let fm = fun(mid);
    if fm <= grid_best.1 {
        (mid, fm)
    } else {
        grid_best
    }
}

/// Bisection for a sign change of `fun` on `[lo, hi]`.
pub fn bisect_root(fun: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = fun(lo);
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = fun(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Brute-force `prox_{λ(σ_I + ψ)}(t)`: grid + golden section on the prox objective, then
/// bisection on its derivative away from 0. Independent of the soft-then-prox factorisation.
pub fn brute_force_prox(t: f64, lambda: f64, interval: &Interval, penalty: &ScalarPenalty) -> f64 {
    let objective = |s: f64| {
        lambda * interval.support_function(s) + lambda * penalty.value(s) + 0.5 * (s - t) * (s - t)
    };
    let psi_slope = |s: f64| match penalty {
        ScalarPenalty::Zero => 0.0,
        ScalarPenalty::Power { p, weight } => weight * s.signum() * s.abs().powf(p - 1.0),
        ScalarPenalty::Custom(_) => f64::NAN,
    };
    let derivative = |s: f64| {
        let sigma = if s > 0.0 {
            interval.hi()
        } else {
            interval.lo()
        };
        lambda * sigma + lambda * psi_slope(s) + s - t
    };
    let lo = t.min(0.0) - 1.0;
    let hi = t.max(0.0) + 1.0;
    let (s_star, f_star) = brute_force_scalar_min(objective, lo, hi, 1e-10);
    if objective(0.0) <= f_star {
        return 0.0;
    }
    // Bracket the stationary point on the side of s_star.
    let grid = (hi - lo) / (GRID_POINTS - 1) as f64;
    let (a, b) = if s_star > 0.0 {
        (
            f64::MIN_POSITIVE.max(s_star - 2.0 * grid),
            s_star + 2.0 * grid,
        )
    } else {
        (
            s_star - 2.0 * grid,
            (-f64::MIN_POSITIVE).min(s_star + 2.0 * grid),
        )
    };
    if derivative(a) < 0.0 && derivative(b) > 0.0 {
        bisect_root(derivative, a, b, 1e-15 * t.abs().max(1.0))
    } else {
        s_star
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{LeastSquaresTerm, LinearOperator};
    use crate::regularizers::SeparableRegularizer;

    fn ex_nocq() -> Problem {
        let h =
            LeastSquaresTerm::with_lipschitz(LinearOperator::identity(1).unwrap(), vec![1.0], 1.0)
                .unwrap();
        Problem::new(SeparableRegularizer::l1(1), h).unwrap()
    }

    fn ex_cq() -> Problem {
        let (h, _) = crate::cli::builtin_data(crate::cli::Builtin::ExCq).unwrap();
        Problem::new(SeparableRegularizer::l1(2), h).unwrap()
    }

    #[test]
    fn brute_force_examples() {
        let (s, _) =
            brute_force_scalar_min(|s| 0.5 * (s - 3.0).powi(2) + s.abs(), -5.0, 5.0, 1e-10);
        assert!((s - 2.0).abs() < 1e-6);
        let root = bisect_root(|s| s * s * s + s - 2.0, 0.0, 2.0, 1e-13);
        let (s, _) = brute_force_scalar_min(
            |s| s.powi(4) / 4.0 + 0.5 * (s - 2.0).powi(2),
            0.0,
            2.0,
            1e-10,
        );
        assert!((s - root).abs() < 1e-6);
        assert!((root - 1.0).abs() < 1e-12);
        let (s, v) = brute_force_scalar_min(|_| 7.0, -1.0, 1.0, 1e-10);
        assert_eq!(v, 7.0);
        assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn brute_force_prox_matches_closed_forms() {
        let i = Interval::symmetric(1.0).unwrap();
        assert_eq!(brute_force_prox(0.5, 1.0, &i, &ScalarPenalty::Zero), 0.0);
        assert!((brute_force_prox(3.0, 1.0, &i, &ScalarPenalty::Zero) - 2.0).abs() < 1e-12);
        let quad = ScalarPenalty::power(2.0, 1.0).unwrap();
        assert!((brute_force_prox(3.0, 1.0, &i, &quad) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polish_examples() {
        let p = ex_nocq();
        assert_eq!(polish(&p, &[1e-6], 1e-12).unwrap(), vec![0.0]);
        let p = ex_cq();
        let x = polish(&p, &[0.5 + 1e-7, 0.0], 1e-12).unwrap();
        assert!((p.objective(&x).unwrap() - 0.75).abs() < 1e-12);
        let x = polish(&p, &[0.3 + 1e-7, -0.2], 1e-12).unwrap();
        assert!((p.objective(&x).unwrap() - 0.75).abs() < 1e-12);
        // The minimum-norm correction stays near the input on the solution segment.
        assert!((x[0] - 0.3).abs() < 1e-6 && (x[1] + 0.2).abs() < 1e-6);
    }

    #[test]
    fn polish_power_penalty_uses_continuation() {
        let h = LeastSquaresTerm::new(LinearOperator::identity(1).unwrap(), vec![3.0]).unwrap();
        let g = SeparableRegularizer::uniform(
            1,
            Interval::symmetric(1.0).unwrap(),
            ScalarPenalty::power(4.0, 1.0).unwrap(),
        )
        .unwrap();
        let p = Problem::new(g, h).unwrap();
        let x = polish(&p, &[1.0], 1e-12).unwrap();
        // 1 + s³ + s − 3 = 0, i.e. s³ + s = 2.
        let root = bisect_root(|s| s * s * s + s - 2.0, 0.0, 2.0, 1e-14);
        assert!((x[0] - root).abs() < 1e-10);
    }

    fn quadratic_1d() -> Problem {
        // f(x) ≈ ½x² with a 1e−9 ℓ¹ part.
        let h = LeastSquaresTerm::new(LinearOperator::identity(1).unwrap(), vec![0.0]).unwrap();
        let g = SeparableRegularizer::uniform(
            1,
            Interval::symmetric(1e-9).unwrap(),
            ScalarPenalty::Zero,
        )
        .unwrap();
        Problem::new(g, h).unwrap()
    }

    fn spec(delta: f64, r: f64, p: f64, samples: usize) -> GammaSpec {
        GammaSpec {
            delta,
            r,
            p,
            samples,
            seed: 3,
        }
    }

    fn grid_gamma(problem: &Problem, delta: f64, r: f64, p: f64) -> f64 {
        let f_star = problem.objective(&[0.0]).unwrap();
        (1..=20_000)
            .flat_map(|i| {
                let x = delta * i as f64 / 20_000.0;
                [x, -x]
            })
            .filter_map(|x| {
                let gap = problem.objective(&[x]).unwrap() - f_star;
                (gap < r).then(|| p * gap / x.abs().powf(p))
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn gamma_of_half_square_is_one() {
        let p = quadratic_1d();
        let j = IndexSet::from_unsorted(vec![0]);
        let est = estimate_gamma(&p, &j, &[0.0], &spec(1.0, 1.0, 2.0, 2000)).unwrap();
        assert!((est.gamma - 1.0).abs() < 1e-3, "{est:?}");
        assert!(est.gamma >= 1.0);
    }

    #[test]
    fn gamma_nocq_matches_grid_bracket() {
        let p = ex_nocq();
        let j = IndexSet::from_unsorted(vec![0]);
        let est = estimate_gamma(&p, &j, &[0.0], &spec(1.0, 1.0, 2.0, 2000)).unwrap();
        let grid = grid_gamma(&p, 1.0, 1.0, 2.0);
        assert!((grid - 1.0).abs() < 1e-6);
        assert!(
            est.gamma >= grid - 1e-9 && est.gamma < grid + 1e-6,
            "{est:?} vs {grid}"
        );
    }

    #[test]
    fn gamma_quartic_orders() {
        // h ≡ 0 through a zero diagonal operator with L = 1; g = 1e−3|·| + |·|⁴/4.
        // Order 4 holds with γ ≥ 1; the order-2 ratio 2ω/|x| + x²/2 bottoms out at x³ = 2ω.
        let h = LeastSquaresTerm::with_lipschitz(
            LinearOperator::diagonal(vec![0.0]).unwrap(),
            vec![0.0],
            1.0,
        )
        .unwrap();
        let omega = 1e-3;
        let g = SeparableRegularizer::uniform(
            1,
            Interval::symmetric(omega).unwrap(),
            ScalarPenalty::power(4.0, 1.0).unwrap(),
        )
        .unwrap();
        let p = Problem::new(g, h).unwrap();
        let j = IndexSet::from_unsorted(vec![0]);
        let g4 = estimate_gamma(&p, &j, &[0.0], &spec(0.5, 1.0, 4.0, 2000)).unwrap();
        assert!(g4.gamma > 1.0 && g4.gamma >= grid_gamma(&p, 0.5, 1.0, 4.0) - 1e-9);
        let g2 = estimate_gamma(&p, &j, &[0.0], &spec(0.5, 1.0, 2.0, 2000))
            .unwrap()
            .gamma;
        let x: f64 = (2.0 * omega).cbrt();
        let exact = 2.0 * omega / x + x * x / 2.0;
        assert!(g2 >= exact - 1e-12 && g2 < exact * 1.01, "{g2} vs {exact}");
        assert!((g2 - grid_gamma(&p, 0.5, 1.0, 2.0)).abs() < exact * 0.01);
    }

    #[test]
    fn gamma_estimate_is_monotone_in_samples() {
        let p = ex_nocq();
        let j = IndexSet::from_unsorted(vec![0]);
        let mut prev = f64::INFINITY;
        for n in [10, 50, 200, 1000] {
            let est = sample_gamma(&p, &j, &[0.0], &spec(1.0, 0.1, 2.0, n)).unwrap();
            assert!(est.gamma <= prev);
            prev = est.gamma;
        }
    }

    #[test]
    fn gamma_rejects_bad_instances() {
        let p = ex_cq();
        let j = IndexSet::from_unsorted(vec![0, 1]);
        assert!(matches!(
            estimate_gamma(&p, &j, &[0.25, -0.25], &spec(0.1, 1.0, 2.0, 10)),
            Err(Error::NonUniqueMinimizer { .. })
        ));
        let p = ex_nocq();
        assert!(matches!(
            sample_gamma(
                &p,
                &IndexSet::from_unsorted(vec![0]),
                &[0.0],
                &spec(1.0, 1e-300, 2.0, 10)
            ),
            Err(Error::EmptyRegion { .. })
        ));
        let h = LeastSquaresTerm::new(LinearOperator::identity(1).unwrap(), vec![1.0]).unwrap();
        let g = SeparableRegularizer::uniform(
            1,
            Interval::new(-1.0, f64::INFINITY).unwrap(),
            ScalarPenalty::Zero,
        )
        .unwrap();
        let p = Problem::new(g, h).unwrap();
        assert!(estimate_gamma(
            &p,
            &IndexSet::from_unsorted(vec![0]),
            &[0.0],
            &spec(1.0, 1.0, 2.0, 10)
        )
        .is_err());
    }

    #[test]
    fn fit_rate_nocq_sequence() {
        // f(x) − f* = x²/2 along xⁿ = 0.5ⁿ, evaluated through the objective itself.
        let p = ex_nocq();
        let iterations: Vec<usize> = (0..60).collect();
        let objectives: Vec<f64> = iterations
            .iter()
            .map(|&n| p.objective(&[0.5f64.powi(n as i32)]).unwrap())
            .collect();
        let report = fit_rate_series(&iterations, &objectives, 0.5, 0.5).unwrap();
        let ratio = report.ratio().expect("linear");
        assert!((ratio - 0.25).abs() < 0.01, "{report:?}");
    }

    #[test]
    fn fit_rate_planted_geometric() {
        let iterations: Vec<usize> = (0..400).collect();
        let objectives: Vec<f64> = iterations.iter().map(|&n| 0.9f64.powi(n as i32)).collect();
        let report = fit_rate_series(&iterations, &objectives, 0.0, 0.5).unwrap();
        assert!((report.ratio().unwrap() - 0.9).abs() < 1e-6 * 0.9);
        assert!(report.r_squared > 1.0 - 1e-9);
    }

    #[test]
    fn fit_rate_planted_power_law() {
        let iterations: Vec<usize> = (0..2000).collect();
        let objectives: Vec<f64> = iterations
            .iter()
            .map(|&n| if n == 0 { 1.0 } else { (n as f64).powi(-2) })
            .collect();
        let report = fit_rate_series(&iterations, &objectives, 0.0, 0.5).unwrap();
        match report.regime {
            Regime::Sublinear { exponent, .. } => assert!((exponent - 2.0).abs() < 0.05),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fit_rate_edge_cases() {
        assert!(matches!(
            fit_rate_series(&[0, 1, 2], &[1.0, 0.0, 0.0], 0.0, 0.5),
            Err(Error::EmptyWindow)
        ));
        let r = fit_rate_series(&[0, 1, 2, 3], &[1.0, 0.5, 0.25, 0.125], 0.0, 0.5).unwrap();
        assert!(matches!(r.regime, Regime::Inconclusive { .. }));
        assert!(fit_rate_series(&[0, 1], &[1.0, 0.5], 0.0, 0.0).is_err());
        // Oscillating gap: neither fit qualifies.
        let iterations: Vec<usize> = (0..100).collect();
        let objectives: Vec<f64> = iterations
            .iter()
            .map(|&n| if n % 2 == 0 { 1.0 } else { 1e-3 })
            .collect();
        let r = fit_rate_series(&iterations, &objectives, 0.0, 0.5).unwrap();
        assert!(matches!(r.regime, Regime::Inconclusive { .. }));
    }

    #[test]
    fn planted_rates_recovered_across_parameters() {
        for ratio in [0.5f64, 0.8, 0.95, 0.99] {
            let iterations: Vec<usize> = (0..3000).collect();
            let objectives: Vec<f64> = iterations
                .iter()
                .map(|&n| 3.0 * ratio.powi(n as i32))
                .collect();
            let r = fit_rate_series(&iterations, &objectives, 0.0, 0.5).unwrap();
            assert!((r.ratio().unwrap() - ratio).abs() <= 1e-4 * ratio);
        }
        for q in [0.5, 1.0, 2.0, 3.0] {
            let iterations: Vec<usize> = (0..5000).collect();
            let objectives: Vec<f64> = iterations
                .iter()
                .map(|&n| 2.0 * ((n + 1) as f64 - 1.0).max(1.0).powf(-q))
                .collect();
            let r = fit_rate_series(&iterations, &objectives, 0.0, 0.5).unwrap();
            match r.regime {
                Regime::Sublinear { exponent, .. } => assert!((exponent - q).abs() < 0.05),
                other => panic!("q={q}: {other:?}"),
            }
        }
    }
}

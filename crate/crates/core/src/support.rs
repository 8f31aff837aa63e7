//! Support and extended-support analytics.
//!
//! The extended support of `x` adds to `supp(x)` the coordinates where `−∇h(x)ₖ` sits on the
//! boundary of `Iₖ`. At a minimizer it coincides with the active constraints of the dual box
//! problem at `ū = −∇h(x̄)`, and forward-backward iterates leave it only finitely often, at most
//! `‖x⁰ − x̄‖² / (ρ_sol² λ²)` times.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regularizers::SeparableRegularizer;
use crate::solver::{IterateTrace, Problem};

/// Default relative tolerance for boundary membership: `1e−8 · max(1, |endpoint|)`.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-8;

/// Sorted, duplicate-free set of 0-based coordinate indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self(indices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.binary_search(&k).is_ok()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        let mut it = other.0.iter();
        'outer: for k in &self.0 {
            for o in it.by_ref() {
                if o == k {
                    continue 'outer;
                }
                if o > k {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self::from_unsorted(v)
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Self::from_unsorted(iter.into_iter().collect())
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, "}}")
    }
}

/// Indices with `xₖ ≠ 0`. No magnitude threshold.
pub fn support(x: &[f64]) -> IndexSet {
    IndexSet(
        x.iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, _)| k)
            .collect(),
    )
}

fn on_boundary(t: f64, lo: f64, hi: f64, tol: f64) -> bool {
    let near = |e: f64| e.is_finite() && (t - e).abs() <= tol * e.abs().max(1.0);
    near(lo) || near(hi)
}

/// `supp(x) ∪ {k : −gradₖ ∈ bd Iₖ}` where boundary membership is tested to
/// `boundary_tol · max(1, |endpoint|)`. Infinite endpoints contribute nothing.
pub fn extended_support(
    x: &[f64],
    grad: &[f64],
    g: &SeparableRegularizer,
    boundary_tol: f64,
) -> Result<IndexSet> {
    check_dims(g, x.len())?;
    check_dims(g, grad.len())?;
    Ok(x.iter()
        .zip(grad)
        .enumerate()
        .filter(|(k, (xk, gk))| {
            let iv = g.interval(*k);
            **xk != 0.0 || on_boundary(-**gk, iv.lo(), iv.hi(), boundary_tol)
        })
        .map(|(k, _)| k)
        .collect())
}

/// Dual margin `ρ(u) = inf { dist(uₖ, bd Iₖ) : uₖ ∈ int Iₖ }`, `+∞` for an empty infimum.
pub fn rho(u: &[f64], g: &SeparableRegularizer) -> Result<f64> {
    rho_with_tolerance(u, g, 0.0)
}

/// As [`rho`], but coordinates within `boundary_tol · max(1, |endpoint|)` of an endpoint count as
/// boundary coordinates. With a tolerance of 0 this is the exact definition.
pub fn rho_with_tolerance(u: &[f64], g: &SeparableRegularizer, boundary_tol: f64) -> Result<f64> {
    check_dims(g, u.len())?;
    let mut best = f64::INFINITY;
    for (k, &uk) in u.iter().enumerate() {
        let iv = g.interval(k);
        if !iv.contains_interior(uk) || on_boundary(uk, iv.lo(), iv.hi(), boundary_tol) {
            continue;
        }
        best = best.min(iv.distance_to_boundary(uk));
    }
    Ok(best)
}

/// `dist0² / (ρ_sol² λ²)`, or 0 when `ρ_sol = +∞`.
pub fn identification_bound(rho_sol: f64, lambda: f64, dist0: f64) -> Result<f64> {
    if !(rho_sol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "rho_sol must be positive, got {rho_sol}"
        )));
    }
    if !(lambda > 0.0) || !(dist0 >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "identification bound needs lambda > 0 and dist0 >= 0 (got {lambda}, {dist0})"
        )));
    }
    if rho_sol.is_infinite() {
        return Ok(0.0);
    }
    Ok((dist0 / (rho_sol * lambda)).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identification {
    pub violations: usize,
    /// Smallest `N ≥ 1` with `supp(xⁿ) ⊆ esupp` for every recorded `n ≥ N`.
    pub identification_iteration: Option<usize>,
}

/// Counts iterations `n ≥ 1` with `supp(xⁿ) ⊄ esupp`.
pub fn identification_audit(trace: &IterateTrace, esupp: &IndexSet) -> Result<Identification> {
    if trace.record_every() != 1 {
        return Err(Error::SparseTrace {
            record_every: trace.record_every(),
        });
    }
    let supports = trace
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iteration, trace.support_at(i)));
    Ok(audit_supports(supports, esupp))
}

pub(crate) fn audit_supports<'a>(
    supports: impl Iterator<Item = (usize, &'a IndexSet)>,
    esupp: &IndexSet,
) -> Identification {
    let mut violations = 0;
    let mut last_violation: Option<usize> = None;
    let mut last_iteration = 0;
    for (n, s) in supports {
        if n == 0 {
            continue;
        }
        last_iteration = n;
        if !s.is_subset(esupp) {
            violations += 1;
            last_violation = Some(n);
        }
    }
    let identification_iteration = match last_violation {
        None => Some(1),
        Some(n) if n == last_iteration => None,
        Some(n) => Some(n + 1),
    };
    Identification {
        violations,
        identification_iteration,
    }
}

/// `ū ≈ −∇h(x)`.
pub fn dual_point(problem: &Problem, x: &[f64]) -> Result<Vec<f64>> {
    let mut u = problem.h().gradient(x)?;
    u.iter_mut().for_each(|v| *v = -*v);
    Ok(u)
}

/// `{k : dist(uₖ, finite endpoints of Iₖ) ≤ tol·max(1, |endpoint|)}`; requires `ψ ≡ 0`.
pub fn active_constraints(u: &[f64], g: &SeparableRegularizer, tol: f64) -> Result<IndexSet> {
    check_dims(g, u.len())?;
    if !g.is_penalty_free() {
        return Err(Error::NonZeroPenalty);
    }
    Ok(u.iter()
        .enumerate()
        .filter(|(k, uk)| {
            let iv = g.interval(*k);
            on_boundary(**uk, iv.lo(), iv.hi(), tol)
        })
        .map(|(k, _)| k)
        .collect())
}

/// `supp(x̄) = esupp(x̄)`, the implementable form of the weak qualification condition.
pub fn qualification_check(
    x: &[f64],
    grad: &[f64],
    g: &SeparableRegularizer,
    tol: f64,
) -> Result<bool> {
    if !g.all_differentiable() {
        return Err(Error::UndecidableQualification);
    }
    Ok(support(x) == extended_support(x, grad, g, tol)?)
}

fn check_dims(g: &SeparableRegularizer, got: usize) -> Result<()> {
    if g.len() == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: g.len(),
            got,
        })
    }
}

mod serde_extended_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "expected number or \"inf\", got {s}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub supp: IndexSet,
    pub esupp: IndexSet,
    /// `+∞` serializes as the string `"inf"`.
    #[serde(with = "serde_extended_real")]
    pub rho_sol: f64,
    pub identification_bound: f64,
    pub observed_violations: usize,
    pub identification_iteration: Option<usize>,
    pub qualification_holds: bool,
    /// Empty when some `ψₖ ≠ 0`, where the dual feasible set is not a box.
    pub active_constraints: IndexSet,
    pub dual_point: Vec<f64>,
    pub boundary_tol: f64,
}

impl SupportReport {
    /// `observed_violations ≤ ⌈bound⌉`.
    pub fn bound_holds(&self) -> bool {
        self.observed_violations as f64 <= self.identification_bound.ceil()
    }

    /// `active_constraints(ū) = esupp(x̄)`; vacuously true when `ψ ≢ 0`.
    pub fn paths_agree(&self, penalty_free: bool) -> bool {
        !penalty_free || self.active_constraints == self.esupp
    }
}

/// Full support analysis of a trace against a (polished) minimizer `x̄`.
///
/// `ρ_sol` is evaluated with the same boundary tolerance as `esupp`, so coordinates of `ū` that
/// sit on the boundary up to solver precision are not mistaken for interior ones.
pub fn analyze(
    problem: &Problem,
    trace: &IterateTrace,
    x_ref: &[f64],
    x0: &[f64],
    boundary_tol: f64,
) -> Result<SupportReport> {
    let g = problem.g();
    let grad = problem.h().gradient(x_ref)?;
    let u: Vec<f64> = grad.iter().map(|v| -v).collect();
    let supp = support(x_ref);
    let esupp = extended_support(x_ref, &grad, g, boundary_tol)?;
    let rho_sol = rho_with_tolerance(&u, g, boundary_tol)?;
    let dist0 = crate::operators::distance(x0, x_ref);
    let bound = identification_bound(rho_sol, trace.lambda(), dist0)?;
    let audit = identification_audit(trace, &esupp)?;
    let qualification_holds = if g.all_differentiable() {
        supp == esupp
    } else {
        false
    };
    let active = if g.is_penalty_free() {
        active_constraints(&u, g, boundary_tol)?
    } else {
        IndexSet::new()
    };
    Ok(SupportReport {
        supp,
        esupp,
        rho_sol,
        identification_bound: bound,
        observed_violations: audit.violations,
        identification_iteration: audit.identification_iteration,
        qualification_holds,
        active_constraints: active,
        dual_point: u,
        boundary_tol,
    })
}

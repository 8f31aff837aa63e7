//! Separable regularizers `g(x) = Σₖ ψₖ(xₖ) + σ_{Iₖ}(xₖ)`.
//!
//! Each coordinate carries a closed interval `Iₖ ⊇ [−ω, ω]` whose support function gives the
//! weighted ℓ¹ part, and a scalar penalty `ψₖ` with `ψₖ(0) = 0 = ψₖ'(0)`. The proximal operator
//! factors coordinatewise as `prox_{λψₖ} ∘ soft_{λIₖ}`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

const SCALAR_PROX_TOL: f64 = 1e-13;
const SCALAR_PROX_MAX_ITER: usize = 200;

/// Closed interval `[lo, hi]` with `lo ≤ 0 ≤ hi`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// Proper interval containing 0. Rejects `(−∞, +∞)`; use [`Interval::real_line`] for that.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidInput("interval endpoint is NaN".into()));
        }
        if !(lo <= 0.0 && 0.0 <= hi && lo < hi) {
            return Err(Error::InvalidInput(format!(
                "interval [{lo}, {hi}] must satisfy lo <= 0 <= hi and lo < hi"
            )));
        }
        if lo.is_infinite() && hi.is_infinite() {
            return Err(Error::InvalidInput(
                "interval is the whole real line; use Interval::real_line explicitly".into(),
            ));
        }
        Ok(Self { lo, hi })
    }

    /// `(−∞, +∞)`. Its support function is the indicator of `{0}`.
    pub fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// `[−w, w]`.
    pub fn symmetric(w: f64) -> Result<Self> {
        Self::new(-w, w)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    pub fn contains_interior(&self, t: f64) -> bool {
        self.lo < t && t < self.hi
    }

    /// `λI = [λ·lo, λ·hi]`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            lo: lambda * self.lo,
            hi: lambda * self.hi,
        }
    }

    /// Support function `σ_I(t) = sup_{s ∈ I} t·s`.
    pub fn support_function(&self, t: f64) -> f64 {
        if t > 0.0 {
            t * self.hi
        } else if t < 0.0 {
            t * self.lo
        } else {
            0.0
        }
    }

    /// Soft-thresholder `soft_I = prox_{σ_I}`. Endpoints map to exactly 0.
    pub fn soft(&self, t: f64) -> f64 {
        if t < self.lo {
            t - self.lo
        } else if t > self.hi {
            t - self.hi
        } else {
            0.0
        }
    }

    pub fn project(&self, t: f64) -> f64 {
        t.clamp(self.lo, self.hi)
    }

    /// Distance from `t` to the finite endpoints; `+∞` when both endpoints are infinite.
    pub fn distance_to_boundary(&self, t: f64) -> f64 {
        let mut d = f64::INFINITY;
        if self.lo.is_finite() {
            d = d.min((t - self.lo).abs());
        }
        if self.hi.is_finite() {
            d = d.min((t - self.hi).abs());
        }
        d
    }
}

/// User-supplied scalar penalty. The prox oracle is trusted as exact.
pub trait CustomPenalty: Send + Sync {
    fn name(&self) -> String;

    /// `ψ(t)`, possibly `+∞`.
    fn value(&self, t: f64) -> f64;

    /// `prox_{λψ}(t)`.
    fn prox(&self, t: f64, lambda: f64) -> f64;

    /// Attests that ψ is differentiable on its domain.
    fn differentiable(&self) -> bool {
        false
    }
}

/// `ψ = δ_{[lo, hi]}` with `lo < 0 < hi`. Combined with an ℓ¹ interval its prox is
/// `clamp ∘ soft`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainBox {
    pub lo: f64,
    pub hi: f64,
}

impl CustomPenalty for DomainBox {
    fn name(&self) -> String {
        format!("box {} {}", self.lo, self.hi)
    }

    fn value(&self, t: f64) -> f64 {
        if self.lo <= t && t <= self.hi {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, t: f64, _lambda: f64) -> f64 {
        t.clamp(self.lo, self.hi)
    }
}

#[derive(Clone)]
pub enum ScalarPenalty {
    Zero,
    /// `t ↦ weight·|t|ᵖ/p`.
    Power {
        p: f64,
        weight: f64,
    },
    Custom(Arc<dyn CustomPenalty>),
}

impl fmt::Debug for ScalarPenalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Power { p, weight } => write!(f, "Power {{ p: {p}, weight: {weight} }}"),
            Self::Custom(c) => write!(f, "Custom({})", c.name()),
        }
    }
}

impl fmt::Display for ScalarPenalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "none"),
            Self::Power { p, weight } => write!(f, "power {p} {weight}"),
            Self::Custom(c) => write!(f, "custom {}", c.name()),
        }
    }
}

impl FromStr for ScalarPenalty {
    type Err = Error;

    /// Parses `none` or `power <p> <weight>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        match parts.as_slice() {
            ["none"] => Ok(Self::Zero),
            ["power", p, w] => {
                let p: f64 = p
                    .parse()
                    .map_err(|_| Error::Config(format!("bad exponent in penalty `{s}`")))?;
                let weight: f64 = w
                    .parse()
                    .map_err(|_| Error::Config(format!("bad weight in penalty `{s}`")))?;
                Self::power(p, weight)
            }
            _ => Err(Error::Config(format!(
                "penalty must be `none` or `power <p> <weight>`, got `{s}`"
            ))),
        }
    }
}

impl ScalarPenalty {
    pub fn power(p: f64, weight: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "power exponent must be > 1, got {p}"
            )));
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "power weight must be >= 0, got {weight}"
            )));
        }
        Ok(Self::Power { p, weight })
    }

    /// Wraps a custom penalty after checking `ψ(0) = 0` and one-sided difference quotients at 0.
    pub fn custom(penalty: Arc<dyn CustomPenalty>) -> Result<Self> {
        let at0 = penalty.value(0.0);
        if at0 != 0.0 {
            return Err(Error::InvalidInput(format!(
                "custom penalty `{}` has psi(0) = {at0}",
                penalty.name()
            )));
        }
        let step = 1e-8;
        let right = (penalty.value(step) - at0) / step;
        let left = (penalty.value(-step) - at0) / step;
        if !(right.abs() <= 1e-3 && left.abs() <= 1e-3) {
            return Err(Error::InvalidInput(format!(
                "custom penalty `{}` is not flat at 0 (difference quotients {left}, {right})",
                penalty.name()
            )));
        }
        Ok(Self::Custom(penalty))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Power { weight, .. } => *weight == 0.0,
            Self::Custom(_) => false,
        }
    }

    /// Whether ψ is known to be differentiable on its domain.
    pub fn is_differentiable(&self) -> bool {
        match self {
            Self::Zero | Self::Power { .. } => true,
            Self::Custom(c) => c.differentiable(),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Power { p, weight } => {
                if *weight == 0.0 {
                    0.0
                } else {
                    weight * t.abs().powf(*p) / p
                }
            }
            Self::Custom(c) => c.value(t),
        }
    }

    /// `prox_{λψ}(t)`.
    pub fn prox(&self, t: f64, lambda: f64) -> Result<f64> {
        match self {
            Self::Zero => Ok(t),
            Self::Power { p, weight } => prox_power_scalar(t, lambda, *p, *weight),
            Self::Custom(c) => Ok(c.prox(t, lambda)),
        }
    }
}

/// Unique minimizer of `s ↦ weight·λ·|s|ᵖ/p + ½(s − t)²`.
///
/// Closed forms for `p ∈ {2, 3}`; otherwise safeguarded Newton on the increasing residual
/// `s + λ·weight·s^{p−1} − |t|` over `[0, |t|]` with bisection fallback.
pub fn prox_power_scalar(t: f64, lambda: f64, p: f64, weight: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(p > 1.0) || !(weight >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "prox_power_scalar needs lambda > 0, p > 1, weight >= 0 (got {lambda}, {p}, {weight})"
        )));
    }
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite prox input {t}")));
    }
    if t == 0.0 || weight == 0.0 {
        return Ok(t);
    }
    let a = t.abs();
    let c = lambda * weight;
    let s = if p == 2.0 {
        a / (1.0 + c)
    } else if p == 3.0 {
        // Positive root of c·s² + s − a = 0 in cancellation-free form.
        2.0 * a / (1.0 + (1.0 + 4.0 * c * a).sqrt())
    } else {
        newton_bisection(a, c, p)?
    };
    Ok(s.copysign(t))
}

fn newton_bisection(a: f64, c: f64, p: f64) -> Result<f64> {
    let residual = |s: f64| s + c * s.powf(p - 1.0) - a;
    let tol = SCALAR_PROX_TOL * a.max(1.0);
    let (mut lo, mut hi) = (0.0, a);
    // Fixed-point guess; lies in (0, a].
    let mut s = a / (1.0 + c * a.powf(p - 2.0));
    if !(s > 0.0 && s <= a) {
        s = 0.5 * a;
    }
    for _ in 0..SCALAR_PROX_MAX_ITER {
        let r = residual(s);
        if r == 0.0 {
            return Ok(s);
        }
        if r > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let slope = 1.0 + c * (p - 1.0) * s.powf(p - 2.0);
        let mut next = s - r / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= tol || hi - lo <= tol {
            return Ok(next);
        }
        s = next;
    }
    Err(Error::NotConverged {
        what: "scalar power prox",
        iterations: SCALAR_PROX_MAX_ITER,
    })
}

/// Coordinatewise `(Iₖ, ψₖ)` pairs sharing a global `ω` with `[−ω, ω] ⊆ Iₖ`.
#[derive(Debug, Clone)]
pub struct SeparableRegularizer {
    omega: f64,
    intervals: Vec<Interval>,
    penalties: Vec<ScalarPenalty>,
}

impl SeparableRegularizer {
    pub fn new(
        omega: f64,
        intervals: Vec<Interval>,
        penalties: Vec<ScalarPenalty>,
    ) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "omega must be positive, got {omega}"
            )));
        }
        if intervals.is_empty() {
            return Err(Error::InvalidInput("regularizer has no coordinates".into()));
        }
        if intervals.len() != penalties.len() {
            return Err(Error::DimensionMismatch {
                expected: intervals.len(),
                got: penalties.len(),
            });
        }
        for (k, iv) in intervals.iter().enumerate() {
            if !(iv.lo <= -omega && iv.hi >= omega) {
                return Err(Error::InvalidInput(format!(
                    "interval [{}, {}] at coordinate {k} does not contain [-{omega}, {omega}]",
                    iv.lo, iv.hi
                )));
            }
        }
        Ok(Self {
            omega,
            intervals,
            penalties,
        })
    }

    /// Same interval and penalty on all `n` coordinates with `ω = min(−lo, hi)`.
    pub fn uniform(n: usize, interval: Interval, penalty: ScalarPenalty) -> Result<Self> {
        let omega = (-interval.lo).min(interval.hi);
        Self::new(omega, vec![interval; n], vec![penalty; n])
    }

    /// `‖·‖₁` on `n` coordinates.
    pub fn l1(n: usize) -> Self {
        Self::uniform(n, Interval::symmetric(1.0).unwrap(), ScalarPenalty::Zero).unwrap()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn interval(&self, k: usize) -> &Interval {
        &self.intervals[k]
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn penalty(&self, k: usize) -> &ScalarPenalty {
        &self.penalties[k]
    }

    pub fn penalties(&self) -> &[ScalarPenalty] {
        &self.penalties
    }

    pub fn is_penalty_free(&self) -> bool {
        self.penalties.iter().all(ScalarPenalty::is_zero)
    }

    pub fn all_bounded(&self) -> bool {
        self.intervals.iter().all(Interval::is_bounded)
    }

    pub fn all_differentiable(&self) -> bool {
        self.penalties.iter().all(ScalarPenalty::is_differentiable)
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got == self.len() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.len(),
                got,
            })
        }
    }

    /// `prox_{λg}(x)` computed as `prox_{λψₖ}(soft_{λIₖ}(xₖ))` per coordinate.
    pub fn prox(&self, x: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.prox_into(x, lambda, &mut out)?;
        Ok(out)
    }

    pub fn prox_into(&self, x: &[f64], lambda: f64, out: &mut [f64]) -> Result<()> {
        self.check_len(x.len())?;
        self.check_len(out.len())?;
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!(
                "prox step must be positive, got {lambda}"
            )));
        }
        for (k, (o, &xk)) in out.iter_mut().zip(x).enumerate() {
            let shrunk = self.intervals[k].scaled(lambda).soft(xk);
            *o = if shrunk == 0.0 {
                0.0
            } else {
                self.penalties[k]
                    .prox(shrunk, lambda)
                    .map_err(|_| Error::ScalarSolve {
                        coordinate: k,
                        input: shrunk,
                    })?
            };
        }
        Ok(())
    }

    /// `g(x)`; `+∞` propagates.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x.len())?;
        Ok(x.iter()
            .enumerate()
            .map(|(k, &t)| self.intervals[k].support_function(t) + self.penalties[k].value(t))
            .sum())
    }

    /// `u ∈ ⊕ₖ [loₖ − tol, hiₖ + tol]`. Only meaningful for `ψ ≡ 0`, where `g*` is the indicator
    /// of that box.
    pub fn dual_feasible(&self, u: &[f64], tol: f64) -> Result<bool> {
        self.check_len(u.len())?;
        if !self.is_penalty_free() {
            return Err(Error::NonZeroPenalty);
        }
        Ok(u.iter()
            .zip(&self.intervals)
            .all(|(&uk, iv)| uk >= iv.lo - tol && uk <= iv.hi + tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditioning::{bisect_root, brute_force_scalar_min};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(0.5, 1.0).is_err());
        assert!(Interval::new(-1.0, -0.5).is_err());
        assert!(Interval::new(0.0, 0.0).is_err());
        assert!(Interval::new(f64::NEG_INFINITY, f64::INFINITY).is_err());
        assert!(Interval::new(-1.0, f64::INFINITY).is_ok());
        assert!(
            SeparableRegularizer::new(1.0, vec![iv(-0.5, 2.0)], vec![ScalarPenalty::Zero]).is_err()
        );
    }

    #[test]
    fn support_function_examples() {
        assert_eq!(iv(-1.0, 1.0).support_function(0.5), 0.5);
        assert_eq!(iv(-1.0, 3.0).support_function(-2.0), 2.0);
        assert_eq!(iv(-1.0, f64::INFINITY).support_function(1.0), f64::INFINITY);
        assert_eq!(Interval::real_line().support_function(0.0), 0.0);
    }

    #[test]
    fn soft_and_project_examples() {
        assert_eq!(iv(-1.0, 1.0).soft(2.0), 1.0);
        assert_eq!(iv(-1.0, 1.0).soft(1.0), 0.0);
        assert_eq!(iv(-1.0, 1.0).soft(-1.0), 0.0);
        assert_eq!(iv(-1.0, 2.0).soft(-3.0), -2.0);
        assert_eq!(iv(-1.0, 1.0).project(2.0), 1.0);
        assert_eq!(iv(-1.0, 1.0).project(0.3), 0.3);
        assert_eq!(iv(-1.0, 1.0).project(-5.0), -1.0);
    }

    #[test]
    fn power_prox_examples() {
        assert_eq!(prox_power_scalar(3.0, 1.0, 2.0, 1.0).unwrap(), 1.5);
        for p in [4.0 / 3.0, 1.5, 2.0, 3.0, 4.0, 2.7] {
            assert_eq!(prox_power_scalar(0.0, 0.7, p, 1.0).unwrap(), 0.0);
        }
        // s³ + s = 2 by bisection on [0, 2].
        let root = bisect_root(|s| s * s * s + s - 2.0, 0.0, 2.0, 1e-12);
        let s = prox_power_scalar(2.0, 1.0, 4.0, 1.0).unwrap();
        assert!((s - root).abs() < 1e-11);
        assert!((s - 1.0).abs() < 1e-12);
        let s = prox_power_scalar(-2.0, 1.0, 4.0, 1.0).unwrap();
        assert!((s + root).abs() < 1e-11);
    }

    #[test]
    fn power_prox_rejects_bad_parameters() {
        assert!(prox_power_scalar(1.0, 0.0, 2.0, 1.0).is_err());
        assert!(prox_power_scalar(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(prox_power_scalar(f64::NAN, 1.0, 4.0, 1.0).is_err());
        assert!(ScalarPenalty::power(0.5, 1.0).is_err());
    }

    #[test]
    fn separable_prox_examples() {
        let g = SeparableRegularizer::l1(3);
        assert_eq!(
            g.prox(&[3.0, 0.5, -2.0], 1.0).unwrap(),
            vec![2.0, 0.0, -1.0]
        );

        let g = SeparableRegularizer::uniform(
            1,
            iv(-1.0, 1.0),
            ScalarPenalty::power(2.0, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(g.prox(&[3.0], 1.0).unwrap(), vec![1.0]);
        let (argmin, _) = brute_force_scalar_min(
            |s: f64| s.abs() + s * s / 2.0 + 0.5 * (s - 3.0).powi(2),
            -5.0,
            5.0,
            1e-10,
        );
        assert!((argmin - 1.0).abs() < 1e-6);

        let g = SeparableRegularizer::uniform(
            3,
            iv(-1.0, 2.0),
            ScalarPenalty::power(4.0, 3.0).unwrap(),
        )
        .unwrap();
        // λI = [−0.5, 1]: the first two are thresholded, the third shrinks to s + 1.5s³ = 1.
        let out = g.prox(&[-0.5, 1.0, 2.0], 0.5).unwrap();
        assert_eq!(&out[..2], &[0.0, 0.0]);
        assert!((out[2] + 1.5 * out[2].powi(3) - 1.0).abs() < 1e-12);
        assert!(matches!(
            g.prox(&[1.0], 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn g_value_examples() {
        let g = SeparableRegularizer::l1(2);
        assert_eq!(g.value(&[0.5, 0.0]).unwrap(), 0.5);
        assert_eq!(g.value(&[0.0, 0.0]).unwrap(), 0.0);
        let g = SeparableRegularizer::uniform(
            2,
            iv(-1.0, 1.0),
            ScalarPenalty::power(2.0, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(g.value(&[2.0, 0.0]).unwrap(), 4.0);
        let g =
            SeparableRegularizer::uniform(1, iv(-1.0, f64::INFINITY), ScalarPenalty::Zero).unwrap();
        assert_eq!(g.value(&[1.0]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn dual_feasibility_examples() {
        let g = SeparableRegularizer::l1(2);
        assert!(g.dual_feasible(&[1.0, -1.0], 0.0).unwrap());
        assert!(!g.dual_feasible(&[1.5, 0.0], 1e-9).unwrap());
        assert!(g.dual_feasible(&[0.0, 0.0], 0.0).unwrap());
        let g = SeparableRegularizer::uniform(
            2,
            iv(-1.0, 1.0),
            ScalarPenalty::power(2.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            g.dual_feasible(&[0.0, 0.0], 0.0),
            Err(Error::NonZeroPenalty)
        ));
    }

    #[test]
    fn custom_penalty_checks_flatness() {
        struct Abs;
        impl CustomPenalty for Abs {
            fn name(&self) -> String {
                "abs".into()
            }
            fn value(&self, t: f64) -> f64 {
                t.abs()
            }
            fn prox(&self, t: f64, lambda: f64) -> f64 {
                iv(-lambda, lambda).soft(t)
            }
        }
        assert!(ScalarPenalty::custom(Arc::new(Abs)).is_err());
        let boxed = ScalarPenalty::custom(Arc::new(DomainBox { lo: -0.5, hi: 0.75 })).unwrap();
        let g = SeparableRegularizer::uniform(3, iv(-1.0, 1.0), boxed).unwrap();
        assert_eq!(
            g.prox(&[3.0, -3.0, 0.2], 1.0).unwrap(),
            vec![0.75, -0.5, 0.0]
        );
        assert!(!g.all_differentiable());
    }

    #[test]
    fn penalty_spec_parsing() {
        assert!(matches!(
            "none".parse::<ScalarPenalty>().unwrap(),
            ScalarPenalty::Zero
        ));
        match "power 4 0.5".parse::<ScalarPenalty>().unwrap() {
            ScalarPenalty::Power { p, weight } => assert_eq!((p, weight), (4.0, 0.5)),
            other => panic!("unexpected {other:?}"),
        }
        assert!("power 4".parse::<ScalarPenalty>().is_err());
        assert!("lasso".parse::<ScalarPenalty>().is_err());
        let round = ScalarPenalty::power(1.5, 2.0).unwrap().to_string();
        assert!(matches!(
            round.parse::<ScalarPenalty>().unwrap(),
            ScalarPenalty::Power { .. }
        ));
    }

    fn random_interval(rng: &mut ChaCha8Rng) -> Interval {
        let lo = -rng.random_range(0.05..3.0);
        let hi = rng.random_range(0.05..3.0);
        match rng.random_range(0..10) {
            0 => iv(f64::NEG_INFINITY, hi),
            1 => iv(lo, f64::INFINITY),
            _ => iv(lo, hi),
        }
    }

    #[test]
    fn prox_zero_characterization() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ps = [4.0 / 3.0, 1.5, 2.0, 3.0, 4.0, 2.7];
        for _ in 0..100_000 {
            let interval = random_interval(&mut rng);
            let lambda = rng.random_range(0.05..2.0);
            let penalty = if rng.random_bool(0.3) {
                ScalarPenalty::Zero
            } else {
                ScalarPenalty::power(
                    ps[rng.random_range(0..ps.len())],
                    rng.random_range(0.0..3.0),
                )
                .unwrap()
            };
            let g = SeparableRegularizer::uniform(1, interval, penalty).unwrap();
            // Hit the endpoints exactly now and then.
            let scaled = interval.scaled(lambda);
            let x = match rng.random_range(0..20) {
                0 if scaled.lo().is_finite() => scaled.lo(),
                1 if scaled.hi().is_finite() => scaled.hi(),
                _ => rng.random_range(-8.0..8.0),
            };
            let out = g.prox(&[x], lambda).unwrap()[0];
            assert_eq!(
                out == 0.0,
                scaled.contains(x),
                "x={x} lambda={lambda} {interval:?}"
            );
        }
    }

    #[test]
    fn soft_is_firmly_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100_000 {
            let i = random_interval(&mut rng);
            let a = rng.random_range(-10.0..10.0);
            let b = rng.random_range(-10.0..10.0);
            let (sa, sb) = (i.soft(a), i.soft(b));
            let lhs = (sa - sb).powi(2) + ((a - sa) - (b - sb)).powi(2);
            assert!(lhs <= (a - b).powi(2) + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn power_prox_is_nonexpansive_and_shrinks(
            a in -20.0f64..20.0,
            b in -20.0f64..20.0,
            lambda in 0.01f64..5.0,
            p in prop::sample::select(vec![4.0 / 3.0, 1.5, 2.0, 3.0, 4.0, 2.7, 1.1, 6.0]),
            weight in 0.0f64..4.0,
        ) {
            let pa = prox_power_scalar(a, lambda, p, weight).unwrap();
            let pb = prox_power_scalar(b, lambda, p, weight).unwrap();
            prop_assert!((pa - pb).abs() <= (a - b).abs() + 1e-10);
            prop_assert!(pa.abs() <= a.abs());
            prop_assert!(pa == 0.0 || pa.signum() == a.signum());
        }

        #[test]
        fn moreau_decomposition(
            t in -1e6f64..1e6,
            lo in -10.0f64..-1e-3,
            hi in 1e-3f64..10.0,
        ) {
            let i = iv(lo, hi);
            let sum = i.soft(t) + i.project(t);
            prop_assert!((sum - t).abs() <= f64::EPSILON * t.abs());
        }

        #[test]
        fn scale_identity_without_penalty(
            x in prop::collection::vec(-10.0f64..10.0, 1..6),
            lambda in 0.01f64..4.0,
            lo in -3.0f64..-0.1,
            hi in 0.1f64..3.0,
        ) {
            let i = iv(lo, hi);
            let g = SeparableRegularizer::uniform(x.len(), i, ScalarPenalty::Zero).unwrap();
            let out = g.prox(&x, lambda).unwrap();
            for (o, &xk) in out.iter().zip(&x) {
                let via_projection = xk - lambda * i.project(xk / lambda);
                prop_assert!((o - via_projection).abs() <= 1e-14 * xk.abs().max(1.0));
            }
        }
    }
}

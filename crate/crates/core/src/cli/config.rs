//! Experiment configuration, stored as TOML.
//!
//! ```toml
//! [problem]
//! source = "synthetic"        # "builtin" | "files" | "synthetic"
//! m = 20
//! n = 50
//! seed = 7
//! scale = 1.0
//!
//! [regularizer]
//! interval = [-1.0, 1.0]      # default Iₖ; `inf` / `-inf` allowed
//! penalty = "none"            # or "power <p> <weight>"
//! overrides = [{ index = 3, interval = [-2.0, 1.0] }]
//!
//! [solver]
//! step = 0.5                  # default 1/L
//! max_iter = 200000
//! residual_tol = 1e-10
//! record_every = 1
//! x0 = [1.0]                  # default zeros
//!
//! [analysis]
//! support_audit = true
//! rate_fit = true
//! window_fraction = 0.5
//! gamma = { delta = 0.1, r = 1.0, p = 2.0, samples = 1000, seed = 1 }
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conditioning::GammaSpec;
use crate::error::{Error, Result};
use crate::regularizers::{Interval, ScalarPenalty, SeparableRegularizer};
use crate::solver::{SolverConfig, DEFAULT_MAX_ITER, DEFAULT_RESIDUAL_TOL};
use crate::support::DEFAULT_BOUNDARY_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    /// `g = ‖·‖₁` on ℝ², `h(x) = (x₁ − x₂ − 1)²`; the qualification condition holds.
    ExCq,
    /// `g = |·|` on ℝ, `h(x) = (x − 1)²/2`; the qualification condition fails.
    ExNocq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemSource {
    Builtin {
        name: Builtin,
    },
    Files {
        matrix: PathBuf,
        y: PathBuf,
        /// Overrides the power-iteration estimate of `‖A‖²`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
    },
    Synthetic {
        m: usize,
        n: usize,
        seed: u64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalOverride {
    pub index: usize,
    pub interval: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizerSpec {
    /// Defaults to the largest ω with `[−ω, ω]` inside every interval.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub interval: [f64; 2],
    pub penalty: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<IntervalOverride>,
}

impl Default for RegularizerSpec {
    fn default() -> Self {
        Self {
            omega: None,
            interval: [-1.0, 1.0],
            penalty: "none".into(),
            overrides: Vec::new(),
        }
    }
}

impl RegularizerSpec {
    pub fn penalty(&self) -> Result<ScalarPenalty> {
        self.penalty.parse()
    }

    pub fn build(&self, n: usize) -> Result<SeparableRegularizer> {
        let default = Interval::new(self.interval[0], self.interval[1])?;
        let mut intervals = vec![default; n];
        for o in &self.overrides {
            if o.index >= n {
                return Err(Error::Config(format!(
                    "interval override index {} out of range for dimension {n}",
                    o.index
                )));
            }
            intervals[o.index] = Interval::new(o.interval[0], o.interval[1])?;
        }
        let omega = self.omega.unwrap_or_else(|| {
            intervals
                .iter()
                .map(|i| (-i.lo()).min(i.hi()))
                .fold(f64::INFINITY, f64::min)
        });
        SeparableRegularizer::new(omega, intervals, vec![self.penalty()?; n])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    pub max_iter: usize,
    pub residual_tol: f64,
    pub record_every: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            step: None,
            max_iter: DEFAULT_MAX_ITER,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            record_every: 1,
            x0: None,
        }
    }
}

impl SolverSpec {
    pub fn to_config(&self, default_x0: Option<Vec<f64>>) -> SolverConfig {
        SolverConfig {
            step: self.step,
            max_iter: self.max_iter,
            residual_tol: self.residual_tol,
            record_every: self.record_every,
            x0: self.x0.clone().or(default_x0),
            keep_iterates: self.record_every == 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSpec {
    pub support_audit: bool,
    pub rate_fit: bool,
    pub window_fraction: f64,
    pub boundary_tol: f64,
    pub polish_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaSpec>,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            support_audit: true,
            rate_fit: true,
            window_fraction: 0.5,
            boundary_tol: DEFAULT_BOUNDARY_TOL,
            polish_tol: 1e-12,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    #[serde(default)]
    pub regularizer: RegularizerSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    /// Parses and checks field values; referenced files are checked by [`Self::validate`] once
    /// paths are resolved.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate_fields()?;
        Ok(cfg)
    }

    /// Loads a TOML config, or the `config_toml` echo inside a run summary JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let parsed = if path.extension().and_then(|e| e.to_str()) == Some("json") {
            let summary: serde_json::Value = serde_json::from_str(&text)?;
            let echoed = summary
                .get("config_toml")
                .and_then(|v| v.as_str())
                .ok_or_else(|| {
                    Error::Config(format!("{} has no config_toml echo", path.display()))
                })?;
            Self::from_toml_str(echoed)
        } else {
            Self::from_toml_str(&text)
        };
        parsed.map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Resolves relative file paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ProblemSource::Files { matrix, y, .. } = &mut self.problem {
            fix(matrix);
            fix(y);
        }
        fix(&mut self.output.dir);
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_fields()?;
        if let ProblemSource::Files { matrix, y, .. } = &self.problem {
            for p in [matrix, y] {
                if !p.exists() {
                    return Err(Error::Config(format!(
                        "file {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    fn validate_fields(&self) -> Result<()> {
        match &self.problem {
            ProblemSource::Synthetic { m, n, scale, .. } => {
                if *m == 0 || *n == 0 {
                    return Err(Error::Config("synthetic m and n must be at least 1".into()));
                }
                if !(*scale > 0.0) {
                    return Err(Error::Config("synthetic scale must be positive".into()));
                }
            }
            ProblemSource::Files { lipschitz, .. } => {
                if lipschitz.is_some_and(|l| !(l > 0.0)) {
                    return Err(Error::Config("files lipschitz must be positive".into()));
                }
            }
            ProblemSource::Builtin { .. } => {}
        }
        self.regularizer.penalty()?;
        if self.solver.record_every == 0 {
            return Err(Error::Config(
                "solver.record_every must be at least 1".into(),
            ));
        }
        let wf = self.analysis.window_fraction;
        if !(wf > 0.0 && wf <= 1.0) {
            return Err(Error::Config(
                "analysis.window_fraction must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_builtin() {
        let cfg = ExperimentConfig::from_toml_str(
            "[problem]\nsource = \"builtin\"\nname = \"ex_nocq\"\n[solver]\nstep = 0.5\n",
        )
        .unwrap();
        assert_eq!(
            cfg.problem,
            ProblemSource::Builtin {
                name: Builtin::ExNocq
            }
        );
        assert_eq!(cfg.solver.step, Some(0.5));
        assert_eq!(cfg.regularizer.interval, [-1.0, 1.0]);
    }

    #[test]
    fn regularizer_overrides_and_infinite_endpoints() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            [problem]
            source = "synthetic"
            m = 3
            n = 4
            seed = 1
            [regularizer]
            interval = [-1.0, inf]
            penalty = "power 4 0.5"
            overrides = [{ index = 2, interval = [-2.0, 0.5] }]
            "#,
        )
        .unwrap();
        let g = cfg.regularizer.build(4).unwrap();
        assert_eq!(g.interval(0).hi(), f64::INFINITY);
        assert_eq!(g.interval(2).lo(), -2.0);
        assert_eq!(g.omega(), 0.5);
        assert!(!g.is_penalty_free());
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_invalid_configs() {
        // synthetic without a seed
        assert!(ExperimentConfig::from_toml_str(
            "[problem]\nsource = \"synthetic\"\nm = 2\nn = 2\n"
        )
        .is_err());
        assert!(ExperimentConfig::from_toml_str("[problem]\nsource = \"nowhere\"\n").is_err());
        let missing = ExperimentConfig::from_toml_str(
            "[problem]\nsource = \"files\"\nmatrix = \"/no/such/A.mtx\"\ny = \"/no/such/y.csv\"\n",
        )
        .unwrap();
        assert!(missing.validate().is_err());
        assert!(ExperimentConfig::from_toml_str(
            "[problem]\nsource = \"builtin\"\nname = \"ex_cq\"\n[regularizer]\npenalty = \"l2\"\n"
        )
        .is_err());
        assert!(ExperimentConfig::from_toml_str(
            "[problem]\nsource = \"builtin\"\nname = \"ex_cq\"\n[solver]\nbogus = 1\n"
        )
        .is_err());
        let cfg = ExperimentConfig::from_toml_str(
            "[problem]\nsource = \"builtin\"\nname = \"ex_cq\"\n[regularizer]\noverrides = [{ index = 5, interval = [-1.0, 1.0] }]\n",
        )
        .unwrap();
        assert!(cfg.regularizer.build(2).is_err());
    }
}

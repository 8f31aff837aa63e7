//! Scalar prox tables `t ↦ prox_{λgₖ}(t)`.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::regularizers::{DomainBox, Interval, ScalarPenalty, SeparableRegularizer};

/// Parses `none`, `power <p> <weight>`, or `box <lo> <hi>` (the indicator of `[lo, hi]`).
pub fn parse_penalty_spec(spec: &str) -> Result<ScalarPenalty> {
    let parts: Vec<&str> = spec.split_whitespace().collect();
    if let ["box", lo, hi] = parts.as_slice() {
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad bound `{s}` in `{spec}`")))
        };
        let (lo, hi) = (num(lo)?, num(hi)?);
        if !(lo < 0.0 && 0.0 < hi) {
            return Err(Error::Config(format!(
                "box needs lo < 0 < hi, got `{spec}`"
            )));
        }
        return ScalarPenalty::custom(Arc::new(DomainBox { lo, hi }));
    }
    spec.parse()
}

#[derive(Debug, Clone)]
pub struct GallerySpec {
    pub interval: Interval,
    pub penalty: ScalarPenalty,
    pub lambda: f64,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

/// Evaluates the prox on `steps` equispaced points of `[lo, hi]`.
pub fn prox_gallery(spec: &GallerySpec) -> Result<Vec<(f64, f64)>> {
    if spec.steps < 2 || !(spec.lo < spec.hi) {
        return Err(Error::InvalidInput(format!(
            "gallery needs steps ≥ 2 and lo < hi (got {}, [{}, {}])",
            spec.steps, spec.lo, spec.hi
        )));
    }
    let omega = (-spec.interval.lo()).min(spec.interval.hi());
    let g = SeparableRegularizer::new(omega, vec![spec.interval], vec![spec.penalty.clone()])?;
    let h = (spec.hi - spec.lo) / (spec.steps - 1) as f64;
    (0..spec.steps)
        .map(|i| {
            let t = if i + 1 == spec.steps {
                spec.hi
            } else {
                spec.lo + h * i as f64
            };
            Ok((t, g.prox(&[t], spec.lambda)?[0]))
        })
        .collect()
}

/// Writes the gallery as `t,prox` CSV.
pub fn emit_prox_gallery(spec: &GallerySpec, out: &mut dyn Write) -> Result<()> {
    let rows = prox_gallery(spec)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "prox"])?;
    for (t, p) in rows {
        w.write_record([t.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(penalty: &str) -> GallerySpec {
        GallerySpec {
            interval: Interval::symmetric(1.0).unwrap(),
            penalty: parse_penalty_spec(penalty).unwrap(),
            lambda: 1.0,
            lo: -3.0,
            hi: 3.0,
            steps: 7,
        }
    }

    #[test]
    fn absolute_value_gallery() {
        let rows = prox_gallery(&spec("none")).unwrap();
        let got: Vec<f64> = rows.iter().map(|r| r.1).collect();
        assert_eq!(got, vec![-2.0, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn box_gallery_clamps() {
        let rows = prox_gallery(&spec("box -0.5 1.5")).unwrap();
        let got: Vec<f64> = rows.iter().map(|r| r.1).collect();
        assert_eq!(got, vec![-0.5, -0.5, 0.0, 0.0, 0.0, 1.0, 1.5]);
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        emit_prox_gallery(&spec("power 2 1"), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,prox"));
        assert_eq!(lines.next(), Some("-3,-1"));
        assert_eq!(text.lines().count(), 8);
    }

    #[test]
    fn bad_specs() {
        assert!(parse_penalty_spec("box 1 2").is_err());
        assert!(parse_penalty_spec("power 0.5 1").is_err());
        assert!(parse_penalty_spec("l1").is_err());
        let mut s = spec("none");
        s.steps = 1;
        assert!(prox_gallery(&s).is_err());
    }
}

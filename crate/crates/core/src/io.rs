//! File formats: Matrix Market and CSV ingestion of dense data, instance export, and the trace
//! CSV.
//!
//! Trace CSV columns: `n,f_gap,residual,supp_size,dist_to_ref,support`, where `support` lists
//! 0-based indices separated by `;` and `dist_to_ref` is empty when no reference was attached.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::operators::DenseMatrix;
use crate::solver::{IterateTrace, TraceRecord};
use crate::support::IndexSet;

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("not a number: `{tok}`")))
}

fn parse_usize(path: &Path, line: usize, tok: &str) -> Result<usize> {
    tok.trim()
        .parse::<usize>()
        .map_err(|_| parse_err(path, line, format!("not an index: `{tok}`")))
}

/// Reads a real general Matrix Market file in `array` or `coordinate` format into a dense matrix.
pub fn read_matrix_market(path: &Path) -> Result<DenseMatrix> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = match lines.next() {
        Some((i, l)) => (i, l?),
        None => return Err(parse_err(path, 1, "empty file")),
    };
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(
            path,
            hline,
            "missing `%%MatrixMarket matrix` header",
        ));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => {
            return Err(parse_err(
                path,
                hline,
                format!("unsupported format `{other}`"),
            ))
        }
    };
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(parse_err(
            path,
            hline,
            format!("unsupported field `{}`", tokens[3]),
        ));
    }
    if tokens[4] != "general" {
        return Err(parse_err(
            path,
            hline,
            format!("unsupported symmetry `{}`", tokens[4]),
        ));
    }

    let mut body = Vec::new();
    for (i, l) in lines {
        let l = l?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        body.push((i, t.to_string()));
    }
    let mut it = body.into_iter();
    let (sline, size) = it
        .next()
        .ok_or_else(|| parse_err(path, hline, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    let expected_dims = if coordinate { 3 } else { 2 };
    if dims.len() != expected_dims {
        return Err(parse_err(path, sline, "malformed size line"));
    }
    let rows = parse_usize(path, sline, dims[0])?;
    let cols = parse_usize(path, sline, dims[1])?;
    let mut data = vec![0.0; rows * cols];
    if coordinate {
        let nnz = parse_usize(path, sline, dims[2])?;
        let mut count = 0;
        for (i, entry) in it {
            let parts: Vec<&str> = entry.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(parse_err(path, i, "coordinate entry needs `row col value`"));
            }
            let r = parse_usize(path, i, parts[0])?;
            let c = parse_usize(path, i, parts[1])?;
            if r == 0 || c == 0 || r > rows || c > cols {
                return Err(parse_err(path, i, format!("index ({r}, {c}) out of range")));
            }
            data[(r - 1) * cols + (c - 1)] += parse_f64(path, i, parts[2])?;
            count += 1;
        }
        if count != nnz {
            return Err(parse_err(
                path,
                sline,
                format!("expected {nnz} entries, found {count}"),
            ));
        }
    } else {
        // Array format is column-major.
        let mut count = 0;
        for (i, entry) in it {
            for tok in entry.split_whitespace() {
                if count >= rows * cols {
                    return Err(parse_err(path, i, "too many entries"));
                }
                let (r, c) = (count % rows, count / rows);
                data[r * cols + c] = parse_f64(path, i, tok)?;
                count += 1;
            }
        }
        if count != rows * cols {
            return Err(parse_err(
                path,
                sline,
                format!("expected {} entries, found {count}", rows * cols),
            ));
        }
    }
    DenseMatrix::new(rows, cols, data)
}

/// Writes a dense matrix in Matrix Market `array real general` format.
pub fn write_matrix_market(path: &Path, a: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.rows(), a.cols())?;
    for c in 0..a.cols() {
        for r in 0..a.rows() {
            writeln!(w, "{:e}", a.get(r, c))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Headerless numeric CSV, one matrix row per line.
pub fn read_csv_matrix(path: &Path) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        let row = rec
            .iter()
            .map(|t| parse_f64(path, line, t))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "empty matrix"));
    }
    DenseMatrix::from_rows(&rows)
}

/// Dispatches on extension: `.mtx` is Matrix Market, anything else headerless CSV.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("mtx") => read_matrix_market(path),
        _ => read_csv_matrix(path),
    }
}

/// Single-column CSV vector.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.len() != 1 {
            return Err(parse_err(
                path,
                line,
                "vector file must have a single column",
            ));
        }
        out.push(parse_f64(path, line, &rec[0])?);
    }
    if out.is_empty() {
        return Err(parse_err(path, 1, "empty vector"));
    }
    Ok(out)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for x in v {
        writeln!(w, "{x:e}")?;
    }
    w.flush()?;
    Ok(())
}

fn format_support(s: &IndexSet) -> String {
    s.iter()
        .map(|k| k.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Writes the trace with `f_gap = f(xⁿ) − f_star`.
pub fn write_trace_csv(path: &Path, trace: &IterateTrace, f_star: f64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "n",
        "f_gap",
        "residual",
        "supp_size",
        "dist_to_ref",
        "support",
    ])?;
    for (i, r) in trace.records().iter().enumerate() {
        w.write_record([
            r.iteration.to_string(),
            format!("{:e}", r.objective - f_star),
            format!("{:e}", r.residual),
            r.support_size.to_string(),
            r.dist_to_ref.map(|d| format!("{d:e}")).unwrap_or_default(),
            format_support(trace.support_at(i)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace CSV back. Objectives are the stored gaps (relative to the export's `f_star`).
pub fn read_trace_csv(path: &Path, lambda: f64) -> Result<IterateTrace> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let expected = [
        "n",
        "f_gap",
        "residual",
        "supp_size",
        "dist_to_ref",
        "support",
    ];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(parse_err(
            path,
            1,
            format!("unexpected header, want {}", expected.join(",")),
        ));
    }
    let mut records = Vec::new();
    let mut supports = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i + 2, |p| p.line() as usize);
        let dist = if rec[4].is_empty() {
            None
        } else {
            Some(parse_f64(path, line, &rec[4])?)
        };
        let support = if rec[5].is_empty() {
            IndexSet::new()
        } else {
            rec[5]
                .split(';')
                .map(|t| parse_usize(path, line, t))
                .collect::<Result<IndexSet>>()?
        };
        records.push(TraceRecord {
            iteration: parse_usize(path, line, &rec[0])?,
            objective: parse_f64(path, line, &rec[1])?,
            residual: parse_f64(path, line, &rec[2])?,
            support_size: parse_usize(path, line, &rec[3])?,
            dist_to_ref: dist,
        });
        supports.push(support);
    }
    let record_every = match records.as_slice() {
        [a, b, ..] => b.iteration.saturating_sub(a.iteration).max(1),
        _ => 1,
    };
    IterateTrace::from_parts(lambda, record_every, records, supports)
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use sparsefb::cli::{
    audit_files, emit_prox_gallery, generate_synthetic, parse_penalty_spec, run_experiment,
    ExperimentConfig, GallerySpec,
};
use sparsefb::io::{write_matrix_market, write_vector};
use sparsefb::{Interval, Result, ScalarPenalty};

/// Caps the worker threads used for batch runs.
const THREADS_ENV: &str = "SPARSEFB_THREADS";

#[derive(Parser)]
#[command(
    name = "sparsefb",
    version,
    about = "Forward-backward solver with support and rate diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments from TOML configs (or the config echoed in a summary.json).
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Tabulate t ↦ prox(t) for `none`, `power <p> <w>` or `box <lo> <hi>`.
    Gallery {
        spec: String,
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 7)]
        steps: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Interval I as `lo,hi`.
        #[arg(long, default_value = "-1,1", allow_hyphen_values = true)]
        interval: String,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded synthetic instance as A.mtx, y.csv and x_true.csv.
    Gen {
        m: usize,
        n: usize,
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Re-audit a trace CSV against a support report JSON.
    Audit { trace: PathBuf, report: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { configs } => run_batch(&configs),
        Command::Gallery {
            spec,
            lo,
            hi,
            steps,
            lambda,
            interval,
            out,
        } => gallery(&spec, lo, hi, steps, lambda, &interval, out.as_deref()).map(|_| 0),
        Command::Gen {
            m,
            n,
            seed,
            scale,
            out,
        } => gen(m, n, seed, scale, &out).map(|_| 0),
        Command::Audit { trace, report } => audit(&trace, &report),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    // absolute, so the config echoed into summary.json resolves the same way on a rerun
    let base = std::path::absolute(path.parent().unwrap_or(Path::new(".")))?;
    cfg.resolve_paths(&base);
    cfg.validate()?;
    Ok(cfg)
}

fn run_one(path: &Path) -> Result<u8> {
    let cfg = load_config(path)?;
    let out = run_experiment(&cfg)?;
    let s = &out.summary;
    println!(
        "{}: {} after {} iterations (residual {:.3e}, {:.3}s), f* = {:.12}, {} -> {}",
        path.display(),
        if s.converged {
            "converged"
        } else {
            "not converged"
        },
        s.iterations,
        s.final_residual,
        out.wall_time.as_secs_f64(),
        s.f_star,
        out.output_dir.display(),
        if s.passed { "pass" } else { "FAIL" },
    );
    if s.truncation_warning {
        eprintln!(
            "warning: {}: support reaches the last coordinate; the truncation may be too short",
            path.display()
        );
    }
    Ok(out.exit_code() as u8)
}

fn run_batch(configs: &[PathBuf]) -> Result<u8> {
    if configs.len() == 1 {
        return run_one(&configs[0]);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| sparsefb::Error::Config(format!("thread pool: {e}")))?;
    let codes: Vec<u8> = pool.install(|| {
        configs
            .par_iter()
            .map(|p| {
                run_one(p).unwrap_or_else(|e| {
                    eprintln!("error: {}: {e}", p.display());
                    2
                })
            })
            .collect()
    });
    Ok(codes.into_iter().max().unwrap_or(0))
}

fn gallery(
    spec: &str,
    lo: f64,
    hi: f64,
    steps: usize,
    lambda: f64,
    interval: &str,
    out: Option<&Path>,
) -> Result<()> {
    let bounds: Vec<f64> = interval
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| sparsefb::Error::Config(format!("bad interval `{interval}`")))?;
    let [ilo, ihi] = bounds[..] else {
        return Err(sparsefb::Error::Config(format!(
            "interval needs two bounds, got `{interval}`"
        )));
    };
    let spec = GallerySpec {
        interval: Interval::new(ilo, ihi)?,
        penalty: parse_penalty_spec(spec)?,
        lambda,
        lo,
        hi,
        steps,
    };
    match out {
        Some(path) => emit_prox_gallery(&spec, &mut std::fs::File::create(path)?),
        None => emit_prox_gallery(&spec, &mut std::io::stdout().lock()),
    }
}

fn gen(m: usize, n: usize, seed: u64, scale: f64, out: &Path) -> Result<()> {
    let inst = generate_synthetic(m, n, seed, scale, ScalarPenalty::Zero)?;
    std::fs::create_dir_all(out)?;
    write_matrix_market(&out.join("A.mtx"), &inst.matrix)?;
    write_vector(&out.join("y.csv"), &inst.y)?;
    write_vector(&out.join("x_true.csv"), &inst.x_true)?;
    Ok(())
}

fn audit(trace: &Path, report: &Path) -> Result<u8> {
    let result = audit_files(trace, report)?;
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(if result.passed { 0 } else { 1 })
}

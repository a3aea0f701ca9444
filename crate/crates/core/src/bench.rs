//! Batch runs over a directory of instances, one results row per
//! (instance, algorithm) pair.
//!
//! Instances run on a rayon pool whose size can be capped with the
//! `CPDQS_THREADS` environment variable. Rows are collected, put in
//! (file name, algorithm) order and handed to a single CSV writer. A bad
//! instance produces an error row and never stops the batch.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::drivers::{multistart, Algorithm, MultistartPlan, SolverOptions};
use crate::error::{Error, Result};
use crate::io::benchmark::{import_benchmark, FormatHint};
use crate::io::canonical::instance_name;
use crate::io::results::{write_results, ResultRow};

pub const THREADS_ENV: &str = "CPDQS_THREADS";

/// File extensions picked up from a bench directory.
pub const INSTANCE_EXTENSIONS: [&str; 2] = ["cpdqs", "wcsp"];

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub algorithms: Vec<Algorithm>,
    pub options: SolverOptions,
    pub restarts: usize,
    pub seed: u64,
    pub format: FormatHint,
    /// Worker count; `None` reads `CPDQS_THREADS` and falls back to rayon's default.
    pub threads: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::Scsc, Algorithm::Scp],
            options: SolverOptions::default(),
            restarts: 1,
            seed: 0,
            format: FormatHint::Auto,
            threads: None,
        }
    }
}

/// Instance files in `dir`, sorted by file name.
pub fn collect_instances(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let known = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| INSTANCE_EXTENSIONS.contains(&e));
        if known && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidConfig(format!(
                "{THREADS_ENV} must be a positive integer, got '{text}'"
            ))),
        },
    }
}

fn run_instance(path: &Path, cfg: &BenchConfig) -> Vec<ResultRow> {
    let name = instance_name(path);
    let spec = match import_benchmark(path, cfg.format) {
        Ok(spec) => spec,
        Err(e) => {
            let msg = e.to_string();
            return cfg
                .algorithms
                .iter()
                .map(|&alg| ResultRow::failed(&name, alg, &msg))
                .collect();
        }
    };
    let plan = MultistartPlan::new(cfg.restarts, cfg.seed);
    cfg.algorithms
        .iter()
        .map(|&alg| match multistart(&spec, alg, &cfg.options, plan) {
            Ok(report) => ResultRow::from_report(&report),
            Err(e) => ResultRow::failed(spec.name(), alg, &e.to_string()),
        })
        .collect()
}

/// Runs every algorithm on every instance of `dir` and returns the rows in
/// file-name order, algorithms in the order given.
pub fn run_bench(dir: &Path, cfg: &BenchConfig) -> Result<Vec<ResultRow>> {
    if cfg.algorithms.is_empty() {
        return Err(Error::InvalidConfig("no algorithms selected".into()));
    }
    if cfg.restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    cfg.options.spg.validate()?;
    let files = collect_instances(dir)?;
    let threads = match cfg.threads {
        Some(t) => Some(t),
        None => threads_from_env()?,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let per_file: Vec<Vec<ResultRow>> =
        pool.install(|| files.par_iter().map(|p| run_instance(p, cfg)).collect());
    Ok(per_file.into_iter().flatten().collect())
}

/// `run_bench` followed by writing the CSV.
pub fn run_bench_to<W: Write>(dir: &Path, cfg: &BenchConfig, out: W) -> Result<Vec<ResultRow>> {
    let rows = run_bench(dir, cfg)?;
    write_results(out, &rows)?;
    Ok(rows)
}

//! Corpus-level experiments and their CSV reports.
//!
//! Layout under the output directory:
//!
//! ```text
//! scc.csv obcc.csv                 rq1, one row per program + TOTAL
//! gapkills.csv correlation.csv     rq2
//! variants.csv                     rq2
//! summary.csv unobservable.csv     rq3, all programs
//! enrichment.csv                   rq4
//! <program>/scc.csv obcc.csv       per-structure detail
//! <program>/trace.jsonl slices.jsonl
//! <program>/mutation.csv           original suite, from rq2
//! <program>/summary.csv unobservable.csv
//! ```
//!
//! Every CSV uses `,`, `.` decimals, LF line endings and always has a
//! header row.

mod rq1;
mod rq2;
mod rq3;
mod smoke;

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::interp::ExecConfig;
use crate::lang::{self, Program};
use crate::mutation::{MutationConfig, Operator};
use crate::pipeline::{analyze, Analysis};
use crate::suitegen::{DEFAULT_KEEP_RATES, DEFAULT_SEEDS};

pub use rq1::{rq1, CoverageRow, Rq1Report};
pub use rq2::{rq2, score_row, CorrelationRow, Rq2Report, VariantRow};
pub use rq3::{rq3, rq4, EnrichmentRow, Rq3Report, Rq4Report};
pub use smoke::{smoke, SmokeReport, SMOKE_STAGES};

pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: no such file or directory", .0.display())]
    NotFound(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    /// File stem; also the per-program results directory name.
    pub name: String,
    pub source: String,
}

/// Loads one `.sl` file, or every `.sl` file of a directory ordered by
/// file name.
pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, ExperimentError> {
    if !path.exists() {
        return Err(ExperimentError::NotFound(path.to_path_buf()));
    }
    let files = if path.is_dir() {
        let mut files = Vec::new();
        for entry in fs::read_dir(path).map_err(io_err(path))? {
            let p = entry.map_err(io_err(path))?.path();
            if p.extension().is_some_and(|e| e == "sl") && p.is_file() {
                files.push(p);
            }
        }
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    files
        .into_iter()
        .map(|f| {
            let source = fs::read_to_string(&f).map_err(io_err(&f))?;
            let name = f
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(CorpusEntry { name, source })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub exec: ExecConfig,
    pub keep_rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub top_k: usize,
    pub ops: BTreeSet<Operator>,
    pub timeout_kills: bool,
    pub jobs: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            exec: ExecConfig::default(),
            keep_rates: DEFAULT_KEEP_RATES.to_vec(),
            seeds: DEFAULT_SEEDS.to_vec(),
            top_k: DEFAULT_TOP_K,
            ops: Operator::ALL.into_iter().collect(),
            timeout_kills: true,
            jobs: 1,
        }
    }
}

impl Settings {
    pub fn mutation(&self) -> MutationConfig {
        MutationConfig {
            step_limit: self.exec.step_limit,
            max_depth: self.exec.max_depth,
            timeout_kills: self.timeout_kills,
            jobs: self.jobs,
        }
    }
}

/// Parse failures rendered on one line, for `errors` columns.
pub fn parse_entry(entry: &CorpusEntry) -> Result<Program, String> {
    lang::parse(&entry.source).map_err(|e| {
        e.diagnostics
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("; ")
    })
}

/// Failing tests of an analysis, e.g. `t2: assertion-failure(A3)`.
pub fn red_tests(a: &Analysis) -> Vec<String> {
    a.suite
        .values()
        .filter(|r| !r.outcome.status.is_pass())
        .map(|r| format!("{}: {}", r.outcome.test, r.outcome.status))
        .collect()
}

fn parse_and_analyze(entry: &CorpusEntry, s: &Settings) -> Result<(Program, Analysis), String> {
    let p = parse_entry(entry)?;
    let a = analyze(&p, &s.exec).map_err(|e| e.to_string())?;
    Ok((p, a))
}

fn ensure_dir(dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub(crate) struct CsvOut {
    path: PathBuf,
    w: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub(crate) fn create(path: PathBuf, header: &[&str]) -> Result<Self, ExperimentError> {
        if let Some(dir) = path.parent() {
            ensure_dir(dir)?;
        }
        let file = File::create(&path).map_err(io_err(&path))?;
        let w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(BufWriter::new(file));
        let mut out = CsvOut { path, w };
        out.row(header)?;
        Ok(out)
    }

    pub(crate) fn row<I, T>(&mut self, fields: I) -> Result<(), ExperimentError>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(|source| ExperimentError::Csv {
            path: self.path.clone(),
            source,
        })
    }

    pub(crate) fn finish(mut self) -> Result<(), ExperimentError> {
        self.w.flush().map_err(io_err(&self.path))
    }
}

fn join_ids<T: ToString>(ids: impl IntoIterator<Item = T>) -> String {
    ids.into_iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

//! Coverage, checked coverage and gaps per program.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::coverage::{Counts, Pct};
use crate::pipeline::Analysis;
use crate::slicer::write_slices_jsonl;

use super::{io_err, parse_and_analyze, red_tests, CorpusEntry, CsvOut, ExperimentError, Settings};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageRow {
    pub program: String,
    /// Statement and branch-arm counts; `None` when analysis failed.
    pub statements: Option<Counts>,
    pub arms: Option<Counts>,
    pub uncheckable_arms: usize,
    pub errors: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Rq1Report {
    pub rows: Vec<CoverageRow>,
}

impl Rq1Report {
    /// Pooled counts over every analysed program.
    pub fn total(&self) -> (Counts, Counts, usize) {
        let mut s = Counts::default();
        let mut b = Counts::default();
        let mut u = 0;
        for r in &self.rows {
            for (acc, c) in [(&mut s, r.statements), (&mut b, r.arms)] {
                if let Some(c) = c {
                    acc.total += c.total;
                    acc.covered += c.covered;
                    acc.checked += c.checked;
                }
            }
            u += r.uncheckable_arms;
        }
        (s, b, u)
    }
}

fn stmt_fields(c: Counts) -> Vec<String> {
    let cov = Pct::ratio(c.covered, c.total);
    let chk = Pct::ratio(c.checked, c.total);
    vec![
        c.total.to_string(),
        c.covered.to_string(),
        c.checked.to_string(),
        cov.to_string(),
        chk.to_string(),
        (cov - chk).to_string(),
    ]
}

fn arm_fields(c: Counts, uncheckable: usize) -> Vec<String> {
    let mut out = vec![
        c.total.to_string(),
        c.covered.to_string(),
        c.checked.to_string(),
        uncheckable.to_string(),
    ];
    if c.total == 0 {
        out.extend(["n/a", "n/a", "n/a"].map(String::from));
    } else {
        let cov = Pct::ratio(c.covered, c.total);
        let chk = Pct::ratio(c.checked, c.total);
        out.extend([cov.to_string(), chk.to_string(), (cov - chk).to_string()]);
    }
    out
}

pub(super) fn write_program_detail(
    dir: &Path,
    a: &Analysis,
) -> Result<(), ExperimentError> {
    let mut w = CsvOut::create(dir.join("scc.csv"), &["stmt", "covered", "checked"])?;
    for (id, f) in &a.report.statements {
        w.row([id.to_string(), f.covered.to_string(), f.checked.to_string()])?;
    }
    w.finish()?;

    let mut w = CsvOut::create(
        dir.join("obcc.csv"),
        &["pred", "outcome", "covered", "checked", "structurally_uncheckable"],
    )?;
    for (arm, f) in &a.report.arms {
        w.row([
            arm.pred.to_string(),
            arm.outcome.to_string(),
            f.covered.to_string(),
            f.checked.to_string(),
            f.structurally_uncheckable.to_string(),
        ])?;
    }
    w.finish()?;
    write_trace_and_slices(dir, a)
}

pub(super) fn write_trace_and_slices(dir: &Path, a: &Analysis) -> Result<(), ExperimentError> {
    let path = dir.join("trace.jsonl");
    let mut f = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
    for run in a.suite.values() {
        run.trace.write_jsonl(&mut f).map_err(io_err(&path))?;
    }
    std::io::Write::flush(&mut f).map_err(io_err(&path))?;

    let path = dir.join("slices.jsonl");
    let f = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
    write_slices_jsonl(&a.slices, f).map_err(io_err(&path))
}

pub const SCC_HEADER: [&str; 8] = [
    "program",
    "statements",
    "covered",
    "checked",
    "coverage_pct",
    "scc_pct",
    "gap_pp",
    "errors",
];

pub const OBCC_HEADER: [&str; 9] = [
    "program",
    "arms",
    "covered",
    "checked",
    "uncheckable",
    "coverage_pct",
    "obcc_pct",
    "gap_pp",
    "errors",
];

pub(super) fn write_summaries(out: &Path, report: &Rq1Report) -> Result<(), ExperimentError> {
    let mut scc = CsvOut::create(out.join("scc.csv"), &SCC_HEADER)?;
    let mut obcc = CsvOut::create(out.join("obcc.csv"), &OBCC_HEADER)?;
    for r in &report.rows {
        let mut s = vec![r.program.clone()];
        let mut b = vec![r.program.clone()];
        match (r.statements, r.arms) {
            (Some(sc), Some(bc)) => {
                s.extend(stmt_fields(sc));
                b.extend(arm_fields(bc, r.uncheckable_arms));
            }
            _ => {
                s.extend(std::iter::repeat_n(String::new(), 6));
                b.extend(std::iter::repeat_n(String::new(), 7));
            }
        }
        s.push(r.errors.clone());
        b.push(r.errors.clone());
        scc.row(&s)?;
        obcc.row(&b)?;
    }
    if !report.rows.is_empty() {
        let (s, b, u) = report.total();
        let failed = report.rows.iter().filter(|r| !r.errors.is_empty()).count();
        let errors = if failed == 0 {
            String::new()
        } else {
            format!("{failed} program(s) with errors")
        };
        let mut row = vec!["TOTAL".to_string()];
        row.extend(stmt_fields(s));
        row.push(errors.clone());
        scc.row(&row)?;
        let mut row = vec!["TOTAL".to_string()];
        row.extend(arm_fields(b, u));
        row.push(errors);
        obcc.row(&row)?;
    }
    scc.finish()?;
    obcc.finish()
}

/// Statement and branch checked coverage of every program; writes
/// `scc.csv`, `obcc.csv` and per-program detail.
pub fn rq1(
    corpus: &[CorpusEntry],
    s: &Settings,
    out: &Path,
) -> Result<Rq1Report, ExperimentError> {
    let mut report = Rq1Report::default();
    for entry in corpus {
        let row = match parse_and_analyze(entry, s) {
            Ok((_, a)) => {
                write_program_detail(&out.join(&entry.name), &a)?;
                CoverageRow {
                    program: entry.name.clone(),
                    statements: Some(a.report.statement_counts()),
                    arms: Some(a.report.arm_counts()),
                    uncheckable_arms: a.report.uncheckable_arms(),
                    errors: red_tests(&a).join("; "),
                }
            }
            Err(e) => CoverageRow {
                program: entry.name.clone(),
                statements: None,
                arms: None,
                uncheckable_arms: 0,
                errors: e,
            },
        };
        report.rows.push(row);
    }
    super::ensure_dir(out)?;
    write_summaries(out, &report)?;
    Ok(report)
}

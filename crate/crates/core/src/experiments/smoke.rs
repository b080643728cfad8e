//! End-to-end smoke test on one small program.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::coverage::gap_statements;
use crate::interp::run_suite;
use crate::pipeline::analyze;

use super::rq1::{write_summaries, write_trace_and_slices, CoverageRow, Rq1Report};
use super::rq3::{write_aggregate_recommendations, write_program_recommendations};
use super::{io_err, load_corpus, parse_entry, ExperimentError, Settings};
use crate::recommender::recommend;

pub const SMOKE_STAGES: [&str; 5] = [
    "Trace file generated",
    "Slice file(s) generated",
    "SCC computed",
    "OBCC computed",
    "Recommender ran successfully",
];

const BANNER: &str = "\
************************************
Smoke tests for end-to-end workflow
************************************
Verify ability to generate:
   - statement coverage
   - branch coverage
   - traces
   - slices
   - statement checked coverage (SCC)
   - object branch checked coverage (OBCC)
   - recommendations via recommender
";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmokeReport {
    /// One entry per stage that ran; `true` for OK.
    pub stages: Vec<(&'static str, bool)>,
    pub log: PathBuf,
}

impl SmokeReport {
    pub fn ok(&self) -> bool {
        self.stages.len() == SMOKE_STAGES.len() && self.stages.iter().all(|(_, ok)| *ok)
    }
}

/// Runs trace, slice, SCC, OBCC and recommend on `program`, writing the
/// checklist to `console` and results under `out`. Stops at the first
/// failing stage.
pub fn smoke(
    program: &Path,
    s: &Settings,
    out: &Path,
    mut console: impl Write,
) -> Result<SmokeReport, ExperimentError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let log_path = out.join("smoke.log");
    let mut log = String::new();
    let mut report = SmokeReport {
        stages: Vec::new(),
        log: log_path.clone(),
    };
    let console_err = |e| io_err(Path::new("<stdout>"))(e);
    console.write_all(BANNER.as_bytes()).map_err(console_err)?;

    let stages = run_stages(program, s, out, &mut log);
    let mut failed = false;
    for (i, name) in SMOKE_STAGES.iter().enumerate() {
        let ok = stages.get(i).copied().unwrap_or(false);
        report.stages.push((name, ok));
        if ok {
            writeln!(console, "{name}: OK").map_err(console_err)?;
        } else {
            writeln!(console, "{name}: FAIL (see {})", log_path.display()).map_err(console_err)?;
            failed = true;
            break;
        }
    }
    if !failed {
        let _ = writeln!(log, "all stages OK");
    }
    fs::write(&log_path, log).map_err(io_err(&log_path))?;
    Ok(report)
}

/// Outcome of each stage in order; shorter than the stage list when a
/// stage fails (its entry is `false`).
fn run_stages(program: &Path, s: &Settings, out: &Path, log: &mut String) -> Vec<bool> {
    let mut done = Vec::new();
    let fail = |log: &mut String, stage: &str, msg: String| {
        let _ = writeln!(log, "{stage}: {msg}");
    };

    // 1. trace
    let entry = match load_corpus(program) {
        Ok(mut c) if c.len() == 1 => c.remove(0),
        Ok(_) => {
            fail(log, SMOKE_STAGES[0], format!("{} is not a single program", program.display()));
            done.push(false);
            return done;
        }
        Err(e) => {
            fail(log, SMOKE_STAGES[0], e.to_string());
            done.push(false);
            return done;
        }
    };
    let dir = out.join(&entry.name);
    let p = match parse_entry(&entry) {
        Ok(p) => p,
        Err(e) => {
            fail(log, SMOKE_STAGES[0], e);
            done.push(false);
            return done;
        }
    };
    let exec = crate::interp::ExecConfig {
        record: true,
        ..s.exec
    };
    let suite = match run_suite(&p, &exec) {
        Ok(suite) => suite,
        Err(e) => {
            fail(log, SMOKE_STAGES[0], e.to_string());
            done.push(false);
            return done;
        }
    };
    let traced = fs::create_dir_all(&dir).map_err(|e| e.to_string()).and_then(|_| {
        let path = dir.join("trace.jsonl");
        let mut buf = Vec::new();
        for run in suite.values() {
            run.trace.write_jsonl(&mut buf).map_err(|e| e.to_string())?;
        }
        fs::write(&path, buf).map_err(|e| e.to_string())?;
        Ok(path)
    });
    match traced {
        Ok(path) => {
            let _ = writeln!(log, "trace: {}", path.display());
            done.push(true);
        }
        Err(e) => {
            fail(log, SMOKE_STAGES[0], e);
            done.push(false);
            return done;
        }
    }

    // 2. slices
    let analysis = match analyze(&p, &s.exec) {
        Ok(a) => a,
        Err(e) => {
            fail(log, SMOKE_STAGES[1], e.to_string());
            done.push(false);
            return done;
        }
    };
    if let Err(e) = write_trace_and_slices(&dir, &analysis) {
        fail(log, SMOKE_STAGES[1], e.to_string());
        done.push(false);
        return done;
    }
    let _ = writeln!(log, "slices: {} in {}", analysis.slices.len(), dir.join("slices.jsonl").display());
    done.push(true);

    // 3 + 4. SCC and OBCC share the summary writer
    let report = Rq1Report {
        rows: vec![CoverageRow {
            program: entry.name.clone(),
            statements: Some(analysis.report.statement_counts()),
            arms: Some(analysis.report.arm_counts()),
            uncheckable_arms: analysis.report.uncheckable_arms(),
            errors: super::red_tests(&analysis).join("; "),
        }],
    };
    let written = write_summaries(out, &report)
        .and_then(|_| super::rq1::write_program_detail(&dir, &analysis));
    if let Err(e) = written {
        fail(log, SMOKE_STAGES[2], e.to_string());
        done.push(false);
        return done;
    }
    let _ = writeln!(
        log,
        "SCC {} (coverage {}, gap {} pp)",
        analysis.gap.scc_pct, analysis.gap.stmt_coverage_pct, analysis.gap.stmt_gap_pp
    );
    done.push(out.join("scc.csv").exists());
    let _ = writeln!(
        log,
        "OBCC {} (coverage {}, gap {} pp)",
        analysis.gap.obcc_pct, analysis.gap.branch_coverage_pct, analysis.gap.branch_gap_pp
    );
    done.push(out.join("obcc.csv").exists());

    // 5. recommender
    let recs = recommend(&p, &gap_statements(&analysis.report), s.top_k);
    let written = write_program_recommendations(&dir, &recs)
        .and_then(|_| write_aggregate_recommendations(out, &[(entry.name.clone(), recs.clone())]));
    match written {
        Ok(()) => {
            let _ = writeln!(log, "recommendations: {}", recs.items.len());
            done.push(true);
        }
        Err(e) => {
            fail(log, SMOKE_STAGES[4], e.to_string());
            done.push(false);
        }
    }
    done
}

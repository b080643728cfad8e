//! End-to-end checked-coverage analysis of one program.

use thiserror::Error;

use crate::coverage::{checked_coverage, gap, regular_coverage, CoverageReport, GapReport};
use crate::interp::{generate_criteria, run_suite, ExecConfig, ExecError, SuiteRun};
use crate::lang::Program;
use crate::slicer::{backward_slice, build_ddg, union_slices, CheckedSet, Slice, SliceError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Slice(#[from] SliceError),
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub suite: SuiteRun,
    pub slices: Vec<Slice>,
    pub checked: CheckedSet,
    pub report: CoverageReport,
    pub gap: GapReport,
}

/// Trace every test, slice from every executed assertion, and compute
/// coverage, checked coverage and the gap.
pub fn analyze(p: &Program, cfg: &ExecConfig) -> Result<Analysis, AnalysisError> {
    let cfg = ExecConfig {
        record: true,
        ..*cfg
    };
    let suite = run_suite(p, &cfg)?;
    let slices = slice_suite(&suite)?;
    let checked = union_slices(&slices);
    let covered = regular_coverage(p, &suite);
    let report = checked_coverage(&covered, &checked);
    let gap = gap(&report);
    Ok(Analysis {
        suite,
        slices,
        checked,
        report,
        gap,
    })
}

/// Slices for every generated criterion, grouped by test.
pub fn slice_suite(suite: &SuiteRun) -> Result<Vec<Slice>, SliceError> {
    let criteria = generate_criteria(suite);
    let mut slices = Vec::with_capacity(criteria.len());
    let mut current: Option<(&str, crate::slicer::DynamicDependenceGraph)> = None;
    for c in &criteria {
        if current.as_ref().map(|(t, _)| *t) != Some(c.test.as_str()) {
            current = Some((c.test.as_str(), build_ddg(&suite[&c.test].trace)?));
        }
        let (_, ddg) = current.as_ref().expect("set above");
        slices.push(backward_slice(ddg, c)?);
    }
    Ok(slices)
}

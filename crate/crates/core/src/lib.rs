//! Checked coverage and coverage gaps for the Slang toy language.
//!
//! The pipeline: parse a program ([`lang`]), run its tests while recording
//! traces ([`interp`]), slice backwards from every executed assertion
//! ([`slicer`]), and compare checked coverage against regular coverage
//! ([`coverage`]).

pub mod coverage;
pub mod experiments;
pub mod interp;
pub mod lang;
pub mod mutation;
pub mod pipeline;
pub mod randprog;
pub mod recommender;
pub mod slicer;
pub mod stats;
pub mod suitegen;

pub use coverage::{gap, gap_statements, CoverageReport, GapReport, Pct};
pub use interp::{run_suite, run_test, ExecConfig, SuiteRun, TestStatus, Trace, TraceEvent};
pub use lang::{parse, BranchArm, Program, StatementId};
pub use pipeline::{analyze, Analysis, AnalysisError};
pub use slicer::{backward_slice, build_ddg, Slice, SlicingCriterion};

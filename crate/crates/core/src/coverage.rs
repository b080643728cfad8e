//! Regular coverage, checked coverage (SCC / OBCC) and the gap between them.
//!
//! Percentages are kept as integer hundredths rounded half-up, and gaps are
//! the difference of the rounded values, so a report's gap columns always
//! equal coverage minus checked coverage exactly.

use std::collections::BTreeMap;
use std::fmt;

use crate::interp::SuiteRun;
use crate::lang::{enumerate_structures, BranchArm, Program, StatementId, StmtKind};
use crate::slicer::CheckedSet;

/// A percentage in fixed-point hundredths (`8000` is 80.00%).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pct(pub i64);

impl Pct {
    pub const FULL: Pct = Pct(10_000);

    /// `100 * count / total`, rounded half-up to two decimals. An empty
    /// denominator counts as full coverage.
    pub fn ratio(count: usize, total: usize) -> Pct {
        if total == 0 {
            return Pct::FULL;
        }
        let (c, t) = (count as i64, total as i64);
        Pct((c * 20_000 + t) / (2 * t))
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl std::ops::Sub for Pct {
    type Output = Pct;
    fn sub(self, rhs: Pct) -> Pct {
        Pct(self.0 - rhs.0)
    }
}

impl fmt::Display for Pct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let v = self.0.abs();
        write!(f, "{sign}{}.{:02}", v / 100, v % 100)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StmtFlags {
    pub covered: bool,
    pub checked: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ArmFlags {
    pub covered: bool,
    pub checked: bool,
    /// Exit arm of a while loop: never governs anything, so never checked.
    pub structurally_uncheckable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub statements: BTreeMap<StatementId, StmtFlags>,
    pub arms: BTreeMap<BranchArm, ArmFlags>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub total: usize,
    pub covered: usize,
    pub checked: usize,
}

impl CoverageReport {
    /// All structures of `p`, nothing covered.
    pub fn empty(p: &Program) -> Self {
        let (stmts, arms) = enumerate_structures(p);
        let while_preds: Vec<StatementId> = p
            .put_statements()
            .iter()
            .filter(|s| matches!(s.kind, StmtKind::While { .. }))
            .filter_map(|s| s.id.statement())
            .collect();
        CoverageReport {
            statements: stmts.into_iter().map(|s| (s, StmtFlags::default())).collect(),
            arms: arms
                .into_iter()
                .map(|a| {
                    let flags = ArmFlags {
                        structurally_uncheckable: !a.outcome && while_preds.contains(&a.pred),
                        ..ArmFlags::default()
                    };
                    (a, flags)
                })
                .collect(),
        }
    }

    pub fn statement_counts(&self) -> Counts {
        Counts {
            total: self.statements.len(),
            covered: self.statements.values().filter(|f| f.covered).count(),
            checked: self.statements.values().filter(|f| f.checked).count(),
        }
    }

    pub fn arm_counts(&self) -> Counts {
        Counts {
            total: self.arms.len(),
            covered: self.arms.values().filter(|f| f.covered).count(),
            checked: self.arms.values().filter(|f| f.checked).count(),
        }
    }

    pub fn uncheckable_arms(&self) -> usize {
        self.arms
            .values()
            .filter(|f| f.structurally_uncheckable)
            .count()
    }
}

/// Statement covered iff it has at least one event; arm covered iff some
/// predicate instance took that outcome.
pub fn regular_coverage(p: &Program, suite: &SuiteRun) -> CoverageReport {
    let mut report = CoverageReport::empty(p);
    for run in suite.values() {
        for ev in &run.trace.events {
            let Some(id) = ev.put_statement() else { continue };
            if let Some(flags) = report.statements.get_mut(&id) {
                flags.covered = true;
            }
            if let Some(outcome) = ev.outcome {
                if let Some(flags) = report.arms.get_mut(&BranchArm { pred: id, outcome }) {
                    flags.covered = true;
                }
            }
        }
    }
    report
}

/// Adds checked flags from the union of all assertion slices.
pub fn checked_coverage(covered: &CoverageReport, union: &CheckedSet) -> CoverageReport {
    let mut report = covered.clone();
    for (id, flags) in report.statements.iter_mut() {
        flags.checked = union.statements.contains(id);
    }
    for (arm, flags) in report.arms.iter_mut() {
        flags.checked = union.arms.contains(arm);
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapReport {
    pub stmt_coverage_pct: Pct,
    pub scc_pct: Pct,
    pub stmt_gap_pp: Pct,
    pub branch_coverage_pct: Pct,
    pub obcc_pct: Pct,
    pub branch_gap_pp: Pct,
}

pub fn gap(report: &CoverageReport) -> GapReport {
    let s = report.statement_counts();
    let b = report.arm_counts();
    let stmt_coverage_pct = Pct::ratio(s.covered, s.total);
    let scc_pct = Pct::ratio(s.checked, s.total);
    let branch_coverage_pct = Pct::ratio(b.covered, b.total);
    let obcc_pct = Pct::ratio(b.checked, b.total);
    GapReport {
        stmt_coverage_pct,
        scc_pct,
        stmt_gap_pp: stmt_coverage_pct - scc_pct,
        branch_coverage_pct,
        obcc_pct,
        branch_gap_pp: branch_coverage_pct - obcc_pct,
    }
}

/// Covered but unchecked statements, ordered by id.
pub fn gap_statements(report: &CoverageReport) -> Vec<StatementId> {
    report
        .statements
        .iter()
        .filter(|(_, f)| f.covered && !f.checked)
        .map(|(id, _)| *id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::analyze;
    use crate::interp::ExecConfig;
    use crate::lang::{parse, P1_SOURCE};

    #[test]
    fn pct_rounding_is_half_up() {
        assert_eq!(Pct::ratio(4, 5).to_string(), "80.00");
        assert_eq!(Pct::ratio(1, 3).to_string(), "33.33");
        assert_eq!(Pct::ratio(2, 3).to_string(), "66.67");
        // 1/8 = 12.5% exactly, 1/16 = 6.25%, 1/32 = 3.125% -> 3.13
        assert_eq!(Pct::ratio(1, 32).to_string(), "3.13");
        assert_eq!(Pct::ratio(0, 0), Pct::FULL);
        assert_eq!(Pct(-5).to_string(), "-0.05");
    }

    #[test]
    fn p1_report() {
        let p = parse(P1_SOURCE).unwrap();
        let a = analyze(&p, &ExecConfig::default()).unwrap();
        let g = gap(&a.report);
        assert_eq!(g.stmt_coverage_pct.to_string(), "100.00");
        assert_eq!(g.scc_pct.to_string(), "80.00");
        assert_eq!(g.stmt_gap_pp.to_string(), "20.00");
        assert_eq!(g.branch_coverage_pct.to_string(), "50.00");
        assert_eq!(g.obcc_pct.to_string(), "50.00");
        assert_eq!(g.branch_gap_pp.to_string(), "0.00");
        assert_eq!(gap_statements(&a.report), vec![StatementId(4)]);
    }

    #[test]
    fn no_tests_means_no_coverage() {
        let p = parse("fn f(x) { return x; }").unwrap();
        let a = analyze(&p, &ExecConfig::default()).unwrap();
        assert_eq!(gap(&a.report).stmt_coverage_pct, Pct(0));
        assert!(gap_statements(&a.report).is_empty());
    }

    #[test]
    fn both_arms_across_tests() {
        let src = "fn f(x) { y = 0; if (x > 0) { y = 1; } return y; }
            test a { r = f(1); assert r == 1; }
            test b { r = f(-1); assert r == 0; }";
        let p = parse(src).unwrap();
        let a = analyze(&p, &ExecConfig::default()).unwrap();
        assert_eq!(a.report.arm_counts().covered, 2);
        assert_eq!(gap(&a.report).branch_coverage_pct, Pct::FULL);
    }

    #[test]
    fn empty_union_and_full_union() {
        let p = parse(P1_SOURCE).unwrap();
        let a = analyze(&p, &ExecConfig::default()).unwrap();
        let none = checked_coverage(&a.report, &CheckedSet::default());
        let g = gap(&none);
        assert_eq!((g.scc_pct, g.obcc_pct), (Pct(0), Pct(0)));
        assert_eq!(g.stmt_gap_pp, g.stmt_coverage_pct);

        let mut all = CheckedSet::default();
        for (id, f) in &a.report.statements {
            if f.covered {
                all.statements.insert(*id);
            }
        }
        let g = gap(&checked_coverage(&a.report, &all));
        assert_eq!(g.scc_pct, g.stmt_coverage_pct);
        assert_eq!(g.stmt_gap_pp, Pct(0));
    }

    #[test]
    fn while_exit_arms_are_flagged() {
        let src = "fn f(n) { i = 0; while (i < n) { i = i + 1; } if (i > 2) { i = 0; } return i; }";
        let p = parse(src).unwrap();
        let r = CoverageReport::empty(&p);
        let flagged: Vec<_> = r
            .arms
            .iter()
            .filter(|(_, f)| f.structurally_uncheckable)
            .map(|(a, _)| *a)
            .collect();
        assert_eq!(flagged, vec![BranchArm { pred: StatementId(2), outcome: false }]);
    }

    #[test]
    fn unexecuted_statements_are_not_gaps() {
        let src = "fn f(x) { if (x > 0) { return 1; } return 0; } test t { r = f(1); }";
        let p = parse(src).unwrap();
        let a = analyze(&p, &ExecConfig::default()).unwrap();
        // no assertions: covered s1, s2 are gaps, s3 is not executed
        assert_eq!(gap_statements(&a.report), vec![StatementId(1), StatementId(2)]);
    }
}

//! Assertion recommendations and suite enrichment.

use std::path::Path;

use crate::coverage::{gap_statements, Pct};
use crate::lang::{print_expr, Program, StmtKind, StmtRef};
use crate::mutation::{generate_mutants, run_mutation};
use crate::pipeline::analyze;
use crate::recommender::{apply_recommendation, recommend, Recommendation, Recommendations};

use super::{join_ids, parse_and_analyze, CorpusEntry, CsvOut, ExperimentError, Settings};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rq3Report {
    /// (program, recommendations) in corpus order.
    pub programs: Vec<(String, Recommendations)>,
    pub diagnostics: Vec<String>,
}

pub(super) const SUMMARY_HEADER: [&str; 5] =
    ["rank", "target", "insertion_test", "score", "would_check_ids"];

fn summary_fields(r: &Recommendation) -> [String; 5] {
    [
        r.rank.to_string(),
        r.target.clone(),
        r.test.clone(),
        r.score.to_string(),
        join_ids(&r.would_check),
    ]
}

pub(super) fn write_program_recommendations(
    dir: &Path,
    recs: &Recommendations,
) -> Result<(), ExperimentError> {
    let mut w = CsvOut::create(dir.join("summary.csv"), &SUMMARY_HEADER)?;
    for r in &recs.items {
        w.row(summary_fields(r))?;
    }
    w.finish()?;
    let mut w = CsvOut::create(dir.join("unobservable.csv"), &["stmt"])?;
    for s in &recs.unobservable {
        w.row([s.to_string()])?;
    }
    w.finish()
}

pub(super) fn write_aggregate_recommendations(
    out: &Path,
    programs: &[(String, Recommendations)],
) -> Result<(), ExperimentError> {
    let mut header = vec!["program"];
    header.extend(SUMMARY_HEADER);
    let mut w = CsvOut::create(out.join("summary.csv"), &header)?;
    for (name, recs) in programs {
        for r in &recs.items {
            let mut row = vec![name.clone()];
            row.extend(summary_fields(r));
            w.row(&row)?;
        }
    }
    w.finish()?;
    let mut w = CsvOut::create(out.join("unobservable.csv"), &["program", "stmt"])?;
    for (name, recs) in programs {
        for s in &recs.unobservable {
            w.row([name.clone(), s.to_string()])?;
        }
    }
    w.finish()
}

/// Top-k recommendations for every program's gap statements.
pub fn rq3(
    corpus: &[CorpusEntry],
    s: &Settings,
    out: &Path,
) -> Result<Rq3Report, ExperimentError> {
    let mut report = Rq3Report::default();
    for entry in corpus {
        let (p, a) = match parse_and_analyze(entry, s) {
            Ok(x) => x,
            Err(e) => {
                report.diagnostics.push(format!("{}: skipped: {e}", entry.name));
                continue;
            }
        };
        let recs = recommend(&p, &gap_statements(&a.report), s.top_k);
        write_program_recommendations(&out.join(&entry.name), &recs)?;
        report.programs.push((entry.name.clone(), recs));
    }
    super::ensure_dir(out)?;
    write_aggregate_recommendations(out, &report.programs)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnrichmentRow {
    pub program: String,
    /// The inserted assertion, e.g. `t1: assert g == 7;`; empty when none.
    pub added: String,
    pub scc_before: Pct,
    pub scc_after: Pct,
    pub gap_before: Pct,
    pub gap_after: Pct,
    pub mutants: usize,
    pub killed_before: usize,
    pub killed_after: usize,
    pub score_before: Option<Pct>,
    pub score_after: Option<Pct>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rq4Report {
    pub rows: Vec<EnrichmentRow>,
    pub diagnostics: Vec<String>,
}

fn added_assertion(before: &Program, after: &Program, test: &str) -> String {
    let n = before.max_assertion_id();
    let mut text = String::new();
    if let Some(t) = after.test(test) {
        for st in &t.body {
            if let (StmtRef::Assert(id), StmtKind::Assert { cond, .. }) = (st.id, &st.kind) {
                if id.0 > n {
                    text = format!("{test}: assert {};", print_expr(cond));
                }
            }
        }
    }
    text
}

/// SCC and mutation score before and after applying each program's rank-1
/// recommendation; writes `enrichment.csv`.
pub fn rq4(
    corpus: &[CorpusEntry],
    s: &Settings,
    out: &Path,
) -> Result<Rq4Report, ExperimentError> {
    let mut report = Rq4Report::default();
    let mcfg = s.mutation();
    for entry in corpus {
        let row = (|| -> Result<EnrichmentRow, String> {
            let (p, a) = parse_and_analyze(entry, s)?;
            let recs = recommend(&p, &gap_statements(&a.report), 1);
            let (q, b) = match recs.items.first() {
                Some(r) => {
                    let q = apply_recommendation(&p, r, &s.exec).map_err(|e| e.to_string())?;
                    let b = analyze(&q, &s.exec).map_err(|e| e.to_string())?;
                    (q, b)
                }
                None => (p.clone(), a.clone()),
            };
            let before = run_mutation(&p, &generate_mutants(&p, &s.ops), &mcfg).map_err(|e| e.to_string())?;
            let after = run_mutation(&q, &generate_mutants(&q, &s.ops), &mcfg).map_err(|e| e.to_string())?;
            Ok(EnrichmentRow {
                program: entry.name.clone(),
                added: recs
                    .items
                    .first()
                    .map(|r| added_assertion(&p, &q, &r.test))
                    .unwrap_or_default(),
                scc_before: a.gap.scc_pct,
                scc_after: b.gap.scc_pct,
                gap_before: a.gap.stmt_gap_pp,
                gap_after: b.gap.stmt_gap_pp,
                mutants: before.results.len(),
                killed_before: before.killed,
                killed_after: after.killed,
                score_before: before.score_pct,
                score_after: after.score_pct,
            })
        })();
        match row {
            Ok(r) => report.rows.push(r),
            Err(e) => report.diagnostics.push(format!("{}: skipped: {e}", entry.name)),
        }
    }
    let mut w = CsvOut::create(
        out.join("enrichment.csv"),
        &[
            "program",
            "added_assertion",
            "scc_before",
            "scc_after",
            "stmt_gap_before",
            "stmt_gap_after",
            "mutants",
            "killed_before",
            "killed_after",
            "score_before",
            "score_after",
        ],
    )?;
    let na = |p: Option<Pct>| p.map_or("n/a".to_string(), |p| p.to_string());
    for r in &report.rows {
        w.row([
            r.program.clone(),
            r.added.clone(),
            r.scc_before.to_string(),
            r.scc_after.to_string(),
            r.gap_before.to_string(),
            r.gap_after.to_string(),
            r.mutants.to_string(),
            r.killed_before.to_string(),
            r.killed_after.to_string(),
            na(r.score_before),
            na(r.score_after),
        ])?;
    }
    w.finish()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::P1_SOURCE;
    use std::fs;

    fn corpus(name: &str, src: &str) -> Vec<CorpusEntry> {
        vec![CorpusEntry {
            name: name.into(),
            source: src.into(),
        }]
    }

    #[test]
    fn p1_summary() {
        let dir = tempfile::tempdir().unwrap();
        let s = Settings {
            top_k: 3,
            ..Settings::default()
        };
        rq3(&corpus("p1", P1_SOURCE), &s, dir.path()).unwrap();
        let per = fs::read_to_string(dir.path().join("p1/summary.csv")).unwrap();
        assert_eq!(per, "rank,target,insertion_test,score,would_check_ids\n1,g,t1,1,s4\n");
        let agg = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(
            agg,
            "program,rank,target,insertion_test,score,would_check_ids\np1,1,g,t1,1,s4\n"
        );
    }

    #[test]
    fn zero_gap_program_has_no_rows() {
        let dir = tempfile::tempdir().unwrap();
        let src = "fn f(x) { return x + 1; } test t { r = f(1); assert r == 2; }";
        let r = rq3(&corpus("flat", src), &Settings::default(), dir.path()).unwrap();
        assert!(r.programs[0].1.items.is_empty());
        let per = fs::read_to_string(dir.path().join("flat/summary.csv")).unwrap();
        assert_eq!(per.lines().count(), 1);
    }

    #[test]
    fn p1_enrichment() {
        let dir = tempfile::tempdir().unwrap();
        let r = rq4(&corpus("p1", P1_SOURCE), &Settings::default(), dir.path()).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.added, "t1: assert g == 7;");
        assert_eq!(row.scc_before.to_string(), "80.00");
        assert_eq!(row.scc_after.to_string(), "100.00");
        assert!(row.score_after > row.score_before);
    }

    #[test]
    fn no_recommendation_means_no_change() {
        let dir = tempfile::tempdir().unwrap();
        let src = "fn f(x) { return x + 1; } test t { r = f(1); assert r == 2; }";
        let r = rq4(&corpus("flat", src), &Settings::default(), dir.path()).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.added, "");
        assert_eq!(row.scc_before, row.scc_after);
        assert_eq!(row.score_before, row.score_after);
    }
}

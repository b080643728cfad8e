//! Gap vs. mutation score over nested assertion-ablation variants.

use std::path::Path;

use crate::coverage::{GapReport, Pct};
use crate::lang::AssertionId;
use crate::mutation::{generate_mutants, run_mutation, Mutant, MutationRun};
use crate::pipeline::analyze;
use crate::stats::{format_coefficient, pearson, spearman, StatsError};
use crate::suitegen::generate_variants;

use super::{join_ids, parse_entry, CorpusEntry, CsvOut, ExperimentError, Settings};

#[derive(Debug, Clone, PartialEq)]
pub struct VariantRow {
    pub program: String,
    pub keep_rate: f64,
    pub seed: u64,
    pub n_enabled: usize,
    pub disabled: Vec<AssertionId>,
    pub gap: GapReport,
    pub mutants: usize,
    pub killed: usize,
    pub score: Option<Pct>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    /// Program name, or `pooled`.
    pub scope: String,
    pub n: usize,
    pub spearman: Result<f64, StatsError>,
    pub pearson: Result<f64, StatsError>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rq2Report {
    pub variants: Vec<VariantRow>,
    pub correlations: Vec<CorrelationRow>,
    /// Skipped programs and variants, one line each.
    pub diagnostics: Vec<String>,
}

impl Rq2Report {
    pub fn pooled(&self) -> Option<&CorrelationRow> {
        self.correlations.iter().find(|c| c.scope == "pooled")
    }
}

fn correlation(scope: &str, rows: &[&VariantRow]) -> CorrelationRow {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.score.map(|s| (r.gap.stmt_gap_pp.as_f64(), s.as_f64())))
        .collect();
    CorrelationRow {
        scope: scope.to_string(),
        n: points.len(),
        spearman: spearman(&points),
        pearson: pearson(&points),
    }
}

/// One row per mutant, then a `score` row carrying the score and the kill
/// count in the status and killing_test columns.
fn write_mutation_csv(path: &Path, mutants: &[Mutant], run: &MutationRun) -> Result<(), ExperimentError> {
    let mut w = CsvOut::create(
        path.to_path_buf(),
        &["mutant_id", "operator", "stmt", "status", "killing_test"],
    )?;
    for (m, r) in mutants.iter().zip(&run.results) {
        w.row([
            m.id.to_string(),
            m.operator.to_string(),
            m.stmt.to_string(),
            r.status.label().to_string(),
            r.status.killing_test().unwrap_or("").to_string(),
        ])?;
    }
    w.row(score_row(run))?;
    w.finish()
}

pub fn score_row(run: &MutationRun) -> [String; 5] {
    [
        "score".to_string(),
        String::new(),
        String::new(),
        run.score_pct.map_or("n/a".to_string(), |p| p.to_string()),
        format!("{}/{}", run.killed, run.results.len()),
    ]
}

/// Runs mutation analysis on every (keep rate, seed) variant of every
/// program; writes `gapkills.csv`, `correlation.csv`, `variants.csv` and
/// per-program `mutation.csv` for the unablated suite.
pub fn rq2(
    corpus: &[CorpusEntry],
    s: &Settings,
    out: &Path,
) -> Result<Rq2Report, ExperimentError> {
    let mut report = Rq2Report::default();
    let mcfg = s.mutation();
    for entry in corpus {
        let p = match parse_entry(entry) {
            Ok(p) => p,
            Err(e) => {
                report.diagnostics.push(format!("{}: skipped: {e}", entry.name));
                continue;
            }
        };
        let mutants = generate_mutants(&p, &s.ops);
        match run_mutation(&p, &mutants, &mcfg) {
            Ok(run) => write_mutation_csv(&out.join(&entry.name).join("mutation.csv"), &mutants, &run)?,
            Err(e) => {
                report.diagnostics.push(format!("{}: skipped: {e}", entry.name));
                continue;
            }
        }
        let variants = match generate_variants(&p, &s.keep_rates, &s.seeds) {
            Ok(v) => v,
            Err(e) => {
                report.diagnostics.push(format!("{}: skipped: {e}", entry.name));
                continue;
            }
        };
        for v in variants {
            let skip = |e: &dyn std::fmt::Display| {
                format!(
                    "{}: keep_rate {:.2} seed {}: skipped: {e}",
                    entry.name, v.keep_rate, v.seed
                )
            };
            let a = match analyze(&v.program, &s.exec) {
                Ok(a) => a,
                Err(e) => {
                    report.diagnostics.push(skip(&e));
                    continue;
                }
            };
            let enabled = |id: AssertionId| !v.disabled.contains(&id);
            let variant_mutants: Vec<Mutant> = mutants
                .iter()
                .map(|m| {
                    let mut m = m.clone();
                    m.program.set_enabled(enabled);
                    m
                })
                .collect();
            let run = match run_mutation(&v.program, &variant_mutants, &mcfg) {
                Ok(r) => r,
                Err(e) => {
                    report.diagnostics.push(skip(&e));
                    continue;
                }
            };
            report.variants.push(VariantRow {
                program: entry.name.clone(),
                keep_rate: v.keep_rate,
                seed: v.seed,
                n_enabled: v.n_enabled(),
                disabled: v.disabled.iter().copied().collect(),
                gap: a.gap,
                mutants: run.results.len(),
                killed: run.killed,
                score: run.score_pct,
            });
        }
    }

    for entry in corpus {
        let rows: Vec<&VariantRow> = report.variants.iter().filter(|r| r.program == entry.name).collect();
        if !rows.is_empty() {
            report.correlations.push(correlation(&entry.name, &rows));
        }
    }
    let all: Vec<&VariantRow> = report.variants.iter().collect();
    report.correlations.push(correlation("pooled", &all));

    let mut w = CsvOut::create(
        out.join("gapkills.csv"),
        &[
            "program",
            "keep_rate",
            "seed",
            "n_enabled",
            "stmt_gap_pp",
            "scc_pct",
            "mutants",
            "killed",
            "score_pct",
        ],
    )?;
    for r in &report.variants {
        w.row([
            r.program.clone(),
            format!("{:.2}", r.keep_rate),
            r.seed.to_string(),
            r.n_enabled.to_string(),
            r.gap.stmt_gap_pp.to_string(),
            r.gap.scc_pct.to_string(),
            r.mutants.to_string(),
            r.killed.to_string(),
            r.score.map_or("n/a".to_string(), |p| p.to_string()),
        ])?;
    }
    w.finish()?;

    let mut w = CsvOut::create(out.join("correlation.csv"), &["scope", "n", "spearman", "pearson"])?;
    for c in &report.correlations {
        w.row([
            c.scope.clone(),
            c.n.to_string(),
            format_coefficient(c.spearman),
            format_coefficient(c.pearson),
        ])?;
    }
    w.finish()?;

    let mut w = CsvOut::create(
        out.join("variants.csv"),
        &["program", "keep_rate", "seed", "n_enabled", "disabled_ids"],
    )?;
    for r in &report.variants {
        w.row([
            r.program.clone(),
            format!("{:.2}", r.keep_rate),
            r.seed.to_string(),
            r.n_enabled.to_string(),
            join_ids(&r.disabled),
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

    #[test]
    fn p1_grid() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = [CorpusEntry {
            name: "p1".into(),
            source: P1_SOURCE.into(),
        }];
        let r = rq2(&corpus, &Settings::default(), dir.path()).unwrap();
        assert_eq!(r.variants.len(), 20);
        assert!(r.diagnostics.is_empty());
        for chunk in r.variants.chunks(5) {
            let min_gap = chunk.iter().map(|v| v.gap.stmt_gap_pp).min().unwrap();
            assert_eq!(chunk[4].keep_rate, 1.0);
            assert_eq!(chunk[4].gap.stmt_gap_pp, min_gap);
        }
        let gk = fs::read_to_string(dir.path().join("gapkills.csv")).unwrap();
        assert_eq!(gk.lines().count(), 21);
        let m = fs::read_to_string(dir.path().join("p1/mutation.csv")).unwrap();
        assert!(m.starts_with("mutant_id,operator,stmt,status,killing_test\n"));
        assert!(m.ends_with("\nscore,,,64.29,9/14\n"), "{m}");
        let v = fs::read_to_string(dir.path().join("variants.csv")).unwrap();
        assert!(v.contains("p1,0.00,1,0,A1\n"));
    }

    #[test]
    fn single_variant_has_no_correlation() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = [CorpusEntry {
            name: "p1".into(),
            source: P1_SOURCE.into(),
        }];
        let s = Settings {
            keep_rates: vec![1.0],
            seeds: vec![1],
            ..Settings::default()
        };
        let r = rq2(&corpus, &s, dir.path()).unwrap();
        assert_eq!(r.pooled().unwrap().n, 1);
        let c = fs::read_to_string(dir.path().join("correlation.csv")).unwrap();
        assert!(c.contains("pooled,1,n/a,n/a\n"), "{c}");
    }

    #[test]
    fn red_suites_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = [CorpusEntry {
            name: "red".into(),
            source: "fn f() { return 1; } test t { x = f(); assert x == 2; }".into(),
        }];
        let r = rq2(&corpus, &Settings::default(), dir.path()).unwrap();
        assert!(r.variants.is_empty());
        assert_eq!(r.diagnostics.len(), 1);
        assert!(r.diagnostics[0].contains("not green"));
    }
}

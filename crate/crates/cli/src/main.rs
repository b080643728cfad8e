use std::collections::BTreeSet;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hccov_core::coverage::gap_statements;
use hccov_core::experiments::{self, load_corpus, CorpusEntry, Settings};
use hccov_core::interp::{run_suite, ExecConfig};
use hccov_core::lang::{self, print_program, Program};
use hccov_core::mutation::{generate_mutants, run_mutation, Operator};
use hccov_core::pipeline::analyze;
use hccov_core::recommender::{apply_recommendation, recommend};
use hccov_core::slicer::write_slices_jsonl;
use hccov_core::stats::format_coefficient;
use hccov_core::suitegen::{generate_variants, DEFAULT_KEEP_RATES, DEFAULT_SEEDS};

const DEFAULT_CORPUS: &str = "corpus";
const SMOKE_PROGRAM: &str = "corpus/p1_add_abs.sl";

#[derive(Parser)]
#[command(name = "hccov", version, about = "Checked coverage, coverage gaps and assertion recommendations for Slang programs")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Results directory (HCCOV_RESULTS takes precedence)
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Single ablation seed, used when --seeds is not given
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum trace events per test
    #[arg(long, global = true, default_value_t = hccov_core::interp::DEFAULT_STEP_LIMIT)]
    step_limit: usize,
    /// Comma-separated assertion keep rates in [0, 1]
    #[arg(long, global = true, value_delimiter = ',')]
    keep_rates: Option<Vec<f64>>,
    /// Comma-separated ablation seeds
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, global = true, default_value_t = experiments::DEFAULT_TOP_K)]
    top_k: usize,
    /// Comma-separated mutation operators (AOR, ROR, UOI, CRP, SDL)
    #[arg(long, global = true, value_delimiter = ',')]
    ops: Option<Vec<Operator>>,
    #[arg(long, global = true, default_value_t = true, action = clap::ArgAction::Set)]
    timeout_kills: bool,
    /// Worker threads for mutation analysis
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a program, then print it normalized
    Parse { file: PathBuf },
    /// Run every test and print its outcome
    Run { file: PathBuf },
    /// Print the execution trace of every test as JSON Lines
    Trace { file: PathBuf },
    /// Print one backward slice per executed assertion as JSON Lines
    Slice { file: PathBuf },
    /// Per-structure coverage and checked coverage
    Coverage { file: PathBuf },
    /// Coverage gap summary and gap statements
    Gap { file: PathBuf },
    /// Mutation analysis of the full suite
    Mutate { file: PathBuf },
    /// Assertion-ablation suite variants
    Variants { file: PathBuf },
    /// Top-k assertion recommendations for the gap statements
    Recommend { file: PathBuf },
    /// Print the program with its rank-1 recommendation applied
    Enrich { file: PathBuf },
    /// Coverage and checked coverage over a corpus
    Rq1 { corpus: Option<PathBuf> },
    /// Gap vs. mutation score over ablated suites
    Rq2 { corpus: Option<PathBuf> },
    /// Recommendations over a corpus
    Rq3 { corpus: Option<PathBuf> },
    /// SCC and mutation score before and after enrichment
    Rq4 { corpus: Option<PathBuf> },
    /// End-to-end smoke test
    Smoke { program: Option<PathBuf> },
}

impl GlobalOpts {
    fn settings(&self) -> Result<Settings> {
        if self.top_k == 0 {
            bail!("--top-k must be at least 1");
        }
        let seeds = match (&self.seeds, self.seed) {
            (Some(s), _) => s.clone(),
            (None, Some(s)) => vec![s],
            (None, None) => DEFAULT_SEEDS.to_vec(),
        };
        Ok(Settings {
            exec: ExecConfig {
                step_limit: self.step_limit,
                ..ExecConfig::default()
            },
            keep_rates: self.keep_rates.clone().unwrap_or_else(|| DEFAULT_KEEP_RATES.to_vec()),
            seeds,
            top_k: self.top_k,
            ops: match &self.ops {
                Some(ops) => ops.iter().copied().collect(),
                None => Operator::ALL.into_iter().collect::<BTreeSet<_>>(),
            },
            timeout_kills: self.timeout_kills,
            jobs: self.jobs,
        })
    }

    fn out_dir(&self) -> PathBuf {
        match std::env::var_os("HCCOV_RESULTS") {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.out.clone(),
        }
    }
}

fn load_program(path: &Path) -> Result<Program> {
    if path.is_dir() {
        bail!("{}: expected a .sl file, found a directory", path.display());
    }
    let entry = load_corpus(path)?.remove(0);
    lang::parse(&entry.source).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn corpus(path: &Option<PathBuf>) -> Result<Vec<CorpusEntry>> {
    let path = path.as_deref().unwrap_or(Path::new(DEFAULT_CORPUS));
    Ok(load_corpus(path)?)
}

fn run(cli: Cli) -> Result<bool> {
    let s = cli.global.settings()?;
    let out_dir = cli.global.out_dir();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Parse { file } => {
            let p = load_program(file)?;
            write!(out, "{}", print_program(&p))?;
        }
        Command::Run { file } => {
            let p = load_program(file)?;
            let suite = run_suite(&p, &ExecConfig { record: false, ..s.exec })?;
            let mut green = true;
            for run in suite.values() {
                green &= run.outcome.status.is_pass();
                writeln!(out, "{}: {} ({} steps)", run.outcome.test, run.outcome.status, run.outcome.steps)?;
            }
            return Ok(green);
        }
        Command::Trace { file } => {
            let p = load_program(file)?;
            for run in run_suite(&p, &s.exec)?.values() {
                run.trace.write_jsonl(&mut out)?;
            }
        }
        Command::Slice { file } => {
            let p = load_program(file)?;
            let a = analyze(&p, &s.exec)?;
            write_slices_jsonl(&a.slices, &mut out)?;
        }
        Command::Coverage { file } => {
            let p = load_program(file)?;
            let a = analyze(&p, &s.exec)?;
            writeln!(out, "structure,covered,checked")?;
            for (id, f) in &a.report.statements {
                writeln!(out, "{id},{},{}", f.covered, f.checked)?;
            }
            for (arm, f) in &a.report.arms {
                writeln!(out, "{arm},{},{}", f.covered, f.checked)?;
            }
        }
        Command::Gap { file } => {
            let p = load_program(file)?;
            let a = analyze(&p, &s.exec)?;
            let g = a.gap;
            writeln!(out, "statement coverage: {}", g.stmt_coverage_pct)?;
            writeln!(out, "SCC: {}", g.scc_pct)?;
            writeln!(out, "statement gap: {} pp", g.stmt_gap_pp)?;
            writeln!(out, "branch coverage: {}", g.branch_coverage_pct)?;
            writeln!(out, "OBCC: {}", g.obcc_pct)?;
            writeln!(out, "branch gap: {} pp", g.branch_gap_pp)?;
            let gaps: Vec<String> = gap_statements(&a.report).iter().map(|s| s.to_string()).collect();
            writeln!(out, "gap statements: {}", gaps.join(" "))?;
        }
        Command::Mutate { file } => {
            let p = load_program(file)?;
            let mutants = generate_mutants(&p, &s.ops);
            let run = run_mutation(&p, &mutants, &s.mutation())?;
            writeln!(out, "mutant_id,operator,stmt,status,killing_test")?;
            for (m, r) in mutants.iter().zip(&run.results) {
                let test = r.status.killing_test().unwrap_or("");
                writeln!(out, "{},{},{},{},{test}", m.id, m.operator, m.stmt, r.status.label())?;
            }
            writeln!(out, "{}", experiments::score_row(&run).join(","))?;
        }
        Command::Variants { file } => {
            let p = load_program(file)?;
            writeln!(out, "keep_rate,seed,n_enabled,disabled_ids")?;
            for v in generate_variants(&p, &s.keep_rates, &s.seeds)? {
                let ids: Vec<String> = v.disabled.iter().map(|a| a.to_string()).collect();
                writeln!(out, "{:.2},{},{},{}", v.keep_rate, v.seed, v.n_enabled(), ids.join(";"))?;
            }
        }
        Command::Recommend { file } => {
            let p = load_program(file)?;
            let a = analyze(&p, &s.exec)?;
            let recs = recommend(&p, &gap_statements(&a.report), s.top_k);
            writeln!(out, "rank,target,insertion_test,score,would_check_ids")?;
            for r in &recs.items {
                let ids: Vec<String> = r.would_check.iter().map(|s| s.to_string()).collect();
                writeln!(out, "{},{},{},{},{}", r.rank, r.target, r.test, r.score, ids.join(";"))?;
            }
            if !recs.unobservable.is_empty() {
                let ids: Vec<String> = recs.unobservable.iter().map(|s| s.to_string()).collect();
                writeln!(out, "# unobservable: {}", ids.join(" "))?;
            }
        }
        Command::Enrich { file } => {
            let p = load_program(file)?;
            let a = analyze(&p, &s.exec)?;
            let recs = recommend(&p, &gap_statements(&a.report), 1);
            let q = match recs.items.first() {
                Some(r) => apply_recommendation(&p, r, &s.exec)?,
                None => p,
            };
            write!(out, "{}", print_program(&q))?;
        }
        Command::Rq1 { corpus: c } => {
            let r = experiments::rq1(&corpus(c)?, &s, &out_dir)?;
            writeln!(out, "rq1: {} program(s) -> {}", r.rows.len(), out_dir.join("scc.csv").display())?;
            for row in r.rows.iter().filter(|r| !r.errors.is_empty()) {
                eprintln!("{}: {}", row.program, row.errors);
            }
        }
        Command::Rq2 { corpus: c } => {
            let r = experiments::rq2(&corpus(c)?, &s, &out_dir)?;
            for d in &r.diagnostics {
                eprintln!("{d}");
            }
            writeln!(out, "rq2: {} variant(s) -> {}", r.variants.len(), out_dir.join("gapkills.csv").display())?;
            if let Some(p) = r.pooled() {
                writeln!(out, "pooled spearman {} pearson {}", format_coefficient(p.spearman), format_coefficient(p.pearson))?;
            }
        }
        Command::Rq3 { corpus: c } => {
            let r = experiments::rq3(&corpus(c)?, &s, &out_dir)?;
            for d in &r.diagnostics {
                eprintln!("{d}");
            }
            let n: usize = r.programs.iter().map(|(_, recs)| recs.items.len()).sum();
            writeln!(out, "rq3: {n} recommendation(s) -> {}", out_dir.join("summary.csv").display())?;
        }
        Command::Rq4 { corpus: c } => {
            let r = experiments::rq4(&corpus(c)?, &s, &out_dir)?;
            for d in &r.diagnostics {
                eprintln!("{d}");
            }
            writeln!(out, "rq4: {} program(s) -> {}", r.rows.len(), out_dir.join("enrichment.csv").display())?;
        }
        Command::Smoke { program } => {
            let program = program.clone().unwrap_or_else(|| PathBuf::from(SMOKE_PROGRAM));
            let report = experiments::smoke(&program, &s, &out_dir, &mut out)
                .with_context(|| format!("smoke test on {}", program.display()))?;
            return Ok(report.ok());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e)
            if e
                .downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

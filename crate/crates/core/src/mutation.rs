//! First-order mutants and kill analysis.
//!
//! Mutants are only ever killed by a failing assertion, a trap, or a
//! timeout. Slang has no output to diff, so oracle strength alone decides
//! which semantic changes are detected.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::coverage::Pct;
use crate::interp::{run_test, ExecConfig, ExecError, TestStatus, TrapKind};
use crate::lang::{
    self, stmt_header, walk_stmts_mut, AssertionId, BinOp, Expr, Program, StatementId, Stmt,
    StmtKind, StmtRef, UnOp,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operator {
    /// Arithmetic operator replacement.
    Aor,
    /// Relational operator replacement.
    Ror,
    /// Negate an if/while condition.
    NegateCondition,
    /// Integer constant replacement.
    Crp,
    /// Statement deletion.
    Sdl,
}

impl Operator {
    pub const ALL: [Operator; 5] = [
        Operator::Aor,
        Operator::Ror,
        Operator::NegateCondition,
        Operator::Crp,
        Operator::Sdl,
    ];
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operator::Aor => "AOR",
            Operator::Ror => "ROR",
            Operator::NegateCondition => "UOI",
            Operator::Crp => "CRP",
            Operator::Sdl => "SDL",
        })
    }
}

impl FromStr for Operator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AOR" => Ok(Operator::Aor),
            "ROR" => Ok(Operator::Ror),
            "UOI" | "NEG" => Ok(Operator::NegateCondition),
            "CRP" => Ok(Operator::Crp),
            "SDL" => Ok(Operator::Sdl),
            other => Err(format!("unknown mutation operator `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mutant {
    pub id: usize,
    pub operator: Operator,
    pub stmt: StatementId,
    pub description: String,
    pub program: Program,
}

fn aor_replacement(op: BinOp) -> Option<BinOp> {
    Some(match op {
        BinOp::Add => BinOp::Sub,
        BinOp::Sub => BinOp::Add,
        BinOp::Mul => BinOp::Div,
        BinOp::Div => BinOp::Mul,
        BinOp::Rem => BinOp::Mul,
        _ => return None,
    })
}

const RELATIONAL: [BinOp; 6] = [BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne];

fn is_boolean(e: &Expr) -> bool {
    match e {
        Expr::Bool(_) => true,
        Expr::Unary { op, .. } => *op == UnOp::Not,
        Expr::Binary { op, .. } => op.is_relational() || matches!(op, BinOp::And | BinOp::Or),
        _ => false,
    }
}

fn ror_replacements(op: BinOp, lhs: &Expr, rhs: &Expr) -> Vec<BinOp> {
    if !op.is_relational() {
        return Vec::new();
    }
    // booleans only compare with == and !=
    let boolean = is_boolean(lhs) || is_boolean(rhs);
    RELATIONAL
        .iter()
        .copied()
        .filter(|&r| r != op)
        .filter(|r| !boolean || matches!(r, BinOp::Eq | BinOp::Ne))
        .collect()
}

fn crp_replacements(c: i64) -> Vec<i64> {
    if c == 0 {
        return vec![1];
    }
    let mut out = Vec::new();
    for v in [c.wrapping_add(1), c.wrapping_sub(1), 0] {
        if v != c && !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Expression-level rewrites available at one statement, in site order.
fn expr_rewrites(stmt: &Stmt, op: Operator) -> Vec<Rewrite> {
    let mut out = Vec::new();
    let mut site = 0usize;
    for e in stmt.own_exprs() {
        e.walk(&mut |node| {
            match (op, node) {
                (Operator::Aor, Expr::Binary { op, .. }) => {
                    if let Some(r) = aor_replacement(*op) {
                        out.push(Rewrite::Bin(site, r));
                    }
                }
                (Operator::Ror, Expr::Binary { op, lhs, rhs }) => {
                    for r in ror_replacements(*op, lhs, rhs) {
                        out.push(Rewrite::Bin(site, r));
                    }
                }
                (Operator::Crp, Expr::Int(c)) => {
                    for v in crp_replacements(*c) {
                        out.push(Rewrite::Int(site, v));
                    }
                }
                _ => {}
            }
            site += 1;
        });
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum Rewrite {
    /// Replace the operator of the binary node at walk position `.0`.
    Bin(usize, BinOp),
    /// Replace the literal at walk position `.0`.
    Int(usize, i64),
}

fn apply_rewrite(stmt: &mut Stmt, rw: Rewrite) {
    let mut site = 0usize;
    for e in stmt.own_exprs_mut() {
        e.walk_mut(&mut |node| {
            match (rw, node) {
                (Rewrite::Bin(at, new), Expr::Binary { op, .. }) if at == site => *op = new,
                (Rewrite::Int(at, new), Expr::Int(c)) if at == site => *c = new,
                _ => {}
            }
            site += 1;
        });
    }
}

fn with_stmt(p: &Program, id: StatementId, f: impl FnOnce(&mut Stmt)) -> Program {
    let mut q = p.clone();
    let mut f = Some(f);
    for func in q.functions_mut() {
        walk_stmts_mut(&mut func.body, &mut |s| {
            if s.id == StmtRef::Stmt(id) {
                if let Some(f) = f.take() {
                    f(s);
                }
            }
        });
    }
    q
}

fn remove_stmt(body: &mut Vec<Stmt>, id: StmtRef) -> bool {
    if let Some(pos) = body.iter().position(|s| s.id == id) {
        body.remove(pos);
        return true;
    }
    body.iter_mut().any(|s| match &mut s.kind {
        StmtKind::If {
            then_body,
            else_body,
            ..
        } => remove_stmt(then_body, id) || remove_stmt(else_body, id),
        StmtKind::While { body, .. } => remove_stmt(body, id),
        _ => false,
    })
}

fn is_sole_return(p: &Program, id: StatementId) -> bool {
    for f in p.functions() {
        let mut returns = Vec::new();
        lang::walk_stmts(&f.body, &mut |s| {
            if matches!(s.kind, StmtKind::Return(_)) {
                returns.push(s.id);
            }
        });
        if returns.contains(&StmtRef::Stmt(id)) {
            return returns.len() == 1;
        }
    }
    false
}

/// Every applicable site of every selected operator yields one mutant,
/// ordered by statement id, then operator, then site. Mutants that would
/// not pass the static checks are skipped.
pub fn generate_mutants(p: &Program, ops: &BTreeSet<Operator>) -> Vec<Mutant> {
    let mut out = Vec::new();
    let mut put: Vec<&Stmt> = p.put_statements();
    put.sort_by_key(|s| s.id);
    for stmt in put {
        let Some(id) = stmt.id.statement() else { continue };
        let before = stmt_header(stmt);
        for &op in ops {
            let mut candidates: Vec<(Program, String)> = Vec::new();
            match op {
                Operator::Aor | Operator::Ror | Operator::Crp => {
                    for rw in expr_rewrites(stmt, op) {
                        let q = with_stmt(p, id, |s| apply_rewrite(s, rw));
                        let after = q.find_stmt(stmt.id).map(stmt_header).unwrap_or_default();
                        candidates.push((q, format!("{id}: `{before}` -> `{after}`")));
                    }
                }
                Operator::NegateCondition => {
                    if stmt.is_predicate() {
                        let q = with_stmt(p, id, |s| {
                            if let StmtKind::If { cond, .. } | StmtKind::While { cond, .. } =
                                &mut s.kind
                            {
                                let inner = std::mem::replace(cond, Expr::Bool(true));
                                *cond = Expr::Unary {
                                    op: UnOp::Not,
                                    expr: Box::new(inner),
                                };
                            }
                        });
                        let after = q.find_stmt(stmt.id).map(stmt_header).unwrap_or_default();
                        candidates.push((q, format!("{id}: `{before}` -> `{after}`")));
                    }
                }
                Operator::Sdl => {
                    if !is_sole_return(p, id) {
                        let mut q = p.clone();
                        for f in q.functions_mut() {
                            if remove_stmt(&mut f.body, stmt.id) {
                                break;
                            }
                        }
                        candidates.push((q, format!("{id}: delete `{before}`")));
                    }
                }
            }
            for (program, description) in candidates {
                if lang::check(&program).is_err() {
                    continue;
                }
                out.push(Mutant {
                    id: out.len() + 1,
                    operator: op,
                    stmt: id,
                    description,
                    program,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MutationStatus {
    KilledByAssertion { test: String, site: AssertionId },
    KilledByTrap { test: String, kind: TrapKind },
    Timeout { test: String },
    Survived,
}

impl MutationStatus {
    pub fn label(&self) -> &'static str {
        match self {
            MutationStatus::KilledByAssertion { .. } => "killed-by-assertion",
            MutationStatus::KilledByTrap { .. } => "killed-by-trap",
            MutationStatus::Timeout { .. } => "timeout",
            MutationStatus::Survived => "survived",
        }
    }

    pub fn killing_test(&self) -> Option<&str> {
        match self {
            MutationStatus::KilledByAssertion { test, .. }
            | MutationStatus::KilledByTrap { test, .. }
            | MutationStatus::Timeout { test } => Some(test),
            MutationStatus::Survived => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationResult {
    pub mutant_id: usize,
    pub operator: Operator,
    pub stmt: StatementId,
    pub status: MutationStatus,
    pub killed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MutationConfig {
    /// Step limit for the green-suite run of the original program.
    pub step_limit: usize,
    pub max_depth: usize,
    /// Count timeouts as kills.
    pub timeout_kills: bool,
    /// Worker threads; 0 or 1 runs sequentially.
    pub jobs: usize,
}

impl Default for MutationConfig {
    fn default() -> Self {
        let exec = ExecConfig::default();
        MutationConfig {
            step_limit: exec.step_limit,
            max_depth: exec.max_depth,
            timeout_kills: true,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationRun {
    pub results: Vec<MutationResult>,
    pub killed: usize,
    /// `None` when there are no mutants.
    pub score_pct: Option<Pct>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MutationError {
    #[error("suite is not green on the original program: test `{test}` ended with {status}")]
    NotGreen { test: String, status: TestStatus },
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("failed to start worker pool: {0}")]
    Pool(String),
}

fn run_one(
    m: &Mutant,
    tests: &[String],
    exec: &ExecConfig,
    timeout_kills: bool,
) -> Result<MutationResult, ExecError> {
    let mut timed_out: Option<String> = None;
    let mut status = None;
    for t in tests {
        let run = run_test(&m.program, t, exec)?;
        match run.outcome.status {
            TestStatus::Pass => {}
            TestStatus::AssertionFailure(site) => {
                status = Some(MutationStatus::KilledByAssertion {
                    test: t.clone(),
                    site,
                });
                break;
            }
            TestStatus::Trap { kind, .. } => {
                status = Some(MutationStatus::KilledByTrap {
                    test: t.clone(),
                    kind,
                });
                break;
            }
            TestStatus::Timeout => {
                if timeout_kills {
                    status = Some(MutationStatus::Timeout { test: t.clone() });
                    break;
                }
                timed_out.get_or_insert_with(|| t.clone());
            }
        }
    }
    let status = status.unwrap_or(match timed_out {
        Some(test) => MutationStatus::Timeout { test },
        None => MutationStatus::Survived,
    });
    let killed = match status {
        MutationStatus::Survived => false,
        MutationStatus::Timeout { .. } => timeout_kills,
        _ => true,
    };
    Ok(MutationResult {
        mutant_id: m.id,
        operator: m.operator,
        stmt: m.stmt,
        status,
        killed,
    })
}

/// Runs every mutant against the full enabled-assertion suite. Each test of
/// a mutant gets a step budget of ten times the original suite's total.
pub fn run_mutation(
    p: &Program,
    mutants: &[Mutant],
    cfg: &MutationConfig,
) -> Result<MutationRun, MutationError> {
    let base = ExecConfig {
        step_limit: cfg.step_limit,
        max_depth: cfg.max_depth,
        record: false,
    };
    let tests: Vec<String> = p.tests().map(|t| t.name.clone()).collect();
    let mut suite_steps = 0usize;
    for t in &tests {
        let run = run_test(p, t, &base)?;
        if !run.outcome.status.is_pass() {
            return Err(MutationError::NotGreen {
                test: t.clone(),
                status: run.outcome.status,
            });
        }
        suite_steps += run.outcome.steps;
    }
    let exec = ExecConfig {
        step_limit: suite_steps.saturating_mul(10).max(1),
        ..base
    };
    let results: Result<Vec<_>, ExecError> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| MutationError::Pool(e.to_string()))?;
        pool.install(|| {
            mutants
                .par_iter()
                .map(|m| run_one(m, &tests, &exec, cfg.timeout_kills))
                .collect()
        })
    } else {
        mutants
            .iter()
            .map(|m| run_one(m, &tests, &exec, cfg.timeout_kills))
            .collect()
    };
    let results = results?;
    let killed = results.iter().filter(|r| r.killed).count();
    let score_pct = (!results.is_empty()).then(|| Pct::ratio(killed, results.len()));
    Ok(MutationRun {
        results,
        killed,
        score_pct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, P1_SOURCE};

    fn ops(list: &[Operator]) -> BTreeSet<Operator> {
        list.iter().copied().collect()
    }

    #[test]
    fn single_return_zero() {
        let p = parse("fn f() { return 0; }").unwrap();
        let all = generate_mutants(&p, &ops(&Operator::ALL));
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].operator, Operator::Crp);
        assert!(all[0].description.contains("return 1;"));
        assert!(generate_mutants(&p, &ops(&[Operator::Ror])).is_empty());
    }

    #[test]
    fn p1_aor_ror_sites() {
        let p = parse(P1_SOURCE).unwrap();
        let ms = generate_mutants(&p, &ops(&[Operator::Aor, Operator::Ror]));
        let summary: Vec<(Operator, u32)> = ms.iter().map(|m| (m.operator, m.stmt.0)).collect();
        assert_eq!(
            summary,
            vec![
                (Operator::Aor, 1),
                (Operator::Ror, 2),
                (Operator::Ror, 2),
                (Operator::Ror, 2),
                (Operator::Ror, 2),
                (Operator::Ror, 2),
                (Operator::Aor, 3),
                (Operator::Aor, 4),
            ]
        );
        assert_eq!(ms[0].description, "s1: `d = a - b;` -> `d = a + b;`");
        assert_eq!(ms[6].description, "s3: `d = 0 - d;` -> `d = 0 + d;`");
        assert_eq!(ms[7].description, "s4: `g = a + b;` -> `g = a - b;`");
        let ids: Vec<usize> = ms.iter().map(|m| m.id).collect();
        assert_eq!(ids, (1..=8).collect::<Vec<_>>());
    }

    #[test]
    fn no_operators_no_mutants() {
        let p = parse(P1_SOURCE).unwrap();
        assert!(generate_mutants(&p, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn sdl_skips_ill_formed_deletions() {
        let p = parse(P1_SOURCE).unwrap();
        let ms = generate_mutants(&p, &ops(&[Operator::Sdl]));
        // s1 defines d before its first read; s5 is the sole return
        let stmts: Vec<u32> = ms.iter().map(|m| m.stmt.0).collect();
        assert_eq!(stmts, vec![2, 3, 4]);
        for m in &ms {
            assert!(lang::check(&m.program).is_ok());
        }
    }

    #[test]
    fn mutants_differ_in_one_statement_and_round_trip() {
        let p = parse(P1_SOURCE).unwrap();
        for m in generate_mutants(&p, &ops(&Operator::ALL)) {
            let printed = lang::print_program(&m.program);
            let reparsed = parse(&printed).expect("mutant must parse");
            assert_eq!(lang::print_program(&reparsed), printed);
            if m.operator != Operator::Sdl {
                let orig: Vec<_> = p.put_statements().into_iter().map(stmt_header).collect();
                let mutated: Vec<_> =
                    m.program.put_statements().into_iter().map(stmt_header).collect();
                let diffs = orig.iter().zip(&mutated).filter(|(a, b)| a != b).count();
                assert_eq!(diffs, 1, "{}", m.description);
            }
        }
    }

    #[test]
    fn p1_kills() {
        let p = parse(P1_SOURCE).unwrap();
        let ms = generate_mutants(&p, &ops(&[Operator::Aor]));
        let run = run_mutation(&p, &ms, &MutationConfig::default()).unwrap();
        // s1 - -> +: d = 7, branch not taken, returns 7, A1 fails
        assert_eq!(
            run.results[0].status,
            MutationStatus::KilledByAssertion {
                test: "t1".into(),
                site: AssertionId(1)
            }
        );
        // s4 + -> -: g = -3, nobody asserts on g
        assert_eq!(run.results[2].status, MutationStatus::Survived);
        assert_eq!(run.killed, 2);
        assert_eq!(run.score_pct.unwrap().to_string(), "66.67");
    }

    #[test]
    fn zero_mutants_is_na() {
        let p = parse(P1_SOURCE).unwrap();
        let run = run_mutation(&p, &[], &MutationConfig::default()).unwrap();
        assert_eq!(run.score_pct, None);
    }

    #[test]
    fn red_suite_is_rejected() {
        let p = parse("fn f() { return 1; } test bad { x = f(); assert x == 2; }").unwrap();
        let ms = generate_mutants(&p, &ops(&Operator::ALL));
        let err = run_mutation(&p, &ms, &MutationConfig::default()).unwrap_err();
        assert!(matches!(err, MutationError::NotGreen { ref test, .. } if test == "bad"));
        assert!(err.to_string().contains("`bad`"));
    }

    #[test]
    fn timeouts_are_configurable() {
        let src = "fn f(n) { i = 0; while (i < n) { i = i + 1; } return i; }
            test t { r = f(3); }";
        let p = parse(src).unwrap();
        let ms: Vec<_> = generate_mutants(&p, &ops(&[Operator::Sdl]))
            .into_iter()
            .filter(|m| m.description.contains("i = i + 1"))
            .collect();
        assert_eq!(ms.len(), 1);
        let on = run_mutation(&p, &ms, &MutationConfig::default()).unwrap();
        assert_eq!(on.results[0].status, MutationStatus::Timeout { test: "t".into() });
        assert!(on.results[0].killed);
        let off = run_mutation(
            &p,
            &ms,
            &MutationConfig {
                timeout_kills: false,
                ..MutationConfig::default()
            },
        )
        .unwrap();
        assert_eq!(off.results[0].status.label(), "timeout");
        assert!(!off.results[0].killed);
        assert_eq!(off.score_pct, Some(Pct(0)));
    }

    #[test]
    fn parallel_matches_sequential() {
        let p = parse(P1_SOURCE).unwrap();
        let ms = generate_mutants(&p, &ops(&Operator::ALL));
        let seq = run_mutation(&p, &ms, &MutationConfig::default()).unwrap();
        let par = run_mutation(
            &p,
            &ms,
            &MutationConfig {
                jobs: 4,
                ..MutationConfig::default()
            },
        )
        .unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn operator_parsing() {
        assert_eq!("aor".parse::<Operator>(), Ok(Operator::Aor));
        assert_eq!("UOI".parse::<Operator>(), Ok(Operator::NegateCondition));
        assert!("XYZ".parse::<Operator>().is_err());
    }
}

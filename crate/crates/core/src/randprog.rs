//! Seeded random Slang programs for differential testing.
//!
//! Programs are well-formed by construction: variables are read only after
//! an assignment that dominates the read, loops count a private counter up
//! to a small literal bound, functions only call earlier functions, and
//! array indices are literals within bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ARRAY_LEN: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    /// Upper bound on the number of statements, tests included.
    pub max_statements: usize,
    pub max_functions: usize,
    pub max_globals: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_statements: 40,
            max_functions: 3,
            max_globals: 2,
        }
    }
}

struct Gen {
    rng: ChaCha8Rng,
    budget: usize,
    globals: Vec<String>,
    has_array: bool,
    /// (name, arity) of already generated functions.
    functions: Vec<(String, usize)>,
    counter: usize,
    out: String,
}

#[derive(Clone)]
struct Scope {
    /// Readable and assignable names.
    vars: Vec<String>,
    /// Readable loop counters; never assigned by generated code.
    counters: Vec<String>,
    depth: usize,
    in_function: bool,
}

impl Gen {
    fn line(&mut self, indent: usize, s: &str) {
        for _ in 0..indent {
            self.out.push_str("  ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn int_expr(&mut self, sc: &Scope, depth: usize) -> String {
        let leaf = depth == 0 || self.rng.random_bool(0.35);
        if leaf {
            let readable = sc.vars.len() + sc.counters.len();
            return match self.rng.random_range(0..10) {
                0..=2 => self.rng.random_range(-3..10).to_string(),
                3 if self.has_array => {
                    format!("buf[{}]", self.rng.random_range(0..ARRAY_LEN))
                }
                _ if readable > 0 => {
                    let i = self.rng.random_range(0..readable);
                    sc.vars.iter().chain(&sc.counters).nth(i).cloned().unwrap_or_default()
                }
                _ => self.rng.random_range(0..5).to_string(),
            };
        }
        match self.rng.random_range(0..10) {
            0 if !self.functions.is_empty() && sc.in_function => self.call_expr(sc, depth - 1),
            1 => format!("{} % {}", self.paren_int(sc, depth - 1), self.rng.random_range(2..5)),
            2 => format!("-({})", self.int_expr(sc, depth - 1)),
            n => {
                let op = ["+", "-", "*"][n % 3];
                format!("{} {op} {}", self.paren_int(sc, depth - 1), self.paren_int(sc, depth - 1))
            }
        }
    }

    fn paren_int(&mut self, sc: &Scope, depth: usize) -> String {
        format!("({})", self.int_expr(sc, depth))
    }

    fn call_expr(&mut self, sc: &Scope, depth: usize) -> String {
        let i = self.rng.random_range(0..self.functions.len());
        let (name, arity) = self.functions[i].clone();
        let args: Vec<String> = (0..arity).map(|_| self.int_expr(sc, depth)).collect();
        format!("{name}({})", args.join(", "))
    }

    fn bool_expr(&mut self, sc: &Scope, depth: usize) -> String {
        let rel = ["<", "<=", ">", ">=", "==", "!="][self.rng.random_range(0..6)];
        let base = format!("{} {rel} {}", self.paren_int(sc, 1), self.paren_int(sc, 1));
        if depth == 0 {
            return base;
        }
        match self.rng.random_range(0..6) {
            0 => format!("({base}) && ({})", self.bool_expr(sc, depth - 1)),
            1 => format!("({base}) || ({})", self.bool_expr(sc, depth - 1)),
            2 => format!("!({base})"),
            _ => base,
        }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.counter += 1;
        format!("{prefix}{}", self.counter)
    }

    fn block(&mut self, sc: &mut Scope, indent: usize, max_len: usize) {
        let len = self.rng.random_range(1..=max_len);
        for _ in 0..len {
            if self.budget == 0 {
                break;
            }
            self.statement(sc, indent);
        }
    }

    fn statement(&mut self, sc: &mut Scope, indent: usize) {
        self.budget -= 1;
        let nest_ok = sc.depth < 2 && self.budget >= 3;
        match self.rng.random_range(0..10) {
            0 | 1 if nest_ok => {
                let cond = self.bool_expr(sc, 1);
                self.line(indent, &format!("if ({cond}) {{"));
                let mut inner = Scope { depth: sc.depth + 1, ..sc.clone() };
                self.block(&mut inner, indent + 1, 3);
                if self.rng.random_bool(0.5) && self.budget > 0 {
                    self.line(indent, "} else {");
                    let mut inner = Scope { depth: sc.depth + 1, ..sc.clone() };
                    self.block(&mut inner, indent + 1, 2);
                }
                self.line(indent, "}");
            }
            2 if nest_ok && self.budget >= 4 => {
                // counter init + loop + increment
                self.budget -= 2;
                let k = self.fresh("k");
                self.line(indent, &format!("{k} = 0;"));
                let bound = self.rng.random_range(1..5);
                self.line(indent, &format!("while ({k} < {bound}) {{"));
                let mut inner = Scope { depth: sc.depth + 1, ..sc.clone() };
                inner.counters.push(k.clone());
                self.block(&mut inner, indent + 1, 3);
                self.line(indent + 1, &format!("{k} = {k} + 1;"));
                self.line(indent, "}");
                sc.counters.push(k);
            }
            3 if self.has_array => {
                let i = self.rng.random_range(0..ARRAY_LEN);
                let v = self.int_expr(sc, 2);
                self.line(indent, &format!("buf[{i}] = {v};"));
            }
            4 if sc.in_function && sc.depth > 0 && self.rng.random_bool(0.3) => {
                let v = self.int_expr(sc, 2);
                self.line(indent, &format!("return {v};"));
            }
            _ => {
                let v = self.int_expr(sc, 2);
                let target = match self.rng.random_range(0..4) {
                    0 if !self.globals.is_empty() => {
                        self.globals[self.rng.random_range(0..self.globals.len())].clone()
                    }
                    1 if !sc.vars.is_empty() => sc.vars[self.rng.random_range(0..sc.vars.len())].clone(),
                    _ => self.fresh("v"),
                };
                self.line(indent, &format!("{target} = {v};"));
                if !sc.vars.contains(&target) {
                    sc.vars.push(target);
                }
            }
        }
    }
}

/// Generates the source of a random well-formed program for `seed`.
pub fn random_program(seed: u64, cfg: &GenConfig) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        budget: cfg.max_statements,
        globals: Vec::new(),
        has_array: false,
        functions: Vec::new(),
        counter: 0,
        out: String::new(),
    };
    let n_globals = g.rng.random_range(0..=cfg.max_globals);
    for i in 0..n_globals {
        let init = g.rng.random_range(-2..5);
        g.line(0, &format!("global gv{i} = {init};"));
        g.globals.push(format!("gv{i}"));
    }
    if g.rng.random_bool(0.4) {
        g.line(0, &format!("global buf[{ARRAY_LEN}];"));
        g.has_array = true;
    }
    let n_functions = g.rng.random_range(1..=cfg.max_functions.max(1));
    // keep a few statements for the tests
    let test_reserve = 6.min(cfg.max_statements / 3);
    for fi in 0..n_functions {
        if g.budget <= test_reserve + 1 {
            break;
        }
        let arity = g.rng.random_range(0..3);
        let params: Vec<String> = (0..arity).map(|i| format!("p{i}")).collect();
        let name = format!("f{fi}");
        g.line(0, &format!("fn {name}({}) {{", params.join(", ")));
        let mut sc = Scope {
            vars: params.clone(),
            counters: Vec::new(),
            depth: 0,
            in_function: true,
        };
        let per_fn = ((g.budget - test_reserve) / (n_functions - fi)).max(2);
        let saved = g.budget;
        g.budget = per_fn - 1;
        g.block(&mut sc, 1, per_fn.saturating_sub(1).max(1));
        let used = per_fn - 1 - g.budget;
        g.budget = saved - used - 1;
        let ret = g.int_expr(&sc, 2);
        g.line(1, &format!("return {ret};"));
        g.line(0, "}");
        g.functions.push((name, arity));
    }
    let n_tests = g.rng.random_range(1..=2);
    for ti in 0..n_tests {
        if g.budget < 2 {
            break;
        }
        g.line(0, &format!("test t{ti} {{"));
        let mut sc = Scope {
            vars: Vec::new(),
            counters: Vec::new(),
            depth: 0,
            in_function: false,
        };
        let calls = g.rng.random_range(1..=2).min(g.budget - 1);
        for _ in 0..calls {
            let r = g.fresh("r");
            let e = g.call_expr(&sc, 1);
            g.line(1, &format!("{r} = {e};"));
            sc.vars.push(r);
            g.budget -= 1;
        }
        let asserts = g.rng.random_range(1..=3).min(g.budget.max(1));
        for _ in 0..asserts {
            let c = g.bool_expr(&Scope { in_function: false, ..sc.clone() }, 0);
            g.line(1, &format!("assert {c};"));
            g.budget = g.budget.saturating_sub(1);
        }
        g.line(0, "}");
    }
    g.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{run_suite, ExecConfig};
    use crate::lang::{parse, walk_stmts};

    fn statement_count(src: &str) -> usize {
        let p = parse(src).unwrap();
        let mut n = 0;
        for f in p.functions() {
            walk_stmts(&f.body, &mut |_| n += 1);
        }
        for t in p.tests() {
            walk_stmts(&t.body, &mut |_| n += 1);
        }
        n
    }

    #[test]
    fn deterministic() {
        let cfg = GenConfig::default();
        assert_eq!(random_program(9, &cfg), random_program(9, &cfg));
        assert_ne!(random_program(9, &cfg), random_program(10, &cfg));
    }

    #[test]
    fn programs_are_well_formed_and_small() {
        let cfg = GenConfig::default();
        for seed in 0..300 {
            let src = random_program(seed, &cfg);
            let p = parse(&src).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{src}"));
            assert!(statement_count(&src) <= cfg.max_statements, "seed {seed}\n{src}");
            assert!(p.tests().count() >= 1);
            let suite = run_suite(&p, &ExecConfig::default()).unwrap();
            for run in suite.values() {
                assert!(
                    !matches!(run.outcome.status, crate::interp::TestStatus::Trap { .. } | crate::interp::TestStatus::Timeout),
                    "seed {seed}: {:?}\n{src}",
                    run.outcome.status
                );
            }
        }
    }
}

//! Random terminating functions over the supported statement forms.
#![allow(dead_code)]

use plsql_away::Value;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Gen {
    rng: ChaCha8Rng,
    out: String,
    /// Enclosing loops' labels, innermost last; `None` for unlabelled loops.
    loops: Vec<Option<String>>,
    /// FOR variables in scope.
    loop_vars: Vec<String>,
    counters: usize,
}

const VARS: [&str; 5] = ["a", "b", "x", "y", "z"];

impl Gen {
    fn pad(&mut self, depth: usize) {
        self.out.push_str(&"  ".repeat(depth));
    }

    fn var(&mut self) -> String {
        let k = self.rng.gen_range(0..VARS.len() + self.loop_vars.len());
        VARS.get(k)
            .map_or_else(|| self.loop_vars[k - VARS.len()].clone(), |v| v.to_string())
    }

    fn expr(&mut self, depth: usize) -> String {
        match self.rng.gen_range(0..if depth == 0 { 2 } else { 7 }) {
            0 => self.rng.gen_range(-3..10).to_string(),
            1 => self.var(),
            2 => format!("{} + {}", self.expr(depth - 1), self.expr(depth - 1)),
            3 => format!("{} - ({})", self.expr(depth - 1), self.expr(depth - 1)),
            4 => format!("({}) * {}", self.expr(depth - 1), self.rng.gen_range(-2..4)),
            5 => format!("coalesce({}, {})", self.var(), self.expr(depth - 1)),
            _ => format!(
                "{}({})",
                ["abs", "sign"][self.rng.gen_range(0..2)],
                self.expr(depth - 1)
            ),
        }
    }

    fn cond(&mut self, depth: usize) -> String {
        match self.rng.gen_range(0..if depth == 0 { 2 } else { 5 }) {
            0 => {
                let op = ["<", "<=", "=", "<>", ">", ">="][self.rng.gen_range(0..6)];
                format!("{} {op} {}", self.expr(1), self.expr(1))
            }
            1 => format!("{} IS NULL", self.var()),
            2 => format!("({}) AND ({})", self.cond(depth - 1), self.cond(depth - 1)),
            3 => format!("({}) OR ({})", self.cond(depth - 1), self.cond(depth - 1)),
            _ => format!("NOT ({})", self.cond(depth - 1)),
        }
    }

    fn block(&mut self, depth: usize, budget: usize) {
        let n = self.rng.gen_range(1..=3);
        for _ in 0..n {
            self.stmt(depth, budget);
        }
    }

    fn loop_control(&mut self, depth: usize) {
        let kw = if self.rng.gen_bool(0.5) {
            "EXIT"
        } else {
            "CONTINUE"
        };
        let k = self.rng.gen_range(0..self.loops.len());
        let label = match (&self.loops[k], self.rng.gen_bool(0.5)) {
            (Some(l), true) => format!(" {l}"),
            _ => String::new(),
        };
        let when = if self.rng.gen_bool(0.8) {
            format!(" WHEN {}", self.cond(1))
        } else {
            String::new()
        };
        self.pad(depth);
        self.out.push_str(&format!("{kw}{label}{when};\n"));
    }

    fn stmt(&mut self, depth: usize, budget: usize) {
        let choice = if budget == 0 {
            self.rng.gen_range(0..3)
        } else {
            self.rng.gen_range(0..9)
        };
        match choice {
            2 if !self.loops.is_empty() => self.loop_control(depth),
            0..=2 if budget == 0 => {
                let v = ["x", "y", "z", "a", "b"][self.rng.gen_range(0..5)];
                let e = self.expr(2);
                self.pad(depth);
                self.out.push_str(&format!("{v} = {e};\n"));
            }
            0 | 1 => {
                let v = ["x", "y", "z", "a", "b"][self.rng.gen_range(0..5)];
                let e = self.expr(2);
                self.pad(depth);
                self.out.push_str(&format!("{v} = {e};\n"));
            }
            2 | 3 => {
                let c = self.cond(2);
                self.pad(depth);
                self.out.push_str(&format!("IF {c} THEN\n"));
                self.block(depth + 1, budget - 1);
                if self.rng.gen_bool(0.3) {
                    let c = self.cond(1);
                    self.pad(depth);
                    self.out.push_str(&format!("ELSIF {c} THEN\n"));
                    self.block(depth + 1, budget - 1);
                }
                if self.rng.gen_bool(0.5) {
                    self.pad(depth);
                    self.out.push_str("ELSE\n");
                    self.block(depth + 1, budget - 1);
                }
                self.pad(depth);
                self.out.push_str("END IF;\n");
            }
            4 => {
                let e = self.expr(1);
                self.pad(depth);
                self.out.push_str(&format!("RETURN {e};\n"));
            }
            5 | 6 => {
                let i = format!("i{}", self.loop_vars.len());
                let label = self
                    .rng
                    .gen_bool(0.4)
                    .then(|| format!("l{}", self.counters));
                self.counters += 1;
                let lo = self.rng.gen_range(-1..2);
                let hi = if self.rng.gen_bool(0.5) {
                    self.rng.gen_range(0..4).to_string()
                } else {
                    "b % 4".to_string()
                };
                self.pad(depth);
                let head = label
                    .as_ref()
                    .map(|l| format!("<<{l}>> "))
                    .unwrap_or_default();
                self.out
                    .push_str(&format!("{head}FOR {i} IN {lo}..{hi} LOOP\n"));
                self.loops.push(label.clone());
                self.loop_vars.push(i);
                self.block(depth + 1, budget - 1);
                self.loop_vars.pop();
                self.loops.pop();
                self.pad(depth);
                self.out.push_str(&format!(
                    "END LOOP{};\n",
                    label.map(|l| format!(" {l}")).unwrap_or_default()
                ));
            }
            _ => {
                // counter-guarded WHILE or LOOP; the counter is bumped first so CONTINUE cannot spin
                let k = self.counters;
                self.counters += 1;
                let w = format!("w{k}");
                let label = self.rng.gen_bool(0.4).then(|| format!("l{k}"));
                let head = label
                    .as_ref()
                    .map(|l| format!("<<{l}>> "))
                    .unwrap_or_default();
                let bound = self.rng.gen_range(0..4);
                self.pad(depth);
                self.out.push_str(&format!("{w} = 0;\n"));
                self.pad(depth);
                if choice == 7 {
                    self.out
                        .push_str(&format!("{head}WHILE {w} < {bound} LOOP\n"));
                    self.pad(depth + 1);
                    self.out.push_str(&format!("{w} = {w} + 1;\n"));
                } else {
                    self.out.push_str(&format!("{head}LOOP\n"));
                    self.pad(depth + 1);
                    self.out.push_str(&format!("{w} = {w} + 1;\n"));
                    self.pad(depth + 1);
                    self.out.push_str(&format!("EXIT WHEN {w} > {bound};\n"));
                }
                self.loops.push(label.clone());
                self.block(depth + 1, budget - 1);
                self.loops.pop();
                self.pad(depth);
                self.out.push_str(&format!(
                    "END LOOP{};\n",
                    label.map(|l| format!(" {l}")).unwrap_or_default()
                ));
            }
        }
    }
}

/// Source of a random function `f(a int, b int) RETURNS int` that always terminates.
pub fn random_function(seed: u64) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        out: String::new(),
        loops: Vec::new(),
        loop_vars: Vec::new(),
        counters: 0,
    };
    g.block(1, 2);
    let ret = g.expr(2);
    let body = std::mem::take(&mut g.out);
    let counters: String = (0..g.counters)
        .map(|k| format!("  w{k} int = 0;\n"))
        .collect();
    format!(
        "CREATE FUNCTION f(a int, b int)\nRETURNS int AS $$\nDECLARE\n  x int = 0;\n  y int;\n  z int = a + 1;\n{counters}BEGIN\n{body}  RETURN {ret};\nEND;\n$$ LANGUAGE PLPGSQL;\n"
    )
}

pub fn random_args(seed: u64) -> Vec<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    vec![
        Value::Int(rng.gen_range(-4..8)),
        Value::Int(rng.gen_range(-4..8)),
    ]
}

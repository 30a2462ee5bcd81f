//! Seeded random problem generator.

use featline_fd::{BoolForm, Cmp, CmpOp, Constraint, CountOp, NumExpr, VarRef};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::brute::Csp;

/// Shape limits for generated problems.
#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub max_vars: usize,
    pub max_value: i64,
    pub max_constraints: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_vars: 6,
            max_value: 6,
            max_constraints: 8,
        }
    }
}

/// Which constraint family to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Linear,
    Product,
    MinMax,
    Element,
    Table,
    AllDifferent,
    Count,
    Reified,
}

pub const FAMILIES: [Family; 8] = [
    Family::Linear,
    Family::Product,
    Family::MinMax,
    Family::Element,
    Family::Table,
    Family::AllDifferent,
    Family::Count,
    Family::Reified,
];

pub struct Generator {
    rng: ChaCha8Rng,
    cfg: GenConfig,
}

const OPS: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

impl Generator {
    pub fn new(seed: u64, cfg: GenConfig) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A non-empty subset of `[0..max_value]`, either a range or scattered.
    pub fn domain(&mut self) -> Vec<i64> {
        let m = self.cfg.max_value;
        if self.rng.gen_bool(0.6) {
            let lo = self.rng.gen_range(0..=m);
            let hi = self.rng.gen_range(lo..=m);
            (lo..=hi).collect()
        } else {
            let mut d: Vec<i64> = (0..=m).filter(|_| self.rng.gen_bool(0.5)).collect();
            if d.is_empty() {
                d.push(self.rng.gen_range(0..=m));
            }
            d
        }
    }

    /// A problem with a random number of variables and constraints; every
    /// family appears with equal probability.
    pub fn csp(&mut self) -> Csp {
        let n = self.rng.gen_range(1..=self.cfg.max_vars);
        let k = self.rng.gen_range(0..=self.cfg.max_constraints);
        let mut p = Csp::new();
        for _ in 0..n {
            let d = self.domain();
            p.add_var(d);
        }
        for _ in 0..k {
            let fam = *FAMILIES.choose(&mut self.rng).unwrap();
            let c = self.constraint(fam, n);
            p.add(c);
        }
        p
    }

    fn var(&mut self, n: usize) -> VarRef {
        VarRef::from_index(self.rng.gen_range(0..n))
    }

    fn vars(&mut self, n: usize, max_len: usize) -> Vec<VarRef> {
        let len = self.rng.gen_range(1..=max_len.max(1));
        (0..len).map(|_| self.var(n)).collect()
    }

    fn distinct_vars(&mut self, n: usize, max_len: usize) -> Vec<VarRef> {
        let mut all: Vec<VarRef> = (0..n).map(VarRef::from_index).collect();
        all.shuffle(&mut self.rng);
        let len = self.rng.gen_range(1..=max_len.min(n).max(1));
        all.truncate(len);
        all
    }

    fn small_const(&mut self) -> i64 {
        self.rng.gen_range(-3..=self.cfg.max_value + 3)
    }

    fn linear(&mut self, n: usize) -> NumExpr {
        let len = self.rng.gen_range(1..=3);
        let vars: Vec<VarRef> = (0..len).map(|_| self.var(n)).collect();
        let coeffs = (0..len).map(|_| self.rng.gen_range(-3..=3)).collect();
        let offset = self.rng.gen_range(-3..=3);
        NumExpr::linear(coeffs, vars, offset)
    }

    fn term(&mut self, n: usize, depth: u32) -> NumExpr {
        match self.rng.gen_range(0..if depth == 0 { 2 } else { 6 }) {
            0 => NumExpr::Var(self.var(n)),
            1 => NumExpr::Const(self.small_const()),
            2 => self.linear(n),
            3 => NumExpr::product(self.term(n, depth - 1), self.term(n, depth - 1)),
            4 => NumExpr::Min((0..self.rng.gen_range(1..=3)).map(|_| self.term(n, depth - 1)).collect()),
            _ => NumExpr::Max((0..self.rng.gen_range(1..=3)).map(|_| self.term(n, depth - 1)).collect()),
        }
    }

    fn op(&mut self) -> CmpOp {
        *OPS.choose(&mut self.rng).unwrap()
    }

    pub fn cmp(&mut self, n: usize) -> Cmp {
        let lhs = self.term(n, 2);
        let rhs = self.term(n, 1);
        let op = self.op();
        Cmp { lhs, op, rhs }
    }

    fn form(&mut self, n: usize, depth: u32) -> BoolForm {
        if depth == 0 || self.rng.gen_bool(0.35) {
            return BoolForm::Atom(self.cmp(n));
        }
        let d = depth - 1;
        match self.rng.gen_range(0..6) {
            0 => BoolForm::And((0..self.rng.gen_range(1..=3)).map(|_| self.form(n, d)).collect()),
            1 => BoolForm::Or((0..self.rng.gen_range(1..=3)).map(|_| self.form(n, d)).collect()),
            2 => BoolForm::not(self.form(n, d)),
            3 => BoolForm::implies(self.form(n, d), self.form(n, d)),
            4 => BoolForm::iff(self.form(n, d), self.form(n, d)),
            _ => BoolForm::xor(self.form(n, d), self.form(n, d)),
        }
    }

    pub fn constraint(&mut self, fam: Family, n: usize) -> Constraint {
        let m = self.cfg.max_value;
        match fam {
            Family::Linear => {
                let lhs = self.linear(n);
                let rhs = if self.rng.gen_bool(0.5) {
                    NumExpr::Var(self.var(n))
                } else {
                    NumExpr::Const(self.small_const())
                };
                Constraint::Cmp(lhs.cmp(self.op(), rhs))
            }
            Family::Product => {
                let a = NumExpr::Var(self.var(n));
                let b = self.term(n, 1);
                let rhs = self.term(n, 1);
                Constraint::Cmp(NumExpr::product(a, b).cmp(self.op(), rhs))
            }
            Family::MinMax => {
                let xs: Vec<NumExpr> = (0..self.rng.gen_range(1..=3)).map(|_| self.term(n, 1)).collect();
                let e = if self.rng.gen_bool(0.5) { NumExpr::Min(xs) } else { NumExpr::Max(xs) };
                let rhs = self.term(n, 1);
                Constraint::Cmp(e.cmp(self.op(), rhs))
            }
            Family::Element => {
                let len = self.rng.gen_range(1..=5);
                Constraint::Element {
                    index: self.var(n),
                    values: (0..len).map(|_| self.rng.gen_range(0..=m)).collect(),
                    result: self.var(n),
                }
            }
            Family::Table => {
                let vars = self.vars(n, 3);
                let count = self.rng.gen_range(0..=6);
                let tuples = (0..count)
                    .map(|_| (0..vars.len()).map(|_| self.rng.gen_range(0..=m)).collect())
                    .collect();
                Constraint::Table { vars, tuples }
            }
            Family::AllDifferent => Constraint::AllDifferent(self.distinct_vars(n, 4)),
            Family::Count => {
                let vars = self.vars(n, 4);
                let op = *[CountOp::AtMost, CountOp::AtLeast, CountOp::Exactly]
                    .choose(&mut self.rng)
                    .unwrap();
                Constraint::Count {
                    n: self.rng.gen_range(0..=vars.len() as i64),
                    vars,
                    value: self.rng.gen_range(0..=m),
                    op,
                }
            }
            Family::Reified => Constraint::Reified {
                b: self.var(n),
                form: self.form(n, 2),
            },
        }
    }
}

//! Exhaustive reference evaluator for finite-domain problems.
//!
//! Nothing here calls into the solver's propagation or evaluation code; the
//! constraint semantics are re-stated from scratch over plain integers.

use std::collections::BTreeSet;

use featline_fd::{BoolForm, CmpOp, Constraint, CountOp, FdError, IntervalSet, NumExpr, Status, Store, VarRef};

/// A problem as plain data: explicit value lists plus constraints.
#[derive(Debug, Clone, Default)]
pub struct Csp {
    pub names: Vec<String>,
    pub domains: Vec<Vec<i64>>,
    pub constraints: Vec<Constraint>,
}

impl Csp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, values: impl IntoIterator<Item = i64>) -> VarRef {
        let mut vals: Vec<i64> = values.into_iter().collect();
        vals.sort_unstable();
        vals.dedup();
        self.names.push(format!("V{}", self.domains.len()));
        self.domains.push(vals);
        VarRef::from_index(self.domains.len() - 1)
    }

    pub fn add(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    /// Builds the equivalent solver store, posting constraints in order.
    pub fn to_store(&self) -> Result<Store, FdError> {
        let mut s = Store::new();
        for (name, d) in self.names.iter().zip(&self.domains) {
            s.new_var(IntervalSet::from_values(d.iter().copied()), name.clone())?;
        }
        for c in &self.constraints {
            if s.post(c.clone())? == Status::Failed {
                break;
            }
        }
        Ok(s)
    }

    /// Every total assignment satisfying all constraints.
    pub fn solutions(&self) -> BTreeSet<Vec<i64>> {
        let n = self.domains.len();
        let all: Vec<usize> = (0..n).collect();
        self.projected_solutions(&all)
    }

    /// Distinct restrictions of the solutions to `keep`.
    pub fn projected_solutions(&self, keep: &[usize]) -> BTreeSet<Vec<i64>> {
        let mut out = BTreeSet::new();
        self.walk(&mut |a| {
            out.insert(keep.iter().map(|&i| a[i]).collect());
        });
        out
    }

    pub fn count(&self) -> u64 {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    /// Calls `f` on every solution. Each constraint is checked as soon as the
    /// highest-numbered variable it mentions has been assigned.
    pub fn walk(&self, f: &mut dyn FnMut(&[i64])) {
        let n = self.domains.len();
        let mut ready: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut ground = Vec::new();
        for (k, c) in self.constraints.iter().enumerate() {
            match c.vars().iter().map(|v| v.index()).max() {
                Some(last) => ready[last].push(k),
                None => ground.push(k),
            }
        }
        let mut a = vec![0i64; n];
        if ground.iter().all(|&k| satisfied(&self.constraints[k], &a)) {
            self.rec(0, &mut a, &ready, f);
        }
    }

    fn rec(&self, i: usize, a: &mut Vec<i64>, ready: &[Vec<usize>], f: &mut dyn FnMut(&[i64])) {
        if i == self.domains.len() {
            f(a);
            return;
        }
        for &x in &self.domains[i] {
            a[i] = x;
            if ready[i].iter().all(|&k| satisfied(&self.constraints[k], a)) {
                self.rec(i + 1, a, ready, f);
            }
        }
    }

    /// Values of each variable that occur in at least one solution.
    pub fn supports(&self) -> Vec<BTreeSet<i64>> {
        let mut sup = vec![BTreeSet::new(); self.domains.len()];
        self.walk(&mut |a| {
            for (i, &x) in a.iter().enumerate() {
                sup[i].insert(x);
            }
        });
        sup
    }
}

/// Exact value of `e`, or `None` on overflow of 128-bit arithmetic.
pub fn eval(e: &NumExpr, a: &[i64]) -> Option<i128> {
    Some(match e {
        NumExpr::Const(c) => *c as i128,
        NumExpr::Var(v) => a[v.index()] as i128,
        NumExpr::WeightedSum { coeffs, terms, offset } => {
            let mut acc = *offset as i128;
            for (c, t) in coeffs.iter().zip(terms) {
                acc = acc.checked_add((*c as i128).checked_mul(eval(t, a)?)?)?;
            }
            acc
        }
        NumExpr::Product(x, y) => eval(x, a)?.checked_mul(eval(y, a)?)?,
        NumExpr::Min(xs) => xs.iter().map(|x| eval(x, a)).collect::<Option<Vec<_>>>()?.into_iter().min()?,
        NumExpr::Max(xs) => xs.iter().map(|x| eval(x, a)).collect::<Option<Vec<_>>>()?.into_iter().max()?,
    })
}

fn compare(op: CmpOp, l: i128, r: i128) -> bool {
    match op {
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        CmpOp::Lt => l < r,
        CmpOp::Le => l <= r,
        CmpOp::Gt => l > r,
        CmpOp::Ge => l >= r,
    }
}

pub fn truth(f: &BoolForm, a: &[i64]) -> bool {
    match f {
        BoolForm::Atom(c) => match (eval(&c.lhs, a), eval(&c.rhs, a)) {
            (Some(l), Some(r)) => compare(c.op, l, r),
            _ => false,
        },
        BoolForm::And(fs) => fs.iter().all(|f| truth(f, a)),
        BoolForm::Or(fs) => fs.iter().any(|f| truth(f, a)),
        BoolForm::Not(x) => !truth(x, a),
        BoolForm::Implies(x, y) => !truth(x, a) || truth(y, a),
        BoolForm::Iff(x, y) => truth(x, a) == truth(y, a),
        BoolForm::Xor(x, y) => truth(x, a) != truth(y, a),
    }
}

pub fn satisfied(c: &Constraint, a: &[i64]) -> bool {
    let val = |v: &VarRef| a[v.index()];
    match c {
        Constraint::Cmp(c) => truth(&BoolForm::Atom(c.clone()), a),
        Constraint::Element { index, values, result } => {
            let i = val(index);
            i >= 1 && i as usize <= values.len() && values[i as usize - 1] == val(result)
        }
        Constraint::Table { vars, tuples } => tuples
            .iter()
            .any(|t| t.len() == vars.len() && vars.iter().zip(t).all(|(v, &x)| val(v) == x)),
        Constraint::AllDifferent(vars) => {
            for i in 0..vars.len() {
                for j in i + 1..vars.len() {
                    if val(&vars[i]) == val(&vars[j]) {
                        return false;
                    }
                }
            }
            true
        }
        Constraint::Count { vars, value, op, n } => {
            let k = vars.iter().filter(|v| val(v) == *value).count() as i64;
            match op {
                CountOp::AtMost => k <= *n,
                CountOp::AtLeast => k >= *n,
                CountOp::Exactly => k == *n,
            }
        }
        Constraint::Reified { b, form } => match val(b) {
            0 => !truth(form, a),
            1 => truth(form, a),
            _ => false,
        },
    }
}

//! Feature-model semantics evaluated directly on assignments.
//!
//! The rules are read off the model one by one (root, parent edges, groups,
//! dependencies, constraints) and checked on plain integers. No store is
//! built and no propagation happens, so this can serve as an oracle for the
//! compiler.

use std::collections::{BTreeSet, HashMap};

use featline_core::{ArithOp, AttrDomain, DepKind, DepSemantics, Edge, Expr, FeatureModel, LogicOp, Ref, Value};
use featline_fd::{CmpOp, CountOp};

enum Rule<'a> {
    Root(usize),
    Edge {
        parent: usize,
        child: usize,
        mandatory: bool,
    },
    Group {
        parent: usize,
        min: i64,
        max: i64,
        members: Vec<usize>,
    },
    Requires(usize, usize),
    RequiresPerInstance(usize, usize, i64),
    Excludes(usize, usize),
    Expr(&'a Expr),
}

/// Enumerates the configurations of a model by definition.
pub struct ModelOracle<'a> {
    /// `F` for features, `F.A` for attributes; features first.
    pub names: Vec<String>,
    pub domains: Vec<Vec<i64>>,
    index: HashMap<String, usize>,
    codes: HashMap<String, i64>,
    // rule, index of the last variable it reads
    rules: Vec<(usize, Rule<'a>)>,
}

impl<'a> ModelOracle<'a> {
    /// The model must be valid.
    pub fn new(m: &'a FeatureModel) -> Self {
        let mut codes = HashMap::new();
        for e in &m.enums {
            for (i, c) in e.codes.iter().enumerate() {
                codes.insert(c.clone(), i as i64);
            }
        }
        let mut names = Vec::new();
        let mut domains = Vec::new();
        for f in &m.features {
            names.push(f.name.clone());
            domains.push((0..=f.max_count).collect());
        }
        for f in &m.features {
            for a in &f.attributes {
                names.push(format!("{}.{}", f.name, a.name));
                let mut d: Vec<i64> = match &a.domain {
                    AttrDomain::Range(lo, hi) => (*lo..=*hi).collect(),
                    AttrDomain::Set(vs) => vs
                        .iter()
                        .map(|v| match v {
                            Value::Int(n) => *n,
                            Value::Code(c) => codes[c],
                        })
                        .collect(),
                };
                d.sort_unstable();
                d.dedup();
                domains.push(d);
            }
        }
        let index: HashMap<String, usize> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let fi = |n: &str| index[n];

        let mut rules = Vec::new();
        for f in &m.features {
            match &f.parent {
                None => rules.push(Rule::Root(fi(&f.name))),
                Some(p) => rules.push(Rule::Edge {
                    parent: fi(&p.name),
                    child: fi(&f.name),
                    mandatory: p.edge == Edge::Mandatory,
                }),
            }
        }
        for g in &m.groups {
            rules.push(Rule::Group {
                parent: fi(&g.parent),
                min: g.min,
                max: g.max,
                members: g.members.iter().map(|x| fi(x)).collect(),
            });
        }
        for d in &m.cross_deps {
            let (a, b) = (fi(&d.from), fi(&d.to));
            rules.push(match (d.kind, d.semantics) {
                (DepKind::Requires, DepSemantics::Presence) => Rule::Requires(a, b),
                (DepKind::Requires, DepSemantics::PerInstance) => Rule::RequiresPerInstance(a, b, d.offset),
                (DepKind::Excludes, _) => Rule::Excludes(a, b),
            });
        }
        for c in &m.constraints {
            rules.push(Rule::Expr(c));
        }

        let mut o = ModelOracle {
            names,
            domains,
            index,
            codes,
            rules: Vec::new(),
        };
        let mut placed: Vec<(usize, Rule)> = rules
            .into_iter()
            .map(|r| {
                let mut vs = Vec::new();
                o.reads(&r, &mut vs);
                (vs.into_iter().max().unwrap_or(0), r)
            })
            .collect();
        placed.sort_by_key(|(k, _)| *k);
        o.rules = placed;
        o
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn reads(&self, r: &Rule, out: &mut Vec<usize>) {
        match r {
            Rule::Root(v) => out.push(*v),
            Rule::Edge { parent, child, .. } => out.extend([*parent, *child]),
            Rule::Group { parent, members, .. } => {
                out.push(*parent);
                out.extend(members);
            }
            Rule::Requires(a, b) | Rule::RequiresPerInstance(a, b, _) | Rule::Excludes(a, b) => out.extend([*a, *b]),
            Rule::Expr(e) => self.expr_reads(e, out),
        }
    }

    fn ref_index(&self, r: &Ref) -> usize {
        match r {
            Ref::Feature(f) => self.index[f.as_str()],
            Ref::Attr(f, a) => self.index[&format!("{f}.{a}")],
        }
    }

    fn expr_reads(&self, e: &Expr, out: &mut Vec<usize>) {
        match e {
            Expr::Int(_) => {}
            Expr::Name(n) => out.extend(self.index.get(n.as_str())),
            Expr::Attr(f, a) => out.push(self.index[&format!("{f}.{a}")]),
            Expr::Neg(x) | Expr::Not(x) => self.expr_reads(x, out),
            Expr::Arith(_, a, b) | Expr::Cmp(_, a, b) | Expr::Logic(_, a, b) => {
                self.expr_reads(a, out);
                self.expr_reads(b, out);
            }
            Expr::Min(xs) | Expr::Max(xs) => xs.iter().for_each(|x| self.expr_reads(x, out)),
            Expr::AllDifferent(vars)
            | Expr::Count { vars, .. }
            | Expr::Relation { vars, .. }
            | Expr::Choose { vars, .. } => out.extend(vars.iter().map(|r| self.ref_index(r))),
        }
    }

    fn value(&self, v: &Value) -> i64 {
        match v {
            Value::Int(n) => *n,
            Value::Code(c) => self.codes[c],
        }
    }

    fn num(&self, e: &Expr, a: &[i64]) -> i128 {
        match e {
            Expr::Int(n) => *n as i128,
            Expr::Name(n) => match self.index.get(n.as_str()) {
                Some(&i) => a[i] as i128,
                None => self.codes[n] as i128,
            },
            Expr::Attr(f, x) => a[self.index[&format!("{f}.{x}")]] as i128,
            Expr::Neg(x) => -self.num(x, a),
            Expr::Arith(op, x, y) => {
                let (x, y) = (self.num(x, a), self.num(y, a));
                match op {
                    ArithOp::Add => x + y,
                    ArithOp::Sub => x - y,
                    ArithOp::Mul => x * y,
                }
            }
            Expr::Min(xs) => xs.iter().map(|x| self.num(x, a)).min().expect("non-empty min"),
            Expr::Max(xs) => xs.iter().map(|x| self.num(x, a)).max().expect("non-empty max"),
            other => panic!("`{other}` is not arithmetic"),
        }
    }

    /// Truth of a condition under a total assignment.
    pub fn holds(&self, e: &Expr, a: &[i64]) -> bool {
        match e {
            Expr::Cmp(op, x, y) => {
                let (x, y) = (self.num(x, a), self.num(y, a));
                match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                }
            }
            Expr::Not(x) => !self.holds(x, a),
            Expr::Logic(op, x, y) => {
                let (x, y) = (self.holds(x, a), self.holds(y, a));
                match op {
                    LogicOp::And => x && y,
                    LogicOp::Or => x || y,
                    LogicOp::Xor => x != y,
                    LogicOp::Implies => !x || y,
                    LogicOp::Iff => x == y,
                }
            }
            Expr::AllDifferent(vars) => {
                let vals: Vec<i64> = vars.iter().map(|r| a[self.ref_index(r)]).collect();
                vals.iter().collect::<BTreeSet<_>>().len() == vals.len()
            }
            Expr::Count { op, n, vars, value } => {
                let want = self.value(value);
                let k = vars.iter().filter(|r| a[self.ref_index(r)] == want).count() as i64;
                match op {
                    CountOp::AtMost => k <= *n,
                    CountOp::AtLeast => k >= *n,
                    CountOp::Exactly => k == *n,
                }
            }
            Expr::Relation { vars, tuples } => tuples.iter().any(|t| {
                t.iter()
                    .zip(vars)
                    .all(|(v, r)| self.value(v) == a[self.ref_index(r)])
            }),
            Expr::Choose { min, max, vars } => {
                let k = vars.iter().filter(|r| a[self.ref_index(r)] == 1).count() as i64;
                *min <= k && k <= *max
            }
            other => panic!("`{other}` is not a condition"),
        }
    }

    fn rule_holds(&self, r: &Rule, a: &[i64]) -> bool {
        match *r {
            Rule::Root(v) => a[v] == 1,
            Rule::Edge {
                parent,
                child,
                mandatory,
            } => {
                let (p, c) = (a[parent], a[child]);
                let boolean_parent = self.domains[parent].len() == 2;
                let boolean_child = self.domains[child].len() == 2;
                if p == 0 {
                    // nothing below an absent feature
                    c == 0
                } else if boolean_parent && !boolean_child {
                    // one parent hosts up to max children; mandatory needs one
                    !mandatory || c >= 1
                } else if mandatory {
                    // one child per parent instance
                    c == p
                } else {
                    c <= p
                }
            }
            Rule::Group {
                parent,
                min,
                max,
                ref members,
            } => {
                let k: i64 = members.iter().map(|&m| a[m]).sum();
                if a[parent] == 0 {
                    k == 0
                } else {
                    min <= k && k <= max
                }
            }
            Rule::Requires(x, y) => a[x] == 0 || a[y] >= 1,
            Rule::RequiresPerInstance(x, y, off) => a[y] >= a[x] + off,
            Rule::Excludes(x, y) => a[x] == 0 || a[y] == 0,
            Rule::Expr(e) => self.holds(e, a),
        }
    }

    /// Whether a total assignment is a configuration.
    pub fn accepts(&self, a: &[i64]) -> bool {
        self.rules.iter().all(|(_, r)| self.rule_holds(r, a))
    }

    /// Calls `f` on every configuration, in lexicographic order of the
    /// variable values.
    pub fn walk(&self, f: &mut dyn FnMut(&[i64])) {
        let mut a = vec![0; self.domains.len()];
        if a.is_empty() {
            f(&a);
            return;
        }
        self.walk_from(0, 0, &mut a, f);
    }

    fn walk_from(&self, i: usize, first_rule: usize, a: &mut Vec<i64>, f: &mut dyn FnMut(&[i64])) {
        for &v in &self.domains[i] {
            a[i] = v;
            let mut r = first_rule;
            let mut ok = true;
            while r < self.rules.len() && self.rules[r].0 <= i {
                if !self.rule_holds(&self.rules[r].1, a) {
                    ok = false;
                    break;
                }
                r += 1;
            }
            if !ok {
                continue;
            }
            if i + 1 == a.len() {
                f(a);
            } else {
                self.walk_from(i + 1, r, a, f);
            }
        }
    }

    pub fn solutions(&self) -> BTreeSet<Vec<i64>> {
        let mut out = BTreeSet::new();
        self.walk(&mut |a| {
            out.insert(a.to_vec());
        });
        out
    }

    pub fn count(&self) -> u64 {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    /// Distinct restrictions of the configurations to the given variables.
    pub fn projected(&self, keep: &[usize]) -> BTreeSet<Vec<i64>> {
        let mut out = BTreeSet::new();
        self.walk(&mut |a| {
            out.insert(keep.iter().map(|&i| a[i]).collect());
        });
        out
    }

    /// Indices of the feature variables.
    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.names.len()).filter(|&i| !self.names[i].contains('.')).collect()
    }

    /// Value of an arithmetic expression, e.g. a goal, under `a`.
    pub fn eval(&self, e: &Expr, a: &[i64]) -> i128 {
        self.num(e, a)
    }
}

/// Every solution of a compiled model over its feature and attribute
/// variables, in the oracle's variable order.
pub fn compiled_solutions(c: &mut featline_core::Compiled) -> BTreeSet<Vec<i64>> {
    use featline_fd::{Labeling, Step, Strategy};
    let vars = c.vars.model_vars();
    let mut lab = Labeling::new(Strategy::default()).over(vars.clone());
    let mut out = BTreeSet::new();
    while let Step::Solution(s) = lab.next(&mut c.store) {
        out.insert(vars.iter().map(|v| s.value(*v)).collect());
    }
    lab.finish(&mut c.store);
    out
}

//! Random small feature models: few variables, domains of at most five
//! values, every construct of the language.

use featline_core::*;
use featline_fd::{CmpOp, CountOp};

use crate::model::ModelOracle;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OPS: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
const CODES: [&str; 3] = ["red", "green", "blue"];

/// Upper bound on the product of all domain sizes of a generated model.
pub const MAX_SPACE: u64 = 200_000;

pub struct ModelGen {
    rng: ChaCha8Rng,
    /// Generate only boolean features, hierarchy, groups and presence
    /// dependencies.
    pub boolean_only: bool,
}

// variables a constraint may mention, with their value lists
struct Scope {
    refs: Vec<(Ref, Vec<i64>, bool)>,
}

impl ModelGen {
    pub fn new(seed: u64) -> Self {
        ModelGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            boolean_only: false,
        }
    }

    pub fn boolean(seed: u64) -> Self {
        ModelGen {
            boolean_only: true,
            ..ModelGen::new(seed)
        }
    }

    /// A model that passes validation, with at most 12 variables.
    pub fn model(&mut self) -> FeatureModel {
        loop {
            let m = self.attempt();
            if validate_model(&m).is_ok() {
                return m;
            }
        }
    }

    fn attempt(&mut self) -> FeatureModel {
        let n = self.rng.gen_range(1..=7);
        let mut features: Vec<Feature> = Vec::new();
        let mut space: u64 = 1;
        for i in 0..n {
            let name = format!("F{i}");
            let mut f = Feature::new(&name);
            if i > 0 {
                let p = self.rng.gen_range(0..i);
                let edge = if self.rng.gen_bool(0.5) { Edge::Mandatory } else { Edge::Optional };
                f = f.child_of(format!("F{p}"), edge);
                if !self.boolean_only && self.rng.gen_bool(0.3) {
                    f = f.max(self.rng.gen_range(2..=4));
                }
            }
            space *= f.max_count as u64 + 1;
            features.push(f);
        }
        let mut uses_codes = false;
        if !self.boolean_only {
            let k = self.rng.gen_range(0..=2);
            for j in 0..k {
                let dom = if self.rng.gen_bool(0.3) {
                    uses_codes = true;
                    let mut cs: Vec<Value> = CODES
                        .iter()
                        .filter(|_| self.rng.gen_bool(0.7))
                        .map(|c| Value::Code(c.to_string()))
                        .collect();
                    if cs.is_empty() {
                        cs.push(Value::Code(CODES[0].into()));
                    }
                    AttrDomain::Set(cs)
                } else if self.rng.gen_bool(0.7) {
                    let lo = self.rng.gen_range(-2..=3);
                    AttrDomain::Range(lo, lo + self.rng.gen_range(0..=3))
                } else {
                    let mut vs: Vec<i64> = (0..5).map(|_| self.rng.gen_range(-3..=8)).collect();
                    vs.sort_unstable();
                    vs.dedup();
                    AttrDomain::Set(vs.into_iter().map(Value::Int).collect())
                };
                let size = match &dom {
                    AttrDomain::Range(a, b) => (b - a + 1) as u64,
                    AttrDomain::Set(v) => v.len() as u64,
                };
                if space * size > MAX_SPACE {
                    break;
                }
                space *= size;
                let owner = self.rng.gen_range(0..n);
                features[owner] = features[owner].clone().attr(format!("a{j}"), dom);
            }
        }
        let mut m = FeatureModel {
            name: "Random".into(),
            features,
            ..Default::default()
        };
        if uses_codes {
            m.enums.push(EnumDecl {
                name: "Colour".into(),
                codes: CODES.iter().map(|c| c.to_string()).collect(),
            });
        }
        if space > MAX_SPACE {
            // shrink occurrence bounds until the space is small enough
            for f in &mut m.features {
                f.max_count = f.max_count.min(2);
            }
        }

        // groups over boolean children of boolean parents
        for p in 0..n {
            if self.rng.gen_bool(0.6) || m.features[p].max_count != 1 {
                continue;
            }
            let pname = format!("F{p}");
            let kids: Vec<String> = m
                .children(&pname)
                .filter(|c| c.max_count == 1)
                .map(|c| c.name.clone())
                .collect();
            if kids.len() < 2 {
                continue;
            }
            let k = kids.len() as i64;
            let min = self.rng.gen_range(0..=k);
            let max = self.rng.gen_range(min.max(1)..=k);
            m.groups.push(Group {
                parent: pname,
                min,
                max,
                members: kids,
            });
        }

        let deps = if n < 2 { 0 } else { self.rng.gen_range(0..=2) };
        for _ in 0..deps {
            let a = self.rng.gen_range(0..n);
            let mut b = self.rng.gen_range(0..n);
            if a == b {
                b = (b + 1) % n;
            }
            let kind = if self.rng.gen_bool(0.5) { DepKind::Requires } else { DepKind::Excludes };
            let per = !self.boolean_only && kind == DepKind::Requires && self.rng.gen_bool(0.3);
            let before = m.clone();
            m.cross_deps.push(CrossDep {
                kind,
                from: format!("F{a}"),
                to: format!("F{b}"),
                semantics: if per { DepSemantics::PerInstance } else { DepSemantics::Presence },
                offset: if per { self.rng.gen_range(0..=1) } else { 0 },
            });
            self.mostly_satisfiable(&mut m, before);
        }

        if !self.boolean_only {
            let scope = Scope::of(&m);
            let k = self.rng.gen_range(0..=3);
            for _ in 0..k {
                let e = self.constraint(&scope);
                let before = m.clone();
                m.constraints.push(e);
                self.mostly_satisfiable(&mut m, before);
            }
            if self.rng.gen_bool(0.5) {
                let e = self.arith(&scope, 2);
                m.goals.push(Goal {
                    direction: if self.rng.gen_bool(0.5) { GoalDirection::Minimize } else { GoalDirection::Maximize },
                    name: "g".into(),
                    expr: e,
                });
            }
        }
        m
    }

    // Void models carry little signal, so most additions that make the
    // model void are undone.
    fn mostly_satisfiable(&mut self, m: &mut FeatureModel, before: FeatureModel) {
        if validate_model(m).is_err() {
            return;
        }
        if ModelOracle::new(m).count() == 0 && self.rng.gen_bool(0.9) {
            *m = before;
        }
    }

    fn pick<'a>(&mut self, s: &'a Scope) -> &'a (Ref, Vec<i64>, bool) {
        s.refs.choose(&mut self.rng).expect("non-empty scope")
    }

    fn leaf(&mut self, s: &Scope) -> Expr {
        if self.rng.gen_bool(0.25) {
            return Expr::Int(self.rng.gen_range(-1..=4));
        }
        let (r, _, coded) = self.pick(s);
        if *coded {
            // coded attributes only take part in comparisons with codes
            return Expr::Int(self.rng.gen_range(0..=2));
        }
        ref_expr(r)
    }

    /// An arithmetic expression of at most `depth` levels.
    pub fn arith_in(&mut self, m: &FeatureModel, depth: u32) -> Expr {
        let s = Scope::of(m);
        self.arith(&s, depth)
    }

    fn arith(&mut self, s: &Scope, depth: u32) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return self.leaf(s);
        }
        match self.rng.gen_range(0..6) {
            0 => Expr::Neg(Box::new(self.arith(s, depth - 1))),
            1 => Expr::arith(ArithOp::Mul, self.arith(s, depth - 1), self.arith(s, depth - 1)),
            2 => Expr::Min(vec![self.arith(s, depth - 1), self.arith(s, depth - 1)]),
            3 => Expr::Max(vec![self.arith(s, depth - 1), self.arith(s, depth - 1)]),
            4 => Expr::arith(ArithOp::Sub, self.arith(s, depth - 1), self.arith(s, depth - 1)),
            _ => Expr::arith(ArithOp::Add, self.arith(s, depth - 1), self.arith(s, depth - 1)),
        }
    }

    fn atom(&mut self, s: &Scope) -> Expr {
        let op = *OPS.choose(&mut self.rng).unwrap();
        let (r, vals, coded) = self.pick(s).clone();
        if coded {
            let c = CODES.choose(&mut self.rng).unwrap();
            let op = if self.rng.gen_bool(0.5) { CmpOp::Eq } else { CmpOp::Ne };
            return Expr::cmp(op, ref_expr(&r), Expr::name(*c));
        }
        if self.rng.gen_bool(0.5) {
            let v = *vals.choose(&mut self.rng).unwrap();
            return Expr::cmp(op, ref_expr(&r), Expr::Int(v));
        }
        Expr::cmp(op, self.arith(s, 1), self.arith(s, 1))
    }

    /// A condition of at most `depth` connective levels.
    pub fn condition_in(&mut self, m: &FeatureModel, depth: u32) -> Expr {
        let s = Scope::of(m);
        self.condition(&s, depth)
    }

    fn condition(&mut self, s: &Scope, depth: u32) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return self.atom(s);
        }
        let ops = [LogicOp::And, LogicOp::Or, LogicOp::Xor, LogicOp::Implies, LogicOp::Iff];
        if self.rng.gen_bool(0.15) {
            return Expr::Not(Box::new(self.condition(s, depth - 1)));
        }
        let op = *ops.choose(&mut self.rng).unwrap();
        Expr::logic(op, self.condition(s, depth - 1), self.condition(s, depth - 1))
    }

    fn refs(&mut self, s: &Scope, numeric: bool) -> Vec<(Ref, Vec<i64>)> {
        let pool: Vec<_> = s.refs.iter().filter(|(_, _, c)| !numeric || !*c).collect();
        let k = self.rng.gen_range(1..=pool.len().clamp(1, 3));
        let mut chosen: Vec<_> = pool.choose_multiple(&mut self.rng, k).map(|(r, v, _)| (r.clone(), v.clone())).collect();
        chosen.sort_by(|a, b| a.0.to_string().cmp(&b.0.to_string()));
        chosen
    }

    fn constraint(&mut self, s: &Scope) -> Expr {
        match self.rng.gen_range(0..9) {
            0 => {
                let rs = self.refs(s, true);
                Expr::AllDifferent(rs.into_iter().map(|x| x.0).collect())
            }
            1 => {
                let rs = self.refs(s, true);
                let ops = [CountOp::AtMost, CountOp::AtLeast, CountOp::Exactly];
                Expr::Count {
                    op: *ops.choose(&mut self.rng).unwrap(),
                    n: self.rng.gen_range(0..=rs.len() as i64),
                    value: Value::Int(self.rng.gen_range(0..=2)),
                    vars: rs.into_iter().map(|x| x.0).collect(),
                }
            }
            2 => {
                let rs = self.refs(s, false);
                let k = self.rng.gen_range(0..=4);
                let tuples = (0..k)
                    .map(|_| {
                        rs.iter()
                            .map(|(r, vals)| {
                                let v = *vals.choose(&mut self.rng).unwrap();
                                match r {
                                    Ref::Attr(..) if s.is_coded(r) => Value::Code(CODES[v as usize].to_string()),
                                    _ => Value::Int(v),
                                }
                            })
                            .collect()
                    })
                    .collect();
                Expr::Relation {
                    vars: rs.into_iter().map(|x| x.0).collect(),
                    tuples,
                }
            }
            3 => {
                let rs = self.refs(s, true);
                let min = self.rng.gen_range(0..=rs.len() as i64);
                let max = self.rng.gen_range(min..=rs.len() as i64);
                Expr::Choose {
                    min,
                    max,
                    vars: rs.into_iter().map(|x| x.0).collect(),
                }
            }
            _ => self.condition(s, 2),
        }
    }
}

fn ref_expr(r: &Ref) -> Expr {
    match r {
        Ref::Feature(f) => Expr::name(f.clone()),
        Ref::Attr(f, a) => Expr::attr(f.clone(), a.clone()),
    }
}

impl Scope {
    fn of(m: &FeatureModel) -> Scope {
        let mut refs = Vec::new();
        for f in &m.features {
            refs.push((Ref::Feature(f.name.clone()), (0..=f.max_count).collect(), false));
        }
        for f in &m.features {
            for a in &f.attributes {
                let (vals, coded) = match &a.domain {
                    AttrDomain::Range(lo, hi) => ((*lo..=*hi).collect(), false),
                    AttrDomain::Set(vs) => {
                        let coded = vs.iter().any(|v| matches!(v, Value::Code(_)));
                        let vals = vs
                            .iter()
                            .map(|v| match v {
                                Value::Int(n) => *n,
                                Value::Code(c) => CODES.iter().position(|x| x == c).unwrap() as i64,
                            })
                            .collect();
                        (vals, coded)
                    }
                };
                refs.push((Ref::Attr(f.name.clone(), a.name.clone()), vals, coded));
            }
        }
        Scope { refs }
    }

    fn is_coded(&self, r: &Ref) -> bool {
        self.refs.iter().any(|(x, _, c)| x == r && *c)
    }
}

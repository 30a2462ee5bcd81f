//! Reader for the small subset of GNU Prolog's FD library used by hand-written
//! product-line programs: one clause binding a labeling list, `fd_domain/2,3`
//! calls, `#`-operator constraints and a final `fd_labeling/1`.
//!
//! Variables that are constrained but never given a domain get GNU Prolog's
//! default `0..fd_max_integer`, as the real system does.

use std::collections::HashMap;

use featline_fd::{BoolForm, Cmp, CmpOp, Constraint, FdError, IntervalSet, NumExpr, Status, Store, VarRef};

/// `fd_max_integer` on 32-bit-tagged GNU Prolog builds.
pub const FD_MAX_INTEGER: i64 = 268_435_455;

#[derive(Debug, Clone)]
pub struct FdProgram {
    pub names: Vec<String>,
    pub domains: Vec<IntervalSet>,
    pub constraints: Vec<Constraint>,
    /// Distinct variables of the labeled list, in list order.
    pub labeling: Vec<VarRef>,
    /// The list exactly as written, duplicates included.
    pub labeling_as_written: Vec<String>,
    /// Variables that never appear in an `fd_domain` call.
    pub undeclared: Vec<VarRef>,
}

impl FdProgram {
    pub fn var(&self, name: &str) -> Option<VarRef> {
        self.names.iter().position(|n| n == name).map(VarRef::from_index)
    }

    pub fn to_store(&self) -> Result<Store, FdError> {
        let mut s = Store::new();
        for (n, d) in self.names.iter().zip(&self.domains) {
            s.new_var(d.clone(), n.clone())?;
        }
        for c in &self.constraints {
            if s.post(c.clone())? == Status::Failed {
                break;
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(String),
    Atom(String),
    Int(i64),
    Op(&'static str),
}

const OPS: [&str; 24] = [
    "#\\<=>", "#<=>", "#==>", "#\\==>", "#<==", "#\\/", "#\\\\/", "#/\\", "#\\=", "#=<", "#>=", "#=", "#<", "#>",
    "#\\", ":-", "=", ",", ".", "(", ")", "[", "]", "+",
];
const MORE_OPS: [&str; 2] = ["-", "*"];

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let b = text.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    'outer: while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'%' {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if text[i..].starts_with("/*") {
            match text[i + 2..].find("*/") {
                Some(e) => i += e + 4,
                None => return Err("unterminated block comment".into()),
            }
            continue;
        }
        if c.is_ascii_digit() {
            let s = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Tok::Int(text[s..i].parse().map_err(|e| format!("bad integer: {e}"))?));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let s = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            let w = text[s..i].to_string();
            if c.is_ascii_uppercase() || c == b'_' {
                out.push(Tok::Var(w));
            } else {
                out.push(Tok::Atom(w));
            }
            continue;
        }
        let mut best: Option<&'static str> = None;
        for op in OPS.iter().chain(MORE_OPS.iter()) {
            if text[i..].starts_with(op) && best.map_or(true, |b| op.len() > b.len()) {
                best = Some(op);
            }
        }
        if let Some(op) = best {
            out.push(Tok::Op(op));
            i += op.len();
            continue 'outer;
        }
        return Err(format!("unexpected character {:?} at byte {i}", c as char));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Term {
    Int(i64),
    Var(String),
    Bin(&'static str, Box<Term>, Box<Term>),
    Un(&'static str, Box<Term>),
    Call(String, Vec<Term>),
    List(Vec<Term>),
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

// (operator, priority, right-assoc)
fn infix(op: &str) -> Option<(u32, bool)> {
    Some(match op {
        "#<=>" | "#\\<=>" => (760, false),
        "#==>" | "#\\==>" | "#<==" => (750, true),
        "#\\/" => (740, false),
        "#\\\\/" => (730, false),
        "#/\\" => (720, false),
        "#=" | "#\\=" | "#<" | "#=<" | "#>" | "#>=" | "=" => (700, false),
        "+" | "-" => (500, false),
        "*" => (400, false),
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, op: &str) -> Result<(), String> {
        match self.next() {
            Some(Tok::Op(o)) if o == op => Ok(()),
            t => Err(format!("expected `{op}`, found {t:?}")),
        }
    }

    fn primary(&mut self) -> Result<Term, String> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(Term::Int(n)),
            Some(Tok::Var(v)) => Ok(Term::Var(v)),
            Some(Tok::Atom(a)) => {
                let mut args = Vec::new();
                if self.peek() == Some(&Tok::Op("(")) {
                    self.pos += 1;
                    loop {
                        args.push(self.expr(999)?);
                        match self.next() {
                            Some(Tok::Op(",")) => {}
                            Some(Tok::Op(")")) => break,
                            t => return Err(format!("expected `,` or `)`, found {t:?}")),
                        }
                    }
                }
                Ok(Term::Call(a, args))
            }
            Some(Tok::Op("(")) => {
                let t = self.expr(1200)?;
                self.expect(")")?;
                Ok(t)
            }
            Some(Tok::Op("[")) => {
                let mut items = Vec::new();
                if self.peek() == Some(&Tok::Op("]")) {
                    self.pos += 1;
                    return Ok(Term::List(items));
                }
                loop {
                    items.push(self.expr(999)?);
                    match self.next() {
                        Some(Tok::Op(",")) => {}
                        Some(Tok::Op("]")) => break,
                        t => return Err(format!("expected `,` or `]`, found {t:?}")),
                    }
                }
                Ok(Term::List(items))
            }
            Some(Tok::Op("-")) => Ok(Term::Un("-", Box::new(self.expr(200)?))),
            Some(Tok::Op("#\\")) => Ok(Term::Un("#\\", Box::new(self.expr(710)?))),
            t => Err(format!("unexpected token {t:?}")),
        }
    }

    fn expr(&mut self, max: u32) -> Result<Term, String> {
        let mut lhs = self.primary()?;
        let mut left_pri = 0;
        loop {
            let Some(Tok::Op(op)) = self.peek().cloned() else { break };
            let Some((pri, right)) = infix(op) else { break };
            if pri > max || (pri == left_pri && !right && matches!(pri, 700 | 760)) {
                break;
            }
            self.pos += 1;
            // yfx: right operand binds tighter; xfy: same priority allowed on the right
            let rhs = self.expr(if right { pri } else { pri - 1 })?;
            lhs = Term::Bin(op, Box::new(lhs), Box::new(rhs));
            left_pri = pri;
        }
        Ok(lhs)
    }
}

struct Builder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    declared: Vec<Option<IntervalSet>>,
    constraints: Vec<Constraint>,
}

impl Builder {
    fn var(&mut self, name: &str) -> VarRef {
        let i = *self.index.entry(name.to_string()).or_insert_with(|| {
            self.names.push(name.to_string());
            self.declared.push(None);
            self.names.len() - 1
        });
        VarRef::from_index(i)
    }

    fn declare(&mut self, name: &str, d: IntervalSet) {
        let v = self.var(name).index();
        let next = match self.declared[v].take() {
            Some(old) => old.intersect(&d),
            None => d,
        };
        self.declared[v] = Some(next);
    }

    fn num(&mut self, t: &Term) -> Result<NumExpr, String> {
        Ok(match t {
            Term::Int(n) => NumExpr::Const(*n),
            Term::Var(v) => NumExpr::Var(self.var(v)),
            Term::Un("-", a) => -self.num(a)?,
            Term::Bin("+", a, b) => self.num(a)? + self.num(b)?,
            Term::Bin("-", a, b) => self.num(a)? - self.num(b)?,
            Term::Bin("*", a, b) => NumExpr::product(self.num(a)?, self.num(b)?),
            Term::Call(f, args) if (f == "min" || f == "max") && args.len() == 2 => {
                let xs = vec![self.num(&args[0])?, self.num(&args[1])?];
                if f == "min" {
                    NumExpr::Min(xs)
                } else {
                    NumExpr::Max(xs)
                }
            }
            other => return Err(format!("not an arithmetic term: {other:?}")),
        })
    }

    fn cmp(&mut self, op: &str, a: &Term, b: &Term) -> Result<Cmp, String> {
        let op = match op {
            "#=" => CmpOp::Eq,
            "#\\=" => CmpOp::Ne,
            "#<" => CmpOp::Lt,
            "#=<" => CmpOp::Le,
            "#>" => CmpOp::Gt,
            "#>=" => CmpOp::Ge,
            _ => unreachable!(),
        };
        Ok(self.num(a)?.cmp(op, self.num(b)?))
    }

    fn form(&mut self, t: &Term) -> Result<BoolForm, String> {
        Ok(match t {
            Term::Bin(op @ ("#=" | "#\\=" | "#<" | "#=<" | "#>" | "#>="), a, b) => BoolForm::Atom(self.cmp(op, a, b)?),
            Term::Bin("#<=>", a, b) => BoolForm::iff(self.form(a)?, self.form(b)?),
            Term::Bin("#\\<=>", a, b) => BoolForm::xor(self.form(a)?, self.form(b)?),
            Term::Bin("#==>", a, b) => BoolForm::implies(self.form(a)?, self.form(b)?),
            Term::Bin("#<==", a, b) => BoolForm::implies(self.form(b)?, self.form(a)?),
            Term::Bin("#\\==>", a, b) => BoolForm::And(vec![self.form(a)?, BoolForm::not(self.form(b)?)]),
            Term::Bin("#\\/", a, b) => BoolForm::Or(vec![self.form(a)?, self.form(b)?]),
            Term::Bin("#\\\\/", a, b) => BoolForm::xor(self.form(a)?, self.form(b)?),
            Term::Bin("#/\\", a, b) => BoolForm::And(vec![self.form(a)?, self.form(b)?]),
            Term::Un("#\\", a) => BoolForm::not(self.form(a)?),
            Term::Var(v) => {
                let x = self.var(v);
                self.declare(v, IntervalSet::range(0, 1));
                BoolForm::Atom(NumExpr::Var(x).eq(1))
            }
            Term::Int(n @ (0 | 1)) => BoolForm::Atom(NumExpr::Const(*n).eq(1)),
            other => return Err(format!("not a boolean FD term: {other:?}")),
        })
    }

    fn goal(&mut self, t: &Term, labeling: &mut Option<Vec<String>>) -> Result<(), String> {
        match t {
            Term::Bin("=", lhs, rhs) => match (&**lhs, &**rhs) {
                (Term::Var(_), Term::List(items)) => {
                    let mut names = Vec::new();
                    for it in items {
                        match it {
                            Term::Var(v) => {
                                self.var(v);
                                names.push(v.clone());
                            }
                            other => return Err(format!("labeling list holds a non-variable {other:?}")),
                        }
                    }
                    *labeling = Some(names);
                    Ok(())
                }
                _ => Err("only `Var = [..]` unification is supported".into()),
            },
            Term::Call(f, args) if f == "fd_domain" => {
                let vars = match args.first() {
                    Some(Term::List(vs)) => vs.clone(),
                    Some(Term::Var(v)) => vec![Term::Var(v.clone())],
                    _ => return Err("fd_domain expects a variable list".into()),
                };
                let dom = match &args[1..] {
                    [Term::Int(lo), Term::Int(hi)] => IntervalSet::range(*lo, *hi),
                    [Term::List(vals)] => {
                        let mut xs = Vec::new();
                        for v in vals {
                            match v {
                                Term::Int(x) => xs.push(*x),
                                other => return Err(format!("non-integer domain value {other:?}")),
                            }
                        }
                        IntervalSet::from_values(xs)
                    }
                    _ => return Err("unsupported fd_domain arguments".into()),
                };
                for v in vars {
                    match v {
                        Term::Var(name) => self.declare(&name, dom.clone()),
                        other => return Err(format!("fd_domain on a non-variable {other:?}")),
                    }
                }
                Ok(())
            }
            Term::Call(f, _) if f == "fd_labeling" || f == "fd_labelingff" => Ok(()),
            Term::Bin(op @ ("#=" | "#\\=" | "#<" | "#=<" | "#>" | "#>="), a, b) => {
                let c = self.cmp(op, a, b)?;
                self.constraints.push(Constraint::Cmp(c));
                Ok(())
            }
            other => {
                let form = self.form(other)?;
                let name = format!("_reif{}", self.names.len());
                let b = self.var(&name);
                self.declare(&name, IntervalSet::singleton(1));
                self.constraints.push(Constraint::Reified { b, form });
                Ok(())
            }
        }
    }
}

/// Reads a single-clause FD program.
pub fn read(text: &str) -> Result<FdProgram, String> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    // head
    match p.next() {
        Some(Tok::Atom(_)) => {}
        t => return Err(format!("expected a clause head, found {t:?}")),
    }
    if p.peek() == Some(&Tok::Op("(")) {
        p.pos += 1;
        while !matches!(p.next(), Some(Tok::Op(")")) | None) {}
    }
    p.expect(":-")?;
    let mut goals = Vec::new();
    loop {
        goals.push(p.expr(999)?);
        match p.next() {
            Some(Tok::Op(",")) => {}
            Some(Tok::Op(".")) => break,
            t => return Err(format!("expected `,` or `.` after a goal, found {t:?}")),
        }
    }
    if p.pos < p.toks.len() {
        return Err("trailing input after the clause".into());
    }
    let mut b = Builder {
        names: Vec::new(),
        index: HashMap::new(),
        declared: Vec::new(),
        constraints: Vec::new(),
    };
    let mut labeling = None;
    for g in &goals {
        b.goal(g, &mut labeling)?;
    }
    let written = labeling.ok_or("no labeling list bound")?;
    let mut seen = std::collections::HashSet::new();
    let labeling = written
        .iter()
        .filter(|n| seen.insert(n.as_str()))
        .map(|n| VarRef::from_index(b.index[n]))
        .collect();
    let mut undeclared = Vec::new();
    let domains = b
        .declared
        .iter()
        .enumerate()
        .map(|(i, d)| {
            d.clone().unwrap_or_else(|| {
                undeclared.push(VarRef::from_index(i));
                IntervalSet::range(0, FD_MAX_INTEGER)
            })
        })
        .collect();
    Ok(FdProgram {
        names: b.names,
        domains,
        constraints: b.constraints,
        labeling,
        labeling_as_written: written,
        undeclared,
    })
}

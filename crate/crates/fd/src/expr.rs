//! Public constraint vocabulary: variables, arithmetic expressions, boolean
//! forms and the constraint variants understood by the store.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::FdError;

/// Handle to a variable of a [`Store`](crate::Store).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarRef(pub(crate) usize);

impl VarRef {
    pub fn index(self) -> usize {
        self.0
    }

    /// Rebuilds a handle from a raw index. The store validates it on use.
    pub fn from_index(index: usize) -> Self {
        VarRef(index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NumExpr {
    Const(i64),
    Var(VarRef),
    /// `offset + Σ coeffs[i] * terms[i]`.
    WeightedSum {
        coeffs: Vec<i64>,
        terms: Vec<NumExpr>,
        offset: i64,
    },
    Product(Box<NumExpr>, Box<NumExpr>),
    Min(Vec<NumExpr>),
    Max(Vec<NumExpr>),
}

impl NumExpr {
    pub fn var(v: VarRef) -> Self {
        NumExpr::Var(v)
    }

    /// `Σ vars`.
    pub fn sum<I: IntoIterator<Item = VarRef>>(vars: I) -> Self {
        let terms: Vec<NumExpr> = vars.into_iter().map(NumExpr::Var).collect();
        NumExpr::WeightedSum {
            coeffs: vec![1; terms.len()],
            terms,
            offset: 0,
        }
    }

    /// `offset + Σ coeffs[i] * vars[i]`.
    pub fn linear(coeffs: Vec<i64>, vars: Vec<VarRef>, offset: i64) -> Self {
        NumExpr::WeightedSum {
            coeffs,
            terms: vars.into_iter().map(NumExpr::Var).collect(),
            offset,
        }
    }

    pub fn product(a: NumExpr, b: NumExpr) -> Self {
        NumExpr::Product(Box::new(a), Box::new(b))
    }

    pub fn cmp(self, op: CmpOp, rhs: impl Into<NumExpr>) -> Cmp {
        Cmp {
            lhs: self,
            op,
            rhs: rhs.into(),
        }
    }

    pub fn eq(self, rhs: impl Into<NumExpr>) -> Cmp {
        self.cmp(CmpOp::Eq, rhs)
    }
    pub fn ne(self, rhs: impl Into<NumExpr>) -> Cmp {
        self.cmp(CmpOp::Ne, rhs)
    }
    pub fn lt(self, rhs: impl Into<NumExpr>) -> Cmp {
        self.cmp(CmpOp::Lt, rhs)
    }
    pub fn le(self, rhs: impl Into<NumExpr>) -> Cmp {
        self.cmp(CmpOp::Le, rhs)
    }
    pub fn gt(self, rhs: impl Into<NumExpr>) -> Cmp {
        self.cmp(CmpOp::Gt, rhs)
    }
    pub fn ge(self, rhs: impl Into<NumExpr>) -> Cmp {
        self.cmp(CmpOp::Ge, rhs)
    }

    pub(crate) fn check_shape(&self) -> Result<(), FdError> {
        match self {
            NumExpr::Const(_) | NumExpr::Var(_) => Ok(()),
            NumExpr::WeightedSum { coeffs, terms, .. } => {
                if coeffs.len() != terms.len() {
                    return Err(FdError::InvalidArgument(format!(
                        "weighted sum has {} coefficients for {} terms",
                        coeffs.len(),
                        terms.len()
                    )));
                }
                terms.iter().try_for_each(NumExpr::check_shape)
            }
            NumExpr::Product(a, b) => {
                a.check_shape()?;
                b.check_shape()
            }
            NumExpr::Min(xs) | NumExpr::Max(xs) => {
                if xs.is_empty() {
                    return Err(FdError::InvalidArgument("min/max over an empty list".into()));
                }
                xs.iter().try_for_each(NumExpr::check_shape)
            }
        }
    }

    pub fn vars(&self, out: &mut Vec<VarRef>) {
        match self {
            NumExpr::Const(_) => {}
            NumExpr::Var(v) => out.push(*v),
            NumExpr::WeightedSum { terms, .. } => terms.iter().for_each(|t| t.vars(out)),
            NumExpr::Product(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            NumExpr::Min(xs) | NumExpr::Max(xs) => xs.iter().for_each(|t| t.vars(out)),
        }
    }

    /// Evaluates under a total assignment, failing on 64-bit overflow.
    pub fn eval(&self, value: &dyn Fn(VarRef) -> i64) -> Result<i64, FdError> {
        let ovf = || FdError::IntegerOverflow;
        Ok(match self {
            NumExpr::Const(c) => *c,
            NumExpr::Var(v) => value(*v),
            NumExpr::WeightedSum {
                coeffs,
                terms,
                offset,
            } => {
                let mut acc = *offset;
                for (c, t) in coeffs.iter().zip(terms) {
                    let x = t.eval(value)?;
                    acc = acc
                        .checked_add(c.checked_mul(x).ok_or_else(ovf)?)
                        .ok_or_else(ovf)?;
                }
                acc
            }
            NumExpr::Product(a, b) => a
                .eval(value)?
                .checked_mul(b.eval(value)?)
                .ok_or_else(ovf)?,
            NumExpr::Min(xs) => {
                let mut best = i64::MAX;
                for x in xs {
                    best = best.min(x.eval(value)?);
                }
                best
            }
            NumExpr::Max(xs) => {
                let mut best = i64::MIN;
                for x in xs {
                    best = best.max(x.eval(value)?);
                }
                best
            }
        })
    }

    pub fn display<'a>(&'a self, names: &'a dyn Fn(VarRef) -> String) -> impl fmt::Display + 'a {
        Pretty(move |f: &mut fmt::Formatter<'_>| fmt_num(self, names, f, 0))
    }
}

impl From<VarRef> for NumExpr {
    fn from(v: VarRef) -> Self {
        NumExpr::Var(v)
    }
}

impl From<i64> for NumExpr {
    fn from(c: i64) -> Self {
        NumExpr::Const(c)
    }
}

fn sum_parts(e: NumExpr) -> (Vec<i64>, Vec<NumExpr>, i64) {
    match e {
        NumExpr::WeightedSum {
            coeffs,
            terms,
            offset,
        } => (coeffs, terms, offset),
        NumExpr::Const(c) => (vec![], vec![], c),
        other => (vec![1], vec![other], 0),
    }
}

impl Add for NumExpr {
    type Output = NumExpr;
    fn add(self, rhs: NumExpr) -> NumExpr {
        let (mut coeffs, mut terms, offset) = sum_parts(self);
        let (c2, t2, o2) = sum_parts(rhs);
        coeffs.extend(c2);
        terms.extend(t2);
        // an offset that does not fit is kept as a term so normalisation reports it
        let offset = match offset.checked_add(o2) {
            Some(o) => o,
            None => {
                coeffs.push(1);
                terms.push(NumExpr::Const(o2));
                offset
            }
        };
        NumExpr::WeightedSum {
            coeffs,
            terms,
            offset,
        }
    }
}

impl Neg for NumExpr {
    type Output = NumExpr;
    fn neg(self) -> NumExpr {
        match sum_parts(self) {
            (coeffs, terms, offset) if offset != i64::MIN && !coeffs.contains(&i64::MIN) => {
                NumExpr::WeightedSum {
                    coeffs: coeffs.into_iter().map(|c| -c).collect(),
                    terms,
                    offset: -offset,
                }
            }
            (coeffs, terms, offset) => NumExpr::product(
                NumExpr::Const(-1),
                NumExpr::WeightedSum {
                    coeffs,
                    terms,
                    offset,
                },
            ),
        }
    }
}

impl Sub for NumExpr {
    type Output = NumExpr;
    fn sub(self, rhs: NumExpr) -> NumExpr {
        self + (-rhs)
    }
}

impl Mul for NumExpr {
    type Output = NumExpr;
    fn mul(self, rhs: NumExpr) -> NumExpr {
        NumExpr::product(self, rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    /// The complement: `¬(a op b) ⇔ a op.negate() b`.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// `lhs op rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cmp {
    pub lhs: NumExpr,
    pub op: CmpOp,
    pub rhs: NumExpr,
}

impl Cmp {
    pub fn holds(&self, value: &dyn Fn(VarRef) -> i64) -> Result<bool, FdError> {
        Ok(self.op.holds(self.lhs.eval(value)?, self.rhs.eval(value)?))
    }
}

/// Boolean combination of comparisons; the reifiable class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoolForm {
    Atom(Cmp),
    And(Vec<BoolForm>),
    Or(Vec<BoolForm>),
    Not(Box<BoolForm>),
    Implies(Box<BoolForm>, Box<BoolForm>),
    Iff(Box<BoolForm>, Box<BoolForm>),
    Xor(Box<BoolForm>, Box<BoolForm>),
}

impl BoolForm {
    pub fn implies(a: BoolForm, b: BoolForm) -> Self {
        BoolForm::Implies(Box::new(a), Box::new(b))
    }
    pub fn iff(a: BoolForm, b: BoolForm) -> Self {
        BoolForm::Iff(Box::new(a), Box::new(b))
    }
    pub fn xor(a: BoolForm, b: BoolForm) -> Self {
        BoolForm::Xor(Box::new(a), Box::new(b))
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(a: BoolForm) -> Self {
        BoolForm::Not(Box::new(a))
    }

    pub fn holds(&self, value: &dyn Fn(VarRef) -> i64) -> Result<bool, FdError> {
        Ok(match self {
            BoolForm::Atom(c) => c.holds(value)?,
            BoolForm::And(fs) => {
                let mut all = true;
                for f in fs {
                    all &= f.holds(value)?;
                }
                all
            }
            BoolForm::Or(fs) => {
                let mut any = false;
                for f in fs {
                    any |= f.holds(value)?;
                }
                any
            }
            BoolForm::Not(f) => !f.holds(value)?,
            BoolForm::Implies(a, b) => !a.holds(value)? || b.holds(value)?,
            BoolForm::Iff(a, b) => a.holds(value)? == b.holds(value)?,
            BoolForm::Xor(a, b) => a.holds(value)? != b.holds(value)?,
        })
    }

    pub fn vars(&self, out: &mut Vec<VarRef>) {
        match self {
            BoolForm::Atom(c) => {
                c.lhs.vars(out);
                c.rhs.vars(out);
            }
            BoolForm::And(fs) | BoolForm::Or(fs) => fs.iter().for_each(|f| f.vars(out)),
            BoolForm::Not(f) => f.vars(out),
            BoolForm::Implies(a, b) | BoolForm::Iff(a, b) | BoolForm::Xor(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    fn check_shape(&self) -> Result<(), FdError> {
        match self {
            BoolForm::Atom(c) => {
                c.lhs.check_shape()?;
                c.rhs.check_shape()
            }
            BoolForm::And(fs) | BoolForm::Or(fs) => fs.iter().try_for_each(BoolForm::check_shape),
            BoolForm::Not(f) => f.check_shape(),
            BoolForm::Implies(a, b) | BoolForm::Iff(a, b) | BoolForm::Xor(a, b) => {
                a.check_shape()?;
                b.check_shape()
            }
        }
    }
}

impl From<Cmp> for BoolForm {
    fn from(c: Cmp) -> Self {
        BoolForm::Atom(c)
    }
}

/// Operator of a counting constraint: at most / at least / exactly `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CountOp {
    AtMost,
    AtLeast,
    Exactly,
}

impl CountOp {
    pub fn holds(self, count: i64, n: i64) -> bool {
        match self {
            CountOp::AtMost => count <= n,
            CountOp::AtLeast => count >= n,
            CountOp::Exactly => count == n,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            CountOp::AtMost => "atmost",
            CountOp::AtLeast => "atleast",
            CountOp::Exactly => "exactly",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Constraint {
    Cmp(Cmp),
    /// `result = values[index - 1]` (1-based index).
    Element {
        index: VarRef,
        values: Vec<i64>,
        result: VarRef,
    },
    Table {
        vars: Vec<VarRef>,
        tuples: Vec<Vec<i64>>,
    },
    AllDifferent(Vec<VarRef>),
    /// `|{x ∈ vars : x = value}| op n`.
    Count {
        vars: Vec<VarRef>,
        value: i64,
        op: CountOp,
        n: i64,
    },
    /// `b = 1 ⇔ form`.
    Reified {
        b: VarRef,
        form: BoolForm,
    },
}

impl From<Cmp> for Constraint {
    fn from(c: Cmp) -> Self {
        Constraint::Cmp(c)
    }
}

impl Constraint {
    pub fn atmost(n: i64, vars: Vec<VarRef>, value: i64) -> Self {
        Constraint::Count {
            vars,
            value,
            op: CountOp::AtMost,
            n,
        }
    }

    pub fn atleast(n: i64, vars: Vec<VarRef>, value: i64) -> Self {
        Constraint::Count {
            vars,
            value,
            op: CountOp::AtLeast,
            n,
        }
    }

    pub fn exactly(n: i64, vars: Vec<VarRef>, value: i64) -> Self {
        Constraint::Count {
            vars,
            value,
            op: CountOp::Exactly,
            n,
        }
    }

    pub fn vars(&self) -> Vec<VarRef> {
        let mut out = Vec::new();
        match self {
            Constraint::Cmp(c) => {
                c.lhs.vars(&mut out);
                c.rhs.vars(&mut out);
            }
            Constraint::Element { index, result, .. } => out.extend([*index, *result]),
            Constraint::Table { vars, .. }
            | Constraint::AllDifferent(vars)
            | Constraint::Count { vars, .. } => out.extend(vars.iter().copied()),
            Constraint::Reified { b, form } => {
                out.push(*b);
                form.vars(&mut out);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub(crate) fn check_shape(&self) -> Result<(), FdError> {
        match self {
            Constraint::Cmp(c) => {
                c.lhs.check_shape()?;
                c.rhs.check_shape()
            }
            Constraint::Element { values, .. } => {
                if values.is_empty() {
                    Err(FdError::InvalidArgument("element over an empty value list".into()))
                } else {
                    Ok(())
                }
            }
            Constraint::Table { vars, tuples } => {
                match tuples.iter().find(|t| t.len() != vars.len()) {
                    Some(t) => Err(FdError::ArityMismatch {
                        expected: vars.len(),
                        found: t.len(),
                    }),
                    None => Ok(()),
                }
            }
            Constraint::AllDifferent(_) => Ok(()),
            Constraint::Count { n, .. } => {
                if *n < 0 {
                    Err(FdError::InvalidArgument(format!("count bound {n} is negative")))
                } else {
                    Ok(())
                }
            }
            Constraint::Reified { form, .. } => form.check_shape(),
        }
    }

    /// Direct evaluation under a total assignment.
    pub fn holds(&self, value: &dyn Fn(VarRef) -> i64) -> Result<bool, FdError> {
        Ok(match self {
            Constraint::Cmp(c) => c.holds(value)?,
            Constraint::Element {
                index,
                values,
                result,
            } => {
                let i = value(*index);
                i >= 1 && (i as u64) <= values.len() as u64 && values[(i - 1) as usize] == value(*result)
            }
            Constraint::Table { vars, tuples } => tuples
                .iter()
                .any(|t| t.iter().zip(vars).all(|(&x, &v)| value(v) == x)),
            Constraint::AllDifferent(vars) => {
                let mut vals: Vec<i64> = vars.iter().map(|&v| value(v)).collect();
                vals.sort_unstable();
                vals.windows(2).all(|w| w[0] != w[1])
            }
            Constraint::Count {
                vars,
                value: a,
                op,
                n,
            } => {
                let count = vars.iter().filter(|&&v| value(v) == *a).count() as i64;
                op.holds(count, *n)
            }
            Constraint::Reified { b, form } => {
                let bv = value(*b);
                (bv == 0 || bv == 1) && form.holds(value)? == (bv == 1)
            }
        })
    }

    pub fn display<'a>(&'a self, names: &'a dyn Fn(VarRef) -> String) -> impl fmt::Display + 'a {
        Pretty(move |f: &mut fmt::Formatter<'_>| fmt_constraint(self, names, f))
    }
}

struct Pretty<F>(F);

impl<F: Fn(&mut fmt::Formatter<'_>) -> fmt::Result> fmt::Display for Pretty<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        (self.0)(f)
    }
}

// prec: 0 = top, 1 = inside a sum, 2 = inside a product
fn fmt_num(
    e: &NumExpr,
    names: &dyn Fn(VarRef) -> String,
    f: &mut fmt::Formatter<'_>,
    prec: u8,
) -> fmt::Result {
    match e {
        NumExpr::Const(c) => {
            if *c < 0 && prec > 0 {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        }
        NumExpr::Var(v) => write!(f, "{}", names(*v)),
        NumExpr::WeightedSum {
            coeffs,
            terms,
            offset,
        } => {
            if terms.is_empty() {
                return fmt_num(&NumExpr::Const(*offset), names, f, prec);
            }
            let paren = prec >= 2;
            if paren {
                write!(f, "(")?;
            }
            for (k, (c, t)) in coeffs.iter().zip(terms).enumerate() {
                let mag = c.unsigned_abs();
                if k == 0 {
                    if *c < 0 {
                        write!(f, "-")?;
                    }
                } else if *c < 0 {
                    write!(f, " - ")?;
                } else {
                    write!(f, " + ")?;
                }
                if mag != 1 {
                    write!(f, "{mag}*")?;
                    fmt_num(t, names, f, 2)?;
                } else {
                    fmt_num(t, names, f, if k == 0 && *c >= 0 { 1 } else { 2 })?;
                }
            }
            if *offset > 0 {
                write!(f, " + {offset}")?;
            } else if *offset < 0 {
                write!(f, " - {}", offset.unsigned_abs())?;
            }
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        NumExpr::Product(a, b) => {
            fmt_num(a, names, f, 2)?;
            write!(f, " * ")?;
            fmt_num(b, names, f, 2)
        }
        NumExpr::Min(xs) | NumExpr::Max(xs) => {
            write!(f, "{}(", if matches!(e, NumExpr::Min(_)) { "min" } else { "max" })?;
            for (k, x) in xs.iter().enumerate() {
                if k > 0 {
                    write!(f, ", ")?;
                }
                fmt_num(x, names, f, 0)?;
            }
            write!(f, ")")
        }
    }
}

fn fmt_cmp(c: &Cmp, names: &dyn Fn(VarRef) -> String, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    fmt_num(&c.lhs, names, f, 0)?;
    write!(f, " {} ", c.op.symbol())?;
    fmt_num(&c.rhs, names, f, 0)
}

fn fmt_form(b: &BoolForm, names: &dyn Fn(VarRef) -> String, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let list = |fs: &[BoolForm], sep: &str, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        write!(f, "(")?;
        for (k, x) in fs.iter().enumerate() {
            if k > 0 {
                write!(f, " {sep} ")?;
            }
            fmt_form(x, names, f)?;
        }
        write!(f, ")")
    };
    let pair = |a: &BoolForm, sep: &str, b: &BoolForm, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        write!(f, "(")?;
        fmt_form(a, names, f)?;
        write!(f, " {sep} ")?;
        fmt_form(b, names, f)?;
        write!(f, ")")
    };
    match b {
        BoolForm::Atom(c) => {
            write!(f, "(")?;
            fmt_cmp(c, names, f)?;
            write!(f, ")")
        }
        BoolForm::And(fs) => list(fs, "and", f),
        BoolForm::Or(fs) => list(fs, "or", f),
        BoolForm::Not(x) => {
            write!(f, "not ")?;
            fmt_form(x, names, f)
        }
        BoolForm::Implies(a, c) => pair(a, "=>", c, f),
        BoolForm::Iff(a, c) => pair(a, "<=>", c, f),
        BoolForm::Xor(a, c) => pair(a, "xor", c, f),
    }
}

fn fmt_vars(vars: &[VarRef], names: &dyn Fn(VarRef) -> String, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "[")?;
    for (k, v) in vars.iter().enumerate() {
        if k > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{}", names(*v))?;
    }
    write!(f, "]")
}

fn fmt_constraint(
    c: &Constraint,
    names: &dyn Fn(VarRef) -> String,
    f: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    match c {
        Constraint::Cmp(c) => fmt_cmp(c, names, f),
        Constraint::Element {
            index,
            values,
            result,
        } => write!(f, "element({}, {values:?}, {})", names(*index), names(*result)),
        Constraint::Table { vars, tuples } => {
            write!(f, "relation(")?;
            fmt_vars(vars, names, f)?;
            write!(f, ", {tuples:?})")
        }
        Constraint::AllDifferent(vars) => {
            write!(f, "alldifferent(")?;
            fmt_vars(vars, names, f)?;
            write!(f, ")")
        }
        Constraint::Count {
            vars,
            value,
            op,
            n,
        } => {
            write!(f, "{}({n}, ", op.keyword())?;
            fmt_vars(vars, names, f)?;
            write!(f, ", {value})")
        }
        Constraint::Reified { b, form } => {
            write!(f, "{} <=> ", names(*b))?;
            fmt_form(form, names, f)
        }
    }
}

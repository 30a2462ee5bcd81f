//! Model text output. Everything printed here parses back to an equal model.

use std::fmt::{self, Write as _};

use featline_fd::CmpOp;

use crate::ast::*;

/// Renders `m` in the model language.
pub fn serialize(m: &FeatureModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {}", m.name);
    for e in &m.enums {
        let _ = writeln!(out, "enum {} {{ {} }}", e.name, e.codes.join(", "));
    }
    for f in &m.features {
        let _ = write!(out, "feature {}", f.name);
        if f.max_count != 1 {
            let _ = write!(out, " max {}", f.max_count);
        }
        if let Some(p) = &f.parent {
            let edge = match p.edge {
                Edge::Mandatory => "mandatory",
                Edge::Optional => "optional",
            };
            let _ = write!(out, " of {} {edge}", p.name);
        }
        out.push('\n');
        for a in &f.attributes {
            let _ = writeln!(out, "  attr {} in {}", a.name, domain(&a.domain));
        }
    }
    for g in &m.groups {
        let _ = writeln!(
            out,
            "group of {} [{}..{}] {{ {} }}",
            g.parent,
            g.min,
            g.max,
            g.members.join(", ")
        );
    }
    for d in &m.cross_deps {
        let _ = writeln!(out, "{d}");
    }
    for c in &m.constraints {
        let _ = writeln!(out, "constraint {c}");
    }
    for g in &m.goals {
        let dir = match g.direction {
            GoalDirection::Minimize => "minimize",
            GoalDirection::Maximize => "maximize",
        };
        let _ = writeln!(out, "{dir} goal {}: {}", g.name, g.expr);
    }
    out
}

fn domain(d: &AttrDomain) -> String {
    match d {
        AttrDomain::Range(lo, hi) => format!("[{lo}..{hi}]"),
        AttrDomain::Set(vals) => format!("{{{}}}", join(vals)),
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for CrossDep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DepKind::Requires => "requires",
            DepKind::Excludes => "excludes",
        };
        write!(f, "{} {kind} {}", self.from, self.to)?;
        if self.semantics == DepSemantics::PerInstance {
            f.write_str(" per instance")?;
            if self.offset != 0 {
                write!(f, " + {}", self.offset)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Code(c) => f.write_str(c),
        }
    }
}

pub fn cmp_symbol(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "=",
        CmpOp::Ne => "!=",
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Gt => ">",
        CmpOp::Ge => ">=",
    }
}

// Binding strength, loosest first.
const IFF: u8 = 1;
const IMPLIES: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const NOT: u8 = 5;
const CMP: u8 = 6;
const SUM: u8 = 7;
const PRODUCT: u8 = 8;
const UNARY: u8 = 9;
const ATOM: u8 = 10;

fn strength(e: &Expr) -> u8 {
    match e {
        Expr::Logic(LogicOp::Iff, ..) => IFF,
        Expr::Logic(LogicOp::Implies, ..) => IMPLIES,
        Expr::Logic(LogicOp::Or | LogicOp::Xor, ..) => OR,
        Expr::Logic(LogicOp::And, ..) => AND,
        Expr::Not(_) => NOT,
        Expr::Cmp(..) => CMP,
        Expr::Arith(ArithOp::Add | ArithOp::Sub, ..) => SUM,
        Expr::Arith(ArithOp::Mul, ..) => PRODUCT,
        Expr::Neg(_) => UNARY,
        Expr::Int(n) if *n < 0 => UNARY,
        _ => ATOM,
    }
}

fn write_at(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if strength(e) < min {
        f.write_str("(")?;
        write_expr(e, f)?;
        f.write_str(")")
    } else {
        write_expr(e, f)
    }
}

fn write_refs(vars: &[Ref], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "[{}]", join(vars))
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Int(n) => write!(f, "{n}"),
        Expr::Name(n) => f.write_str(n),
        Expr::Attr(a, b) => write!(f, "{a}.{b}"),
        Expr::Neg(x) => {
            if let Expr::Int(n) = **x {
                // keep the node: a bare `-n` would read back as a literal
                write!(f, "-({n})")
            } else {
                f.write_str("-")?;
                write_at(x, UNARY, f)
            }
        }
        Expr::Arith(op, a, b) => {
            let (sym, lvl) = match op {
                ArithOp::Add => ("+", SUM),
                ArithOp::Sub => ("-", SUM),
                ArithOp::Mul => ("*", PRODUCT),
            };
            write_at(a, lvl, f)?;
            write!(f, " {sym} ")?;
            write_at(b, lvl + 1, f)
        }
        Expr::Min(xs) | Expr::Max(xs) => {
            f.write_str(if matches!(e, Expr::Min(_)) { "min(" } else { "max(" })?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_expr(x, f)?;
            }
            f.write_str(")")
        }
        Expr::Cmp(op, a, b) => {
            write_at(a, SUM, f)?;
            write!(f, " {} ", cmp_symbol(*op))?;
            write_at(b, SUM, f)
        }
        Expr::Not(x) => {
            f.write_str("not ")?;
            write_at(x, NOT, f)
        }
        Expr::Logic(op, a, b) => {
            let (sym, left, right) = match op {
                LogicOp::Iff => ("<=>", IMPLIES, IMPLIES),
                LogicOp::Implies => ("=>", OR, IMPLIES),
                LogicOp::Or => ("or", OR, AND),
                LogicOp::Xor => ("xor", OR, AND),
                LogicOp::And => ("and", AND, NOT),
            };
            write_at(a, left, f)?;
            write!(f, " {sym} ")?;
            write_at(b, right, f)
        }
        Expr::AllDifferent(vars) => {
            f.write_str("alldifferent(")?;
            write_refs(vars, f)?;
            f.write_str(")")
        }
        Expr::Count { op, n, vars, value } => {
            write!(f, "{}({n}, ", op.keyword())?;
            write_refs(vars, f)?;
            write!(f, ", {value})")
        }
        Expr::Relation { vars, tuples } => {
            f.write_str("relation(")?;
            write_refs(vars, f)?;
            f.write_str(", [")?;
            for (i, t) in tuples.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "({})", join(t))?;
            }
            f.write_str("])")
        }
        Expr::Choose { min, max, vars } => {
            write!(f, "choose({min}, {max}, ")?;
            write_refs(vars, f)?;
            f.write_str(")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f)
    }
}

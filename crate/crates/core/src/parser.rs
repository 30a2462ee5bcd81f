//! Recursive-descent parser for the model language.
//!
//! ```text
//! model      = "model" IDENT item*
//! item       = enumdecl | feature | group | cross | constraint | goal
//! enumdecl   = "enum" IDENT "{" IDENT ("," IDENT)* "}"
//! feature    = "feature" IDENT ("max" INT)? ("of" IDENT ("mandatory"|"optional"))? attr*
//! attr       = "attr" IDENT "in" domain
//! domain     = "[" INT ".." INT "]" | "{" value ("," value)* "}"
//! group      = "group" "of" IDENT "[" INT ".." INT "]" "{" IDENT ("," IDENT)* "}"
//! cross      = IDENT ("requires"|"excludes") IDENT ("per" "instance" ("+" INT)?)?
//! constraint = "constraint" expr
//! goal       = ("minimize"|"maximize") "goal" IDENT ":" expr
//! ```
//!
//! Expression precedence, loosest first: `<=>` (non-associative), `=>`
//! (right), `or`/`xor`, `and`, `not`, comparisons (non-associative), `+ -`,
//! `*`, unary minus.

use featline_fd::{CmpOp, CountOp};

use crate::ast::*;
use crate::lexer::{lex, Tok, Token};
use crate::validate::{validate_model, Diagnostic};

const MAX_DEPTH: u32 = 256;

/// Parses and validates model text. Syntax errors and structural
/// diagnostics are reported together.
pub fn parse(text: &str) -> Result<FeatureModel, Vec<Diagnostic>> {
    let m = parse_unchecked(text)?;
    validate_model(&m)?;
    Ok(m)
}

/// Parses model text without structural validation.
pub fn parse_unchecked(text: &str) -> Result<FeatureModel, Vec<Diagnostic>> {
    let (toks, mut errs) = lex(text);
    let mut p = Parser::new(toks, text.len());
    let m = p.model();
    errs.append(&mut p.errs);
    if errs.is_empty() {
        Ok(m)
    } else {
        errs.sort_by_key(|d| d.span.map(|s| s.start));
        Err(errs)
    }
}

/// Parses a single constraint expression, as typed into a session. A
/// leading `constraint` keyword is accepted.
pub fn parse_constraint(text: &str) -> Result<Expr, Vec<Diagnostic>> {
    let (toks, mut errs) = lex(text);
    let mut p = Parser::new(toks, text.len());
    if p.peek_kw("constraint") {
        p.pos += 1;
    }
    let e = p.expr().ok();
    if e.is_some() && p.pos < p.toks.len() {
        let t = p.toks[p.pos].clone();
        p.error(format!("unexpected {} after the expression", t.tok.describe()), t.span);
    }
    errs.append(&mut p.errs);
    match e {
        Some((e, _)) if errs.is_empty() => Ok(e),
        _ => Err(errs),
    }
}

/// Parses a standalone arithmetic expression such as a goal body.
pub fn parse_arith(text: &str) -> Result<Expr, Vec<Diagnostic>> {
    let (toks, mut errs) = lex(text);
    let mut p = Parser::new(toks, text.len());
    let e = p.sum().ok();
    if e.is_some() && p.pos < p.toks.len() {
        let t = p.toks[p.pos].clone();
        p.error(format!("unexpected {} after the expression", t.tok.describe()), t.span);
    }
    errs.append(&mut p.errs);
    match e {
        Some((e, _)) if errs.is_empty() => Ok(e),
        _ => Err(errs),
    }
}

struct Fault;

type PResult<T> = Result<T, Fault>;

/// Expression with the depth of its tree.
type Node = (Expr, u32);

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: Span,
    errs: Vec<Diagnostic>,
    depth: u32,
}

fn deeper(d: u32, span: Span, p: &mut Parser) -> PResult<u32> {
    if d >= MAX_DEPTH {
        p.error("expression is nested too deeply", span);
        Err(Fault)
    } else {
        Ok(d + 1)
    }
}

impl Parser {
    fn new(toks: Vec<Token>, len: usize) -> Self {
        let eof = toks
            .last()
            .map(|t| Span {
                start: len,
                end: len,
                line: t.span.line,
                column: t.span.column + (t.span.end - t.span.start) as u32,
            })
            .unwrap_or(Span {
                start: len,
                end: len,
                line: 1,
                column: 1,
            });
        Parser {
            toks,
            pos: 0,
            eof,
            errs: Vec::new(),
            depth: 0,
        }
    }

    fn error(&mut self, msg: impl Into<String>, span: Span) {
        self.errs.push(Diagnostic::new("syntax", msg, Some(span)));
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map_or(self.eof, |t| t.span)
    }

    fn prev_span(&self) -> Span {
        if self.pos == 0 {
            self.span()
        } else {
            self.toks[self.pos - 1].span
        }
    }

    fn peek_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Keyword(k)) if *k == kw)
    }

    fn peek_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.peek_kw(kw);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        let hit = self.peek_punct(p);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn unexpected(&mut self, what: &str) -> Fault {
        let found = match self.peek() {
            Some(t) => t.describe(),
            None => "end of input".to_string(),
        };
        let span = self.span();
        self.error(format!("expected {what}, found {found}"), span);
        Fault
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat_punct("-");
        match self.peek() {
            Some(&Tok::Int(n)) => {
                let span = self.span();
                self.pos += 1;
                let v = if neg {
                    0i64.checked_sub_unsigned(n)
                } else {
                    i64::try_from(n).ok()
                };
                match v {
                    Some(v) => Ok(v),
                    None => {
                        self.error("integer literal is out of range", span);
                        Err(Fault)
                    }
                }
            }
            _ => Err(self.unexpected("an integer")),
        }
    }

    fn value(&mut self) -> PResult<Value> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(Value::Code(s))
            }
            _ => self.int().map(Value::Int),
        }
    }

    fn comma_list<T>(&mut self, close: &str, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        let mut out = vec![item(self)?];
        while self.eat_punct(",") {
            out.push(item(self)?);
        }
        self.expect_punct(close)?;
        Ok(out)
    }

    // Item starts: keywords that open an item, or a name at the start of a
    // line (a dependency).
    fn at_item_start(&self) -> bool {
        match self.toks.get(self.pos) {
            Some(t) => match &t.tok {
                Tok::Keyword(k) => matches!(*k, "enum" | "feature" | "group" | "constraint" | "minimize" | "maximize"),
                Tok::Ident(_) => t.line_start,
                _ => false,
            },
            None => true,
        }
    }

    fn sync(&mut self) {
        if self.pos < self.toks.len() {
            self.pos += 1;
        }
        while !self.at_item_start() {
            self.pos += 1;
        }
    }

    fn model(&mut self) -> FeatureModel {
        let mut m = FeatureModel::default();
        if self.eat_kw("model") {
            match self.ident("a model name") {
                Ok(n) => m.name = n,
                Err(_) => self.sync(),
            }
        } else {
            self.unexpected("`model`");
            self.sync();
        }
        while self.pos < self.toks.len() {
            let start = self.span();
            if self.item(&mut m, start).is_err() {
                self.sync();
            } else if !self.at_item_start() {
                self.unexpected("a new item");
                self.sync();
            }
        }
        m
    }

    fn item(&mut self, m: &mut FeatureModel, start: Span) -> PResult<()> {
        match self.peek().cloned() {
            Some(Tok::Keyword("enum")) => {
                self.pos += 1;
                let name = self.ident("an enumeration name")?;
                self.expect_punct("{")?;
                let codes = self.comma_list("}", |p| p.ident("a code name"))?;
                m.enums.push(EnumDecl { name, codes });
                m.spans.enums.push(start.to(self.prev_span()));
            }
            Some(Tok::Keyword("feature")) => {
                self.pos += 1;
                let name = self.ident("a feature name")?;
                let mut f = Feature::new(name);
                if self.eat_kw("max") {
                    f.max_count = self.int()?;
                }
                if self.eat_kw("of") {
                    let parent = self.ident("a parent feature")?;
                    let edge = if self.eat_kw("mandatory") {
                        Edge::Mandatory
                    } else if self.eat_kw("optional") {
                        Edge::Optional
                    } else {
                        return Err(self.unexpected("`mandatory` or `optional`"));
                    };
                    f = f.child_of(parent, edge);
                }
                let head = start.to(self.prev_span());
                let mut attr_spans = Vec::new();
                // attributes parsed so far are kept even if a later one is broken
                let mut res = Ok(());
                while self.peek_kw("attr") {
                    let astart = self.span();
                    self.pos += 1;
                    match self.attribute() {
                        Ok(a) => {
                            f.attributes.push(a);
                            attr_spans.push(astart.to(self.prev_span()));
                        }
                        Err(e) => {
                            res = Err(e);
                            break;
                        }
                    }
                }
                m.features.push(f);
                m.spans.features.push(head);
                m.spans.attributes.push(attr_spans);
                return res;
            }
            Some(Tok::Keyword("group")) => {
                self.pos += 1;
                self.expect_kw("of")?;
                let parent = self.ident("a group parent")?;
                self.expect_punct("[")?;
                let min = self.int()?;
                self.expect_punct("..")?;
                let max = self.int()?;
                self.expect_punct("]")?;
                self.expect_punct("{")?;
                let members = self.comma_list("}", |p| p.ident("a group member"))?;
                m.groups.push(Group {
                    parent,
                    min,
                    max,
                    members,
                });
                m.spans.groups.push(start.to(self.prev_span()));
            }
            Some(Tok::Keyword("constraint")) => {
                self.pos += 1;
                let (e, _) = self.expr()?;
                m.constraints.push(e);
                m.spans.constraints.push(start.to(self.prev_span()));
            }
            Some(Tok::Keyword(k @ ("minimize" | "maximize"))) => {
                self.pos += 1;
                self.expect_kw("goal")?;
                let name = self.ident("a goal name")?;
                self.expect_punct(":")?;
                let (expr, _) = self.sum()?;
                let direction = if k == "minimize" {
                    GoalDirection::Minimize
                } else {
                    GoalDirection::Maximize
                };
                m.goals.push(Goal { direction, name, expr });
                m.spans.goals.push(start.to(self.prev_span()));
            }
            Some(Tok::Ident(from)) => {
                self.pos += 1;
                let kind = if self.eat_kw("requires") {
                    DepKind::Requires
                } else if self.eat_kw("excludes") {
                    DepKind::Excludes
                } else {
                    return Err(self.unexpected("`requires` or `excludes`"));
                };
                let to = self.ident("a feature name")?;
                let mut semantics = DepSemantics::Presence;
                let mut offset = 0;
                if self.eat_kw("per") {
                    self.expect_kw("instance")?;
                    semantics = DepSemantics::PerInstance;
                    if self.eat_punct("+") {
                        offset = self.int()?;
                    }
                }
                m.cross_deps.push(CrossDep {
                    kind,
                    from,
                    to,
                    semantics,
                    offset,
                });
                m.spans.cross_deps.push(start.to(self.prev_span()));
            }
            _ => return Err(self.unexpected("an item")),
        }
        Ok(())
    }

    fn attribute(&mut self) -> PResult<AttributeDecl> {
        let name = self.ident("an attribute name")?;
        self.expect_kw("in")?;
        let domain = if self.eat_punct("[") {
            let lo = self.int()?;
            self.expect_punct("..")?;
            let hi = self.int()?;
            self.expect_punct("]")?;
            AttrDomain::Range(lo, hi)
        } else if self.eat_punct("{") {
            AttrDomain::Set(self.comma_list("}", Self::value)?)
        } else {
            return Err(self.unexpected("`[` or `{`"));
        };
        Ok(AttributeDecl { name, domain })
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let span = self.span();
            self.error("expression is nested too deeply", span);
            return Err(Fault);
        }
        Ok(())
    }

    fn expr(&mut self) -> PResult<Node> {
        self.enter()?;
        let r = self.iff();
        self.depth -= 1;
        r
    }

    fn iff(&mut self) -> PResult<Node> {
        let (a, da) = self.implies()?;
        if self.peek_punct("<=>") {
            let span = self.span();
            self.pos += 1;
            let (b, db) = self.implies()?;
            if self.peek_punct("<=>") {
                let span = self.span();
                self.error("`<=>` does not chain; add parentheses", span);
                return Err(Fault);
            }
            let d = deeper(da.max(db), span, self)?;
            return Ok((Expr::logic(LogicOp::Iff, a, b), d));
        }
        Ok((a, da))
    }

    fn implies(&mut self) -> PResult<Node> {
        let (a, da) = self.or()?;
        if self.peek_punct("=>") {
            let span = self.span();
            self.pos += 1;
            self.enter()?;
            let r = self.implies();
            self.depth -= 1;
            let (b, db) = r?;
            let d = deeper(da.max(db), span, self)?;
            return Ok((Expr::logic(LogicOp::Implies, a, b), d));
        }
        Ok((a, da))
    }

    fn or(&mut self) -> PResult<Node> {
        let (mut a, mut da) = self.and()?;
        loop {
            let op = if self.peek_kw("or") {
                LogicOp::Or
            } else if self.peek_kw("xor") {
                LogicOp::Xor
            } else {
                return Ok((a, da));
            };
            let span = self.span();
            self.pos += 1;
            let (b, db) = self.and()?;
            da = deeper(da.max(db), span, self)?;
            a = Expr::logic(op, a, b);
        }
    }

    fn and(&mut self) -> PResult<Node> {
        let (mut a, mut da) = self.not()?;
        while self.peek_kw("and") {
            let span = self.span();
            self.pos += 1;
            let (b, db) = self.not()?;
            da = deeper(da.max(db), span, self)?;
            a = Expr::logic(LogicOp::And, a, b);
        }
        Ok((a, da))
    }

    fn not(&mut self) -> PResult<Node> {
        if self.peek_kw("not") {
            let span = self.span();
            self.pos += 1;
            self.enter()?;
            let r = self.not();
            self.depth -= 1;
            let (a, d) = r?;
            let d = deeper(d, span, self)?;
            return Ok((Expr::Not(Box::new(a)), d));
        }
        self.comparison()
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        match self.peek() {
            Some(Tok::Punct(p)) => Some(match *p {
                "=" => CmpOp::Eq,
                "!=" | "<>" => CmpOp::Ne,
                "<" => CmpOp::Lt,
                "<=" => CmpOp::Le,
                ">" => CmpOp::Gt,
                ">=" => CmpOp::Ge,
                _ => return None,
            }),
            _ => None,
        }
    }

    fn comparison(&mut self) -> PResult<Node> {
        let (a, da) = self.sum()?;
        if let Some(op) = self.cmp_op() {
            let span = self.span();
            self.pos += 1;
            let (b, db) = self.sum()?;
            if self.cmp_op().is_some() {
                let span = self.span();
                self.error("comparisons do not chain; add parentheses", span);
                return Err(Fault);
            }
            let d = deeper(da.max(db), span, self)?;
            return Ok((Expr::cmp(op, a, b), d));
        }
        Ok((a, da))
    }

    fn sum(&mut self) -> PResult<Node> {
        let (mut a, mut da) = self.product()?;
        loop {
            let op = if self.peek_punct("+") {
                ArithOp::Add
            } else if self.peek_punct("-") {
                ArithOp::Sub
            } else {
                return Ok((a, da));
            };
            let span = self.span();
            self.pos += 1;
            let (b, db) = self.product()?;
            da = deeper(da.max(db), span, self)?;
            a = Expr::arith(op, a, b);
        }
    }

    fn product(&mut self) -> PResult<Node> {
        let (mut a, mut da) = self.unary()?;
        while self.peek_punct("*") {
            let span = self.span();
            self.pos += 1;
            let (b, db) = self.unary()?;
            da = deeper(da.max(db), span, self)?;
            a = Expr::arith(ArithOp::Mul, a, b);
        }
        Ok((a, da))
    }

    fn unary(&mut self) -> PResult<Node> {
        if self.peek_punct("-") {
            if matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Int(_))) {
                return Ok((Expr::Int(self.int()?), 1));
            }
            let span = self.span();
            self.pos += 1;
            self.enter()?;
            let r = self.unary();
            self.depth -= 1;
            let (a, d) = r?;
            let d = deeper(d, span, self)?;
            return Ok((Expr::Neg(Box::new(a)), d));
        }
        self.atom()
    }

    fn reference(&mut self) -> PResult<Ref> {
        let f = self.ident("a feature name")?;
        if self.eat_punct(".") {
            Ok(Ref::Attr(f, self.ident("an attribute name")?))
        } else {
            Ok(Ref::Feature(f))
        }
    }

    fn ref_list(&mut self) -> PResult<Vec<Ref>> {
        self.expect_punct("[")?;
        self.comma_list("]", Self::reference)
    }

    fn args(&mut self) -> PResult<(Vec<Expr>, u32)> {
        let mut d = 0;
        let xs = self.comma_list(")", |p| {
            let (e, de) = p.expr()?;
            d = d.max(de);
            Ok(e)
        })?;
        Ok((xs, d))
    }

    fn atom(&mut self) -> PResult<Node> {
        let span = self.span();
        match self.peek().cloned() {
            Some(Tok::Int(_)) => Ok((Expr::Int(self.int()?), 1)),
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat_punct(".") {
                    let a = self.ident("an attribute name")?;
                    Ok((Expr::Attr(name, a), 1))
                } else {
                    Ok((Expr::Name(name), 1))
                }
            }
            Some(Tok::Punct("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Some(Tok::Keyword(k @ ("min" | "max"))) => {
                self.pos += 1;
                self.expect_punct("(")?;
                let (xs, d) = self.args()?;
                let d = deeper(d, span, self)?;
                Ok((if k == "min" { Expr::Min(xs) } else { Expr::Max(xs) }, d))
            }
            Some(Tok::Keyword("alldifferent")) => {
                self.pos += 1;
                self.expect_punct("(")?;
                let vars = if self.peek_punct("[") {
                    let v = self.ref_list()?;
                    self.expect_punct(")")?;
                    v
                } else {
                    self.comma_list(")", Self::reference)?
                };
                Ok((Expr::AllDifferent(vars), 1))
            }
            Some(Tok::Keyword(k @ ("atmost" | "atleast" | "exactly"))) => {
                self.pos += 1;
                self.expect_punct("(")?;
                let n = self.int()?;
                self.expect_punct(",")?;
                let vars = self.ref_list()?;
                self.expect_punct(",")?;
                let value = self.value()?;
                self.expect_punct(")")?;
                let op = match k {
                    "atmost" => CountOp::AtMost,
                    "atleast" => CountOp::AtLeast,
                    _ => CountOp::Exactly,
                };
                Ok((Expr::Count { op, n, vars, value }, 1))
            }
            Some(Tok::Keyword("relation")) => {
                self.pos += 1;
                self.expect_punct("(")?;
                let vars = self.ref_list()?;
                self.expect_punct(",")?;
                self.expect_punct("[")?;
                let tuples = if self.eat_punct("]") {
                    Vec::new()
                } else {
                    self.comma_list("]", |p| {
                        let close = if p.eat_punct("(") {
                            ")"
                        } else if p.eat_punct("[") {
                            "]"
                        } else {
                            return Err(p.unexpected("a tuple"));
                        };
                        p.comma_list(close, Self::value)
                    })?
                };
                self.expect_punct(")")?;
                Ok((Expr::Relation { vars, tuples }, 1))
            }
            Some(Tok::Keyword("choose")) => {
                self.pos += 1;
                self.expect_punct("(")?;
                let min = self.int()?;
                self.expect_punct(",")?;
                let max = self.int()?;
                self.expect_punct(",")?;
                let vars = self.ref_list()?;
                self.expect_punct(")")?;
                Ok((Expr::Choose { min, max, vars }, 1))
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}

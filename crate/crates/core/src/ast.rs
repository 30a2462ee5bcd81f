//! Feature-model object model.

use std::fmt;

use featline_fd::{CmpOp, CountOp};
use serde::{Deserialize, Serialize};

/// Byte range plus the 1-based line and column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span {
            start: self.start,
            end: other.end.max(self.start),
            line: self.line,
            column: self.column,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Source locations of model items, parallel to the item vectors.
///
/// Locations never take part in model equality, so a parsed model compares
/// equal to one built by hand or reparsed from serialized text.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SourceMap {
    pub enums: Vec<Span>,
    pub features: Vec<Span>,
    pub attributes: Vec<Vec<Span>>,
    pub groups: Vec<Span>,
    pub cross_deps: Vec<Span>,
    pub constraints: Vec<Span>,
    pub goals: Vec<Span>,
}

impl PartialEq for SourceMap {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureModel {
    pub name: String,
    pub enums: Vec<EnumDecl>,
    /// The first feature without a parent is the root.
    pub features: Vec<Feature>,
    pub groups: Vec<Group>,
    pub cross_deps: Vec<CrossDep>,
    pub constraints: Vec<Expr>,
    pub goals: Vec<Goal>,
    #[serde(skip)]
    pub spans: SourceMap,
}

impl FeatureModel {
    pub fn feature(&self, name: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn root(&self) -> Option<&Feature> {
        self.features.iter().find(|f| f.parent.is_none())
    }

    pub fn goal(&self, name: &str) -> Option<&Goal> {
        self.goals.iter().find(|g| g.name == name)
    }

    /// Integer value of an enumeration code.
    pub fn code(&self, name: &str) -> Option<i64> {
        self.enums
            .iter()
            .find_map(|e| e.codes.iter().position(|c| c == name))
            .map(|i| i as i64)
    }

    pub fn children<'a>(&'a self, parent: &'a str) -> impl Iterator<Item = &'a Feature> + 'a {
        self.features
            .iter()
            .filter(move |f| f.parent.as_ref().is_some_and(|p| p.name == parent))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumDecl {
    pub name: String,
    /// Codes map to 0, 1, 2, ... in this order.
    pub codes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Mandatory,
    Optional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentRef {
    pub name: String,
    pub edge: Edge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    /// Upper bound of the occurrence count; 1 for a plain boolean feature.
    pub max_count: i64,
    pub parent: Option<ParentRef>,
    pub attributes: Vec<AttributeDecl>,
}

impl Feature {
    pub fn new(name: impl Into<String>) -> Self {
        Feature {
            name: name.into(),
            max_count: 1,
            parent: None,
            attributes: Vec::new(),
        }
    }

    pub fn child_of(mut self, parent: impl Into<String>, edge: Edge) -> Self {
        self.parent = Some(ParentRef {
            name: parent.into(),
            edge,
        });
        self
    }

    pub fn max(mut self, n: i64) -> Self {
        self.max_count = n;
        self
    }

    pub fn attr(mut self, name: impl Into<String>, domain: AttrDomain) -> Self {
        self.attributes.push(AttributeDecl {
            name: name.into(),
            domain,
        });
        self
    }

    pub fn is_boolean(&self) -> bool {
        self.max_count == 1
    }
}

/// An integer literal or a declared enumeration code.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Code(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrDomain {
    Range(i64, i64),
    Set(Vec<Value>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDecl {
    pub name: String,
    pub domain: AttrDomain,
}

/// Cardinality bundle: between `min` and `max` of `members` are selected
/// when `parent` is.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub parent: String,
    pub min: i64,
    pub max: i64,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepKind {
    Requires,
    Excludes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepSemantics {
    /// Relates presence (count ≥ 1) of the two features.
    Presence,
    /// Relates occurrence counts: `to ≥ from + offset`.
    PerInstance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossDep {
    pub kind: DepKind,
    pub from: String,
    pub to: String,
    pub semantics: DepSemantics,
    pub offset: i64,
}

/// A variable reference inside a symbolic constraint list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ref {
    Feature(String),
    Attr(String, String),
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ref::Feature(n) => f.write_str(n),
            Ref::Attr(n, a) => write!(f, "{n}.{a}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogicOp {
    And,
    Or,
    Xor,
    Implies,
    Iff,
}

/// Constraint and goal expressions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Int(i64),
    /// A feature's occurrence count, or an enumeration code.
    Name(String),
    Attr(String, String),
    Neg(Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Logic(LogicOp, Box<Expr>, Box<Expr>),
    AllDifferent(Vec<Ref>),
    Count {
        op: CountOp,
        n: i64,
        vars: Vec<Ref>,
        value: Value,
    },
    Relation {
        vars: Vec<Ref>,
        tuples: Vec<Vec<Value>>,
    },
    Choose {
        min: i64,
        max: i64,
        vars: Vec<Ref>,
    },
}

impl Expr {
    pub fn name(n: impl Into<String>) -> Expr {
        Expr::Name(n.into())
    }

    pub fn attr(f: impl Into<String>, a: impl Into<String>) -> Expr {
        Expr::Attr(f.into(), a.into())
    }

    pub fn arith(op: ArithOp, a: Expr, b: Expr) -> Expr {
        Expr::Arith(op, Box::new(a), Box::new(b))
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn logic(op: LogicOp, a: Expr, b: Expr) -> Expr {
        Expr::Logic(op, Box::new(a), Box::new(b))
    }

    /// True for nodes that can only be posted, never reified.
    pub fn is_symbolic(&self) -> bool {
        matches!(
            self,
            Expr::AllDifferent(_) | Expr::Count { .. } | Expr::Relation { .. } | Expr::Choose { .. }
        )
    }

    pub fn is_arith(&self) -> bool {
        matches!(
            self,
            Expr::Int(_) | Expr::Name(_) | Expr::Attr(..) | Expr::Neg(_) | Expr::Arith(..) | Expr::Min(_) | Expr::Max(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalDirection {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub direction: GoalDirection,
    pub name: String,
    pub expr: Expr,
}

//! Tokenizer for the model language.

use crate::ast::Span;
use crate::validate::Diagnostic;

pub const KEYWORDS: &[&str] = &[
    "model",
    "enum",
    "feature",
    "max",
    "of",
    "mandatory",
    "optional",
    "attr",
    "in",
    "group",
    "requires",
    "excludes",
    "per",
    "instance",
    "constraint",
    "minimize",
    "maximize",
    "goal",
    "and",
    "or",
    "not",
    "xor",
    "min",
    "alldifferent",
    "atmost",
    "atleast",
    "exactly",
    "relation",
    "choose",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// True when `s` can be written as a name in model text.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !is_keyword(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Keyword(&'static str),
    /// Unsigned literal; the parser folds a leading minus.
    Int(u64),
    Punct(&'static str),
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Keyword(k) => format!("keyword `{k}`"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Punct(p) => format!("`{p}`"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
    /// First token on its line.
    pub line_start: bool,
}

const PUNCT: &[&str] = &[
    "<=>", "..", "=>", "!=", "<>", "<=", ">=", "{", "}", "[", "]", "(", ")", ",", ":", ".", "+", "-", "*", "=", "<",
    ">",
];

/// Splits `text` into tokens. Bad characters and oversized literals become
/// diagnostics and are skipped.
pub fn lex(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut toks = Vec::new();
    let mut errs = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut line = 1u32;
    let mut line_begin = 0usize;
    let mut fresh_line = true;
    let span_at = |start: usize, end: usize, line: u32, line_begin: usize| Span {
        start,
        end,
        line,
        column: (text[line_begin..start].chars().count() + 1) as u32,
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            line_begin = i;
            fresh_line = true;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            match text[start..i].parse::<u64>() {
                Ok(n) => Some(Tok::Int(n)),
                Err(_) => {
                    errs.push(Diagnostic::new(
                        "syntax",
                        format!("integer literal {} is out of range", &text[start..i]),
                        Some(span_at(start, i, line, line_begin)),
                    ));
                    None
                }
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            Some(match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Keyword(k),
                None => Tok::Ident(word.to_string()),
            })
        } else if let Some(p) = PUNCT.iter().find(|p| text[i..].starts_with(**p)) {
            i += p.len();
            Some(Tok::Punct(p))
        } else {
            let ch = text[i..].chars().next().unwrap_or('\u{fffd}');
            i += ch.len_utf8();
            errs.push(Diagnostic::new(
                "syntax",
                format!("unexpected character {ch:?}"),
                Some(span_at(start, i, line, line_begin)),
            ));
            None
        };
        if let Some(tok) = tok {
            toks.push(Token {
                tok,
                span: span_at(start, i, line, line_begin),
                line_start: fresh_line,
            });
            fresh_line = false;
        }
    }
    (toks, errs)
}

//! Symbolic program representation shared by both graphics DSLs.
//!
//! Programs are fixed-arity s-expressions. A head symbol is looked up in a
//! [`SymbolInventory`] which fixes its kind and arity; numeric atoms are
//! literals and `$name` atoms are bound variables (only legal inside
//! subroutine bodies).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// What a named node is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    /// A base shape or block (`line`, `circle`, `vertical_red`, ...).
    Primitive,
    /// A base combinator or arithmetic operator.
    Operator,
    /// A call to a library subroutine.
    Call,
}

/// A numeric literal compared by bit pattern (negative zero is folded into zero).
#[derive(Debug, Clone, Copy)]
pub struct Literal(f64);

impl Literal {
    pub fn new(value: f64) -> Self {
        if value == 0.0 {
            Literal(0.0)
        } else {
            Literal(value)
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for Literal {}

impl Hash for Literal {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

impl PartialOrd for Literal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Literal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A program tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Node {
        kind: NodeKind,
        name: String,
        args: Vec<Expr>,
    },
    Num(Literal),
    Var(String),
}

impl Expr {
    pub fn node(kind: NodeKind, name: impl Into<String>, args: Vec<Expr>) -> Self {
        Expr::Node {
            kind,
            name: name.into(),
            args,
        }
    }

    pub fn prim(name: impl Into<String>) -> Self {
        Expr::node(NodeKind::Primitive, name, Vec::new())
    }

    pub fn op(name: impl Into<String>, args: Vec<Expr>) -> Self {
        Expr::node(NodeKind::Operator, name, args)
    }

    pub fn call(name: impl Into<String>, args: Vec<Expr>) -> Self {
        Expr::node(NodeKind::Call, name, args)
    }

    pub fn num(value: f64) -> Self {
        Expr::Num(Literal::new(value))
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn kind(&self) -> Option<NodeKind> {
        match self {
            Expr::Node { kind, .. } => Some(*kind),
            _ => None,
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Expr::Node { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Expr] {
        match self {
            Expr::Node { args, .. } => args,
            _ => &[],
        }
    }

    pub fn arity(&self) -> usize {
        self.args().len()
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Expr::Num(l) => Some(l.value()),
            _ => None,
        }
    }

    /// Preorder walk over every node, literals and variables included.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Expr)) {
        visit(self);
        for a in self.args() {
            a.walk(visit);
        }
    }

    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= e.kind() == Some(NodeKind::Call));
        found
    }

    /// Replaces every variable bound in `bindings`.
    pub fn substitute(&self, bindings: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Var(v) => bindings.get(v).cloned().unwrap_or_else(|| self.clone()),
            Expr::Num(_) => self.clone(),
            Expr::Node { kind, name, args } => Expr::Node {
                kind: *kind,
                name: name.clone(),
                args: args.iter().map(|a| a.substitute(bindings)).collect(),
            },
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(l) => write!(f, "{l}"),
            Expr::Var(v) => write!(f, "${v}"),
            Expr::Node { name, args, .. } => {
                write!(f, "({name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Kind and arity of one declared symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolInfo {
    pub kind: NodeKind,
    pub arity: usize,
}

/// The set of head symbols a parser accepts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolInventory {
    symbols: BTreeMap<String, SymbolInfo>,
}

impl SymbolInventory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: impl Into<String>, kind: NodeKind, arity: usize) {
        self.symbols.insert(name.into(), SymbolInfo { kind, arity });
    }

    pub fn with(mut self, name: &str, kind: NodeKind, arity: usize) -> Self {
        self.declare(name, kind, arity);
        self
    }

    pub fn get(&self, name: &str) -> Option<SymbolInfo> {
        self.symbols.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.symbols.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.symbols.keys().map(String::as_str)
    }

    /// Checks that every head symbol of `expr` is declared with a matching
    /// kind and arity.
    pub fn validate(&self, expr: &Expr) -> Result<(), ParseError> {
        let mut err = None;
        expr.walk(&mut |e| {
            if err.is_some() {
                return;
            }
            if let Expr::Node { name, args, kind } = e {
                match self.get(name) {
                    None => {
                        err = Some(ParseError::UnknownSymbol {
                            name: name.clone(),
                            pos: 0,
                        })
                    }
                    Some(info) if info.arity != args.len() => {
                        err = Some(ParseError::ArityMismatch {
                            name: name.clone(),
                            expected: info.arity,
                            found: args.len(),
                            pos: 0,
                        })
                    }
                    Some(info) if info.kind != *kind => {
                        err = Some(ParseError::UnknownSymbol {
                            name: name.clone(),
                            pos: 0,
                        })
                    }
                    _ => {}
                }
            }
        });
        err.map_or(Ok(()), Err)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown symbol `{name}` at byte {pos}")]
    UnknownSymbol { name: String, pos: usize },
    #[error("`{name}` at byte {pos} expects {expected} argument(s), found {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
        pos: usize,
    },
    #[error("unbound variable `${name}` at byte {pos}")]
    UnboundVariable { name: String, pos: usize },
}

/// Parses a program, rejecting variables.
pub fn parse_sexpr(text: &str, inventory: &SymbolInventory) -> Result<Expr, ParseError> {
    parse_with_params(text, inventory, &[])
}

/// Parses a subroutine body in which `$p` is legal for every `p` in `params`.
pub fn parse_with_params(
    text: &str,
    inventory: &SymbolInventory,
    params: &[String],
) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        inventory,
        params,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    inventory: &'a SymbolInventory,
    params: &'a [String],
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn atom(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_whitespace() || c == b'(' || c == b')' {
                break;
            }
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.src.get(self.pos) {
            None => Err(self.syntax("unexpected end of input")),
            Some(b')') => Err(self.syntax("unexpected `)`")),
            Some(b'(') => self.list(),
            Some(_) => {
                let start = self.pos;
                let text = self.atom().to_string();
                if let Some(v) = text.strip_prefix('$') {
                    if self.params.iter().any(|p| p == v) {
                        Ok(Expr::var(v))
                    } else {
                        Err(ParseError::UnboundVariable {
                            name: v.to_string(),
                            pos: start,
                        })
                    }
                } else if let Ok(x) = text.parse::<f64>() {
                    if x.is_finite() {
                        Ok(Expr::num(x))
                    } else {
                        Err(ParseError::Syntax {
                            pos: start,
                            message: format!("non-finite literal `{text}`"),
                        })
                    }
                } else {
                    Err(ParseError::Syntax {
                        pos: start,
                        message: format!("bare symbol `{text}` must be applied in parentheses"),
                    })
                }
            }
        }
    }

    fn list(&mut self) -> Result<Expr, ParseError> {
        self.pos += 1;
        self.skip_ws();
        let head_pos = self.pos;
        let head = self.atom().to_string();
        if head.is_empty() {
            return Err(self.syntax("expected head symbol"));
        }
        let info = self
            .inventory
            .get(&head)
            .ok_or_else(|| ParseError::UnknownSymbol {
                name: head.clone(),
                pos: head_pos,
            })?;
        let mut args = Vec::new();
        loop {
            self.skip_ws();
            match self.src.get(self.pos) {
                None => return Err(self.syntax("unclosed `(`")),
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                Some(_) => args.push(self.expr()?),
            }
        }
        if args.len() != info.arity {
            return Err(ParseError::ArityMismatch {
                name: head,
                expected: info.arity,
                found: args.len(),
                pos: head_pos,
            });
        }
        Ok(Expr::node(info.kind, head, args))
    }
}

/// Ordered token names of a program.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence(pub Vec<String>);

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join(" "))
    }
}

/// Preorder traversal emitting the names of primitive, operator and call
/// nodes. Literals and variables are skipped.
pub fn tokenize(program: &Expr) -> TokenSequence {
    let mut out = Vec::new();
    program.walk(&mut |e| {
        if let Expr::Node { name, .. } = e {
            out.push(name.clone());
        }
    });
    TokenSequence(out)
}

/// Number of named nodes, i.e. `|tokenize(program)|`.
pub fn program_length(program: &Expr) -> usize {
    let mut n = 0;
    program.walk(&mut |e| {
        if matches!(e, Expr::Node { .. }) {
            n += 1;
        }
    });
    n
}

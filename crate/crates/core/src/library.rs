//! Cumulative concept libraries, macro expansion, rewriting and the combined
//! representational cost.
//!
//! The rewriter works top-down. At each node it tries every subroutine in
//! match order (longest fully expanded body first, then by name) and
//! replaces the first whose expanded body matches, binding parameters to
//! literals or whole subtrees; a parameter used more than once must bind the
//! same value everywhere. Bound subtrees are rewritten recursively. Because
//! larger patterns are tried before smaller ones at the outermost possible
//! node, a part is never split by one of its own sub-parts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Domain, Subdomain};
use crate::program::{
    parse_with_params, program_length, Expr, NodeKind, ParseError, SymbolInventory,
};
use crate::semantics::{evaluate, SemanticsError};
use crate::templates;

pub const MAX_LEVEL: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LibraryError {
    #[error("library level {0} is outside 0..=3")]
    BadLevel(usize),
    #[error("subroutine `{name}` has an invalid body: {source}")]
    Body { name: String, source: ParseError },
    #[error("call to unknown subroutine `{0}`")]
    UnknownCall(String),
    #[error("rewrite changed the meaning of {program}")]
    Mismatch { program: String },
    #[error("evaluation failed: {0}")]
    Eval(#[from] SemanticsError),
    #[error("empty corpus")]
    EmptyCorpus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subroutine {
    pub name: String,
    pub level: usize,
    pub params: Vec<String>,
    pub body: Expr,
    /// The body with every call expanded to base primitives.
    pub expanded: Expr,
}

#[derive(Debug, Clone)]
pub struct ConceptLibrary {
    pub subdomain: Subdomain,
    pub level: usize,
    pub inventory: SymbolInventory,
    /// Subroutines of levels 1..=level in definition order.
    pub subroutines: Vec<Subroutine>,
    index: BTreeMap<String, usize>,
    /// Indices into `subroutines` in the order the rewriter tries them.
    match_order: Vec<usize>,
}

/// Builds the library of `subdomain` at `level`: the base primitives plus
/// every template tier up to `level`.
pub fn build_library(subdomain: Subdomain, level: usize) -> Result<ConceptLibrary, LibraryError> {
    if level > MAX_LEVEL {
        return Err(LibraryError::BadLevel(level));
    }
    let mut inventory = subdomain.domain().base_inventory();
    let mut lib = ConceptLibrary {
        subdomain,
        level,
        inventory: inventory.clone(),
        subroutines: Vec::new(),
        index: BTreeMap::new(),
        match_order: Vec::new(),
    };
    let defs: Vec<_> = templates::definitions(subdomain)
        .into_iter()
        .filter(|d| d.level <= level)
        .collect();
    for tier in 1..=level {
        // bodies see strictly lower tiers only
        let visible = inventory.clone();
        for d in defs.iter().filter(|d| d.level == tier) {
            let body = parse_with_params(&d.body, &visible, &d.params).map_err(|source| {
                LibraryError::Body {
                    name: d.name.clone(),
                    source,
                }
            })?;
            let expanded = lib.expand(&body)?;
            inventory.declare(d.name.clone(), NodeKind::Call, d.params.len());
            lib.index.insert(d.name.clone(), lib.subroutines.len());
            lib.subroutines.push(Subroutine {
                name: d.name.clone(),
                level: d.level,
                params: d.params.clone(),
                body,
                expanded,
            });
        }
    }
    lib.inventory = inventory;
    let mut order: Vec<usize> = (0..lib.subroutines.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&lib.subroutines[a], &lib.subroutines[b]);
        program_length(&sb.expanded)
            .cmp(&program_length(&sa.expanded))
            .then_with(|| sa.name.cmp(&sb.name))
    });
    lib.match_order = order;
    Ok(lib)
}

/// Binds pattern variables so that `pattern` equals `e` structurally.
fn unify(pattern: &Expr, e: &Expr, bindings: &mut BTreeMap<String, Expr>) -> bool {
    match pattern {
        Expr::Var(v) => match bindings.get(v) {
            Some(bound) => bound == e,
            None => {
                bindings.insert(v.clone(), e.clone());
                true
            }
        },
        Expr::Num(_) => pattern == e,
        Expr::Node { name, args, .. } => {
            e.name() == Some(name.as_str())
                && e.arity() == args.len()
                && args
                    .iter()
                    .zip(e.args())
                    .all(|(p, x)| unify(p, x, bindings))
        }
    }
}

impl ConceptLibrary {
    pub fn domain(&self) -> Domain {
        self.subdomain.domain()
    }

    /// |L|: every usable symbol, base and inherited included.
    pub fn size(&self) -> usize {
        self.inventory.len()
    }

    pub fn get(&self, name: &str) -> Option<&Subroutine> {
        self.index.get(name).map(|&i| &self.subroutines[i])
    }

    /// Expands calls of level above `keep_level`, leaving lower calls intact.
    pub fn expand_above(&self, e: &Expr, keep_level: usize) -> Result<Expr, LibraryError> {
        match e {
            Expr::Node {
                kind: NodeKind::Call,
                name,
                args,
            } => {
                let sub = self
                    .get(name)
                    .ok_or_else(|| LibraryError::UnknownCall(name.clone()))?;
                let args = args
                    .iter()
                    .map(|a| self.expand_above(a, keep_level))
                    .collect::<Result<Vec<_>, _>>()?;
                if sub.level <= keep_level {
                    return Ok(Expr::call(name.clone(), args));
                }
                let bindings: BTreeMap<String, Expr> =
                    sub.params.iter().cloned().zip(args).collect();
                self.expand_above(&sub.body.substitute(&bindings), keep_level)
            }
            Expr::Node { kind, name, args } => Ok(Expr::node(
                *kind,
                name.clone(),
                args.iter()
                    .map(|a| self.expand_above(a, keep_level))
                    .collect::<Result<_, _>>()?,
            )),
            _ => Ok(e.clone()),
        }
    }

    /// Full macro expansion to base primitives.
    pub fn expand(&self, e: &Expr) -> Result<Expr, LibraryError> {
        self.expand_above(e, 0)
    }

    fn rewrite_node(&self, e: &Expr) -> Expr {
        let Expr::Node { kind, name, args } = e else {
            return e.clone();
        };
        for &i in &self.match_order {
            let sub = &self.subroutines[i];
            let mut bindings = BTreeMap::new();
            if unify(&sub.expanded, e, &mut bindings) {
                let args = sub
                    .params
                    .iter()
                    .map(|p| self.rewrite_node(&bindings[p]))
                    .collect();
                return Expr::call(sub.name.clone(), args);
            }
        }
        Expr::node(
            *kind,
            name.clone(),
            args.iter().map(|a| self.rewrite_node(a)).collect(),
        )
    }

    /// Rewrites `program` into this library and checks that the result
    /// denotes the same picture. Calls in the input are expanded first, so
    /// rewriting is idempotent.
    pub fn rewrite(&self, program: &Expr) -> Result<Expr, LibraryError> {
        let base = self.expand(program)?;
        let out = self.rewrite_node(&base);
        let before = evaluate(self.domain(), &base)?;
        let after = evaluate(self.domain(), &self.expand(&out)?)?;
        if !before.equivalent(&after) {
            return Err(LibraryError::Mismatch {
                program: base.to_string(),
            });
        }
        Ok(out)
    }

    pub fn to_file(&self) -> LibraryFile {
        LibraryFile {
            subdomain: self.subdomain,
            level: self.level,
            size: self.size(),
            base: self
                .domain()
                .base_inventory()
                .names()
                .map(str::to_string)
                .collect(),
            subroutines: self
                .subroutines
                .iter()
                .map(|s| SubroutineRecord {
                    name: s.name.clone(),
                    level: s.level,
                    params: s.params.clone(),
                    body: s.body.to_string(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubroutineRecord {
    pub name: String,
    pub level: usize,
    pub params: Vec<String>,
    pub body: String,
}

/// Serialized form of a library.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryFile {
    pub subdomain: Subdomain,
    pub level: usize,
    pub size: usize,
    pub base: Vec<String>,
    pub subroutines: Vec<SubroutineRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub subdomain: Subdomain,
    pub level: usize,
    pub size: usize,
    pub n: usize,
    pub total_len: usize,
    pub mean_len: f64,
    pub cost: f64,
}

/// Rewrites every program and returns |L| + mean |π_L|.
pub fn combined_cost<'a>(
    library: &ConceptLibrary,
    programs: impl IntoIterator<Item = &'a Expr>,
) -> Result<CostRow, LibraryError> {
    let mut total = 0usize;
    let mut n = 0usize;
    for p in programs {
        total += program_length(&library.rewrite(p)?);
        n += 1;
    }
    if n == 0 {
        return Err(LibraryError::EmptyCorpus);
    }
    let mean = total as f64 / n as f64;
    Ok(CostRow {
        subdomain: library.subdomain,
        level: library.level,
        size: library.size(),
        n,
        total_len: total,
        mean_len: mean,
        cost: library.size() as f64 + mean,
    })
}

/// CSV with header `subdomain,level,size,mean_len,cost`.
pub fn cost_csv(rows: &[CostRow]) -> String {
    let mut out = String::from("subdomain,level,size,mean_len,cost\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6}",
            r.subdomain, r.level, r.size, r.mean_len, r.cost
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{parse_sexpr, tokenize};

    #[test]
    fn base_library_is_identity() {
        let lib = build_library(Subdomain::NutsBolts, 0).unwrap();
        let p = parse_sexpr("(connect (line) (circle))", &lib.inventory).unwrap();
        assert_eq!(lib.rewrite(&p).unwrap(), p);
        assert_eq!(lib.size(), 14);
    }

    #[test]
    fn polygon_is_recovered() {
        let l1 = build_library(Subdomain::NutsBolts, 1).unwrap();
        let call = parse_sexpr("(polygon 6 1.5)", &l1.inventory).unwrap();
        let base = l1.expand(&call).unwrap();
        assert!(!base.contains_call());
        assert_eq!(l1.rewrite(&base).unwrap(), call);
        let body = &l1.get("polygon").unwrap().body;
        assert_eq!(body.name(), Some("repeat"));
        assert_eq!(body.args()[0].args()[0].name(), Some("line"));
    }

    #[test]
    fn repeated_variable_binds_consistently() {
        let mut b = BTreeMap::new();
        let pat = Expr::op("plus", vec![Expr::var("a"), Expr::var("a")]);
        let e = Expr::op("plus", vec![Expr::num(1.0), Expr::num(2.0)]);
        assert!(!unify(&pat, &e, &mut b));
        let e = Expr::op("plus", vec![Expr::num(2.0), Expr::num(2.0)]);
        b.clear();
        assert!(unify(&pat, &e, &mut b));
    }

    #[test]
    fn tower_part_tokens() {
        let l1 = build_library(Subdomain::Bridges, 1).unwrap();
        let call = parse_sexpr("(arch (empty) 2)", &l1.inventory).unwrap();
        let base = l1.expand(&call).unwrap();
        assert_eq!(
            tokenize(&l1.rewrite(&base).unwrap()).0,
            vec!["arch", "empty"]
        );
    }

    #[test]
    fn bad_level() {
        assert_eq!(
            build_library(Subdomain::Houses, 4).unwrap_err(),
            LibraryError::BadLevel(4)
        );
    }
}

//! Generative templates for the eight subdomains.
//!
//! Each subdomain has a part hierarchy. Tier 1 and tier 2 subroutines are
//! fixed part definitions; tier 3 holds one whole-object template per
//! discrete skeleton (part kinds and layout), parameterised by the
//! remaining numeric choices. A stimulus is an instance of a tier-3
//! template, so its program at any lower level is obtained by expanding
//! the calls above that level.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::domain::{Domain, Subdomain};
use crate::program::Expr;

pub mod drawings;
pub mod towers;

/// Source form of one library subroutine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubroutineDef {
    pub name: String,
    pub level: usize,
    pub params: Vec<String>,
    /// S-expression over the symbols of lower levels; `$p` marks parameters.
    pub body: String,
}

impl SubroutineDef {
    pub fn new(name: &str, level: usize, params: &[&str], body: &str) -> Self {
        SubroutineDef {
            name: name.to_string(),
            level,
            params: params.iter().map(|p| p.to_string()).collect(),
            body: body.to_string(),
        }
    }
}

/// One concrete object: a call to a tier-3 template plus the named choices
/// that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub template: String,
    pub program: Expr,
    pub features: BTreeMap<String, Value>,
}

/// All subroutine definitions of a subdomain, tiers 1 to 3, in level order.
pub fn definitions(sub: Subdomain) -> Vec<SubroutineDef> {
    match sub.domain() {
        Domain::Drawings => drawings::definitions(sub),
        Domain::Towers => towers::definitions(sub),
    }
}

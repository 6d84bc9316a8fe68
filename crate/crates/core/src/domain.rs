use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::program::{NodeKind, SymbolInventory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Drawings,
    Towers,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Drawings => "drawings",
            Domain::Towers => "towers",
        }
    }

    pub fn subdomains(self) -> &'static [Subdomain] {
        match self {
            Domain::Drawings => &Subdomain::ALL[..4],
            Domain::Towers => &Subdomain::ALL[4..],
        }
    }

    /// The base primitives every program of the domain is written in.
    pub fn base_inventory(self) -> SymbolInventory {
        use NodeKind::*;
        match self {
            Domain::Drawings => SymbolInventory::new()
                .with("line", Primitive, 0)
                .with("circle", Primitive, 0)
                .with("square", Primitive, 0)
                .with("scaled_rect", Primitive, 2)
                .with("graphics_matrix", Operator, 4)
                .with("apply_transform", Operator, 2)
                .with("repeat", Operator, 3)
                .with("connect", Operator, 2)
                .with("plus", Operator, 2)
                .with("minus", Operator, 2)
                .with("times", Operator, 2)
                .with("div", Operator, 2)
                .with("sin", Operator, 1)
                .with("cos", Operator, 1),
            Domain::Towers => SymbolInventory::new()
                .with("empty", Primitive, 0)
                .with("vertical_red", Primitive, 0)
                .with("horizontal_blue", Primitive, 0)
                .with("left", Operator, 3)
                .with("right", Operator, 3),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subdomain {
    NutsBolts,
    Vehicles,
    Gadgets,
    Furniture,
    Bridges,
    Cities,
    Houses,
    Castles,
}

impl Subdomain {
    pub const ALL: [Subdomain; 8] = [
        Subdomain::NutsBolts,
        Subdomain::Vehicles,
        Subdomain::Gadgets,
        Subdomain::Furniture,
        Subdomain::Bridges,
        Subdomain::Cities,
        Subdomain::Houses,
        Subdomain::Castles,
    ];

    pub fn domain(self) -> Domain {
        match self {
            Subdomain::NutsBolts
            | Subdomain::Vehicles
            | Subdomain::Gadgets
            | Subdomain::Furniture => Domain::Drawings,
            _ => Domain::Towers,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Subdomain::NutsBolts => "nuts_bolts",
            Subdomain::Vehicles => "vehicles",
            Subdomain::Gadgets => "gadgets",
            Subdomain::Furniture => "furniture",
            Subdomain::Bridges => "bridges",
            Subdomain::Cities => "cities",
            Subdomain::Houses => "houses",
            Subdomain::Castles => "castles",
        }
    }
}

impl fmt::Display for Subdomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown subdomain `{0}`")]
pub struct UnknownSubdomain(pub String);

impl FromStr for Subdomain {
    type Err = UnknownSubdomain;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace(['-', '&', ' '], "_");
        let key = match key.as_str() {
            "nuts_and_bolts" | "nuts__bolts" | "nutsbolts" | "nuts" => "nuts_bolts",
            other => other,
        };
        Subdomain::ALL
            .into_iter()
            .find(|d| d.as_str() == key)
            .ok_or_else(|| UnknownSubdomain(s.to_string()))
    }
}

/// A library level, 0 (base) through 3.
pub const LEVELS: [usize; 4] = [0, 1, 2, 3];

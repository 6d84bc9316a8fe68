//! Domain-dispatched evaluation of base programs.

use thiserror::Error;

use crate::domain::Domain;
use crate::drawing::{self, EvalError, Geometry, SvgStyle, DEFAULT_TOL};
use crate::program::Expr;
use crate::tower::{self, BlockPlacement, TowerError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemanticsError {
    #[error(transparent)]
    Drawing(#[from] EvalError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error("cannot render: {0}")]
    Render(String),
}

/// What a base program denotes in its domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Rendering {
    Drawing(Geometry),
    Tower(Vec<BlockPlacement>),
}

impl Rendering {
    /// Hex SHA-256 of the canonical form (rounded geometry or sorted cells).
    pub fn digest(&self) -> String {
        match self {
            Rendering::Drawing(g) => g.digest(),
            Rendering::Tower(p) => tower::placement_digest(p),
        }
    }

    /// Same picture: geometry within [`DEFAULT_TOL`], or identical occupancy.
    pub fn equivalent(&self, other: &Rendering) -> bool {
        match (self, other) {
            (Rendering::Drawing(a), Rendering::Drawing(b)) => {
                drawing::geometry_equal(a, b, DEFAULT_TOL)
            }
            (Rendering::Tower(a), Rendering::Tower(b)) => {
                matches!((tower::occupancy(a), tower::occupancy(b)), (Ok(x), Ok(y)) if x == y)
            }
            _ => false,
        }
    }

    pub fn to_svg(&self) -> Result<String, SemanticsError> {
        match self {
            Rendering::Drawing(g) => drawing::render_drawing_svg(g, SvgStyle::default())
                .map_err(|e| SemanticsError::Render(e.to_string())),
            Rendering::Tower(p) => Ok(tower::render_tower_svg(p)?),
        }
    }

    /// Number of drawn elements (segments plus circles, or blocks).
    pub fn element_count(&self) -> usize {
        match self {
            Rendering::Drawing(g) => g.len(),
            Rendering::Tower(p) => p.len(),
        }
    }
}

/// Evaluates a program written in base primitives only.
pub fn evaluate(domain: Domain, program: &Expr) -> Result<Rendering, SemanticsError> {
    Ok(match domain {
        Domain::Drawings => Rendering::Drawing(drawing::eval_drawing(program)?),
        Domain::Towers => Rendering::Tower(tower::eval_tower(program)?),
    })
}

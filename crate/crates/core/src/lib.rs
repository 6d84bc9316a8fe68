//! Graphics programs over two domains (2D drawings and block towers),
//! hierarchical concept libraries that compress them, and the statistics
//! used to ask which library best matches how people describe them.
//!
//! The usual flow is [`stimgen::generate_stimuli`] to build a corpus,
//! [`library::build_library`] and [`library::combined_cost`] to score each
//! abstraction level, and [`alignment::cross_validate`] to align
//! descriptions with the tokens of each level.

pub mod alignment;
pub mod domain;
pub mod drawing;
pub mod library;
pub mod program;
pub mod semantics;
pub mod stimgen;
pub mod templates;
pub mod textstats;
pub mod tower;

//! Exact analysis of search for a hidden target on rooted metric trees.
//!
//! The crate models a tree network with rational arc lengths, hiding
//! distributions given by node atoms plus per-arc polynomial cdf pieces,
//! and unit-speed search trajectories. Everything is computed in exact
//! rational arithmetic: expected search times, the closed forms for
//! balanced distributions, the balanced / monotone / leafy /
//! forward-biased / Kella classifications with witnesses, a brute-force
//! minimum-latency oracle on discretized instances, and depot selection
//! for the Delivery Man Problem.

pub mod classify;
pub mod depot;
pub mod hiding;
pub mod instance;
pub mod net;
pub mod oracle;
pub mod poly;
pub mod rat;
pub mod trajectory;

pub use classify::{ClassificationReport, Predicate, Verdict, Witness};
pub use hiding::{HidingDistribution, SubtreeStats};
pub use net::{ArcId, NetPoint, NodeId, Subtree, TreeNetwork};
pub use rat::Rat;
pub use trajectory::Trajectory;

use thiserror::Error;

/// Errors shared across the crate: input validation, domain preconditions
/// and resource caps.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown arc `{0}`")]
    UnknownArc(String),
    #[error("offset {offset} out of range [0, {len}] on arc `{arc}`")]
    OffsetOutOfRange { arc: String, offset: String, len: String },
    #[error("arc set is not a tree: {0}")]
    NotATree(String),
    #[error("arc `{0}` has non-positive length")]
    NonPositiveLength(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("point is a leaf node: {0}")]
    LeafPoint(String),
    #[error("network is not a star rooted at its center")]
    NotAStar,
    #[error("network is not a two-arc star")]
    NotTwoArcStar,
    #[error("arc lengths are not all equal")]
    NotUnitArcs,
    #[error("distribution is not balanced (required here): {0}")]
    NotBalanced(String),
    #[error("trajectory must start at the root")]
    TrajectoryNotAtRoot,
    #[error("trajectory is not terminating: unreached mass {0}")]
    NotTerminating(String),
    #[error("depth-first search count {count} exceeds cap {cap}")]
    DfCountExceeded { count: u128, cap: u128 },
    #[error("discretization needs {needed} nodes, exceeding cap {cap}")]
    NodeCapExceeded { needed: usize, cap: usize },
    #[error("legs are not probabilistically disjoint: union mass {union} != {sum}")]
    LegsNotDisjoint { union: String, sum: String },
    #[error("swap legs must share an anchor point: {0}")]
    LegsNotAnchored(String),
    #[error("{0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Error {
        Error::Parse(format!("line {}: {}", line, msg.into()))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Groupoid models of finite dynamical systems.
//!
//! A system is a finite point set with a partial self-map.  The crate builds
//! the associated discrete groupoids (arrow triples `(x, p, y)` graded by the
//! degree `p`), transformation groupoids of finite group actions, and the
//! derived constructions used to compare systems: continuous orbit
//! equivalence data, flip-conjugacy decompositions for permutations,
//! stabilisation and Kakutani-type equivalence, and the reconstruction of a
//! groupoid from its bisection-supported normalisers.
//!
//! Everything is decided exactly: countable groupoids are handled through
//! bounded enumerations plus stabiliser arithmetic, never by truncation.

pub mod acceptance;
pub mod actions;
pub mod catalog;
pub mod cert;
pub mod coe;
pub mod dr;
pub mod equiv;
pub mod flip;
pub mod group;
pub mod groupoid;
pub mod io;
pub mod selftest;
pub mod tsc;
pub mod weyl;

pub use cert::{Certificate, Check};
pub use dr::{DrArrow, DrSystem, PointId, StabInfo};
pub use group::{Group, GroupElem, ZSubgroup};
pub use groupoid::{Arrow, ArrowMap, Grading, Groupoid, Unit};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("element does not belong to the group: {0}")]
    GroupMismatch(String),
    #[error("non-composable pair")]
    NonComposable,
    #[error("arrow is not a member of the groupoid: {0}")]
    NotAnArrow(String),
    #[error("map image is not an arrow of the target groupoid: {0}")]
    ImageNotArrow(String),
    #[error("cocycle value depends on the witness: {0}")]
    WitnessDependence(String),
    #[error("sign dichotomy fails at {0}; the input map is not an isomorphism")]
    SignDichotomy(String),
    #[error("point outside the open support")]
    OutsideSupport,
    #[error("grade mismatch (R2)")]
    GradeMismatch,
    #[error("partial map mismatch (R3)")]
    AlphaMismatch,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Error {
        Error::Invalid(msg.into())
    }
}

//! Structural observability analysis for estimation on product Lie groups.
//!
//! The crate covers matrix Lie group primitives ([`lie`]), linearized
//! invariant error systems over factored algebras ([`system`]), Gramian
//! based coupling analysis ([`gramian`]), sensor redundancy checks
//! ([`diversity`]), the log-volume decomposition of the filter recursion
//! ([`filter`]) and the SE(2)/SE(3) navigation case studies ([`scenarios`]).

pub mod diversity;
pub mod error;
pub mod filter;
pub mod gramian;
pub mod lie;
pub mod linalg;
pub mod scenarios;
pub mod subspace;
pub mod system;

pub use error::{Error, Result};
pub use linalg::RankTolerance;
pub use subspace::Subspace;
pub use system::{Channel, ErrorSystem, FactorStructure, Schedule};

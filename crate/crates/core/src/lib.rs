//! Tools for measuring how data-balancing methods change model behavior.
//!
//! The crate covers the full pipeline: datasets and the simulation
//! generator ([`data`]), six resampling methods ([`balancing`]), three
//! learner families ([`learners`]), PDP/ALE/permutation-importance
//! estimators ([`explain`]), the SDD/ASDD behavior metrics and the
//! statistical tests ([`compare`]), and experiment orchestration with the
//! performance gain plot ([`runner`]).

pub mod balancing;
pub mod compare;
pub mod data;
pub mod error;
pub mod explain;
pub mod learners;
pub mod runner;
pub mod seed;

pub use error::{Error, Result};

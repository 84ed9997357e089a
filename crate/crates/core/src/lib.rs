//! Privacy auditing for synthetic tabular data.
//!
//! The central question this crate answers: given a synthetic dataset, a
//! reference sample from the population, and a set of candidate records, how
//! well can an attacker tell which candidates were in the generator's
//! training set? The flagship attack scores each candidate by the log ratio
//! of the synthetic-data density to the population density, so records the
//! generator overrepresents relative to the population stand out regardless
//! of whether they sit in a dense or a sparse region. Several published
//! baseline attacks (discriminator-based, distance-based, density-only) are
//! included for comparison, along with toy generators with a tunable
//! memorization knob, evaluation metrics, and a full audit pipeline.
//!
//! Everything is deterministic given a seed: the random generator is a
//! fixed, documented algorithm, and parallel work derives child seeds from
//! (master seed, task index) rather than sharing state.

pub mod attacks;
pub mod audit;
pub mod data;
pub mod density;
pub mod error;
pub mod eval;
pub mod generators;
pub mod numcore;

pub use error::{AuditError, Result};

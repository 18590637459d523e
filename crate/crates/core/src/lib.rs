//! Trust-aware neighborhood collaborative filtering.
//!
//! Rating prediction over a sparse user-item matrix using a similarity
//! measure built on the Bhattacharyya coefficient between per-item rating
//! histograms. Because the coefficient compares rating *distributions*,
//! similarity between two users is defined over all pairs of items they
//! rated, not just co-rated ones, which keeps it computable on extremely
//! sparse data. A directed trust graph feeds the social variants, which
//! blend each scorer's direct similarity (or rating difference) with the
//! opinion of the query user's trusted set.
//!
//! The crate ships two prediction methods:
//!
//! * **Method A** — a similarity-weighted average of scorer rates, where
//!   the weight is the mean of direct similarity and trust-set similarity.
//! * **Method B** — an unweighted average of scorer rates, each first
//!   shifted by the (trust-blended) signed rating difference between the
//!   query user and that scorer.
//!
//! Every similarity kernel exists in two forms: a naive reference that
//! evaluates the defining double sum term by term, and a factorized fast
//! form over per-user signature profiles. The naive forms are kept as
//! permanent test oracles; the fast forms are what the evaluation harness
//! runs.

pub mod dataset;
mod error;
pub mod eval;
pub mod predict;
pub mod similarity;
pub mod social;

pub mod cli;

pub use error::{Error, Result};

//! slicekit — microdata anonymization by slicing.
//!
//! The pipeline: load and prepare a table ([`table`]), measure attribute
//! correlations ([`correlation`]), group correlated attributes into columns
//! ([`partition`]), partition tuples into buckets that keep sensitive-value
//! disclosure below 1/l and permute each bucket's columns ([`slicing`]).
//! [`baselines`] implements generalization and bucketization for comparison,
//! [`membership`] quantifies the fake tuples slicing introduces against
//! membership disclosure, and [`workload`] measures utility left for a
//! classification task.

pub mod baselines;
pub mod correlation;
pub mod error;
pub mod membership;
mod mondrian;
pub mod partition;
pub mod seed;
pub mod slicing;
pub mod table;
pub mod workload;

pub use error::{Result, SliceError};
pub use table::{Table, Value};

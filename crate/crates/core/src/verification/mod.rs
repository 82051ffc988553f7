//! Numerical checkers. Each returns a [`BoundReport`].

pub mod algebra;
pub mod conjugation;
pub mod domain;
pub mod kernel;
pub mod rbound;
pub mod report;
pub mod samples;

pub use report::BoundReport;
pub use samples::{core_test_function, FamilySample};

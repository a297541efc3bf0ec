//! Manifest-driven verification of the tangent groupoid of a Heisenberg
//! manifold: parsing and validation, check suites, and JSON reports.

pub mod builtin;
pub mod error;
pub mod manifest;
pub mod report;
pub mod run;
pub mod suites;

pub use error::CliError;
pub use report::{Anchor, Record, Report};
pub use suites::Suite;

//! Executable versions of the map's correctness claims: a structural
//! validator, stress scenarios, and scripted interleavings.

mod shape;
mod stress;
mod validate;

#[cfg(feature = "test-hooks")]
pub mod conformance;
#[cfg(feature = "test-hooks")]
pub mod probe;

pub use shape::{level_name, BucketShape, LevelShape, Shape};
pub use stress::{
    stress, Scenario, StressOutcome, StressParams, Tallies, UnknownScenario,
};
pub use validate::{validate, ValidationReport, Violation, ViolationCode};

//! Potential functions, empirical one-step drift, and hitting-time bounds from drift.

mod bounds;
mod estimate;
mod potential;

pub use bounds::{
    harmonic_number, level_dependent_lower_bound, multiplicative_drift_lower_bound,
    multiplicative_drift_upper_bound, variable_drift_upper_bound, DriftBoundInputs, LowerBound,
    EULER_MASCHERONI,
};
pub use estimate::{estimate_drift, Conditioning, DriftEstimate, Level};
pub use potential::{potential, PotentialKind, DEFAULT_EXPONENTIAL_BASE};

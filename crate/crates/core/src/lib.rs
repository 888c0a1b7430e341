//! Interval estimates of residential burglary incidence and rates.
//!
//! Police-reported counts are adjusted upward for offenses suppressed by the
//! UCR Hierarchy Rule, divided by a victimization-survey reporting probability
//! that is only known to lie inside a confidence interval, and scaled by two
//! competing population (or household) estimates. Every step carries a closed
//! interval rather than a point, and comparisons between cities or years are
//! only declared signed when the resulting intervals are disjoint.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod chart;
pub mod cli;
pub mod comparison;
pub mod domain;
pub mod error;
pub mod ingest;
pub mod interval;
pub mod report;
pub mod sim;

pub use bounds::{compute_all, BoundsResult, ComputeOptions, PopBasis, RateScales};
pub use comparison::{ComparisonVerdict, Metric, PctBase, Verdict};
pub use domain::{
    CityName, CityYearRecord, Dataset, Finding, HierarchyAssumption, ReportingRateEstimate,
};
pub use error::{Error, Result};
pub use interval::{ConfidenceSpec, Interval};
pub use sim::{CoverageReport, SimScenario};

//! Shape-restricted testing of discrete distributions over `{1..n}`.
//!
//! Given sample access to an unknown distribution, the testers here decide
//! whether it belongs to a structured class (monotone, unimodal, t-modal,
//! convex, concave, log-concave, MHR, t-histogram, piecewise polynomial,
//! Binomial/PBD) or is epsilon-far from it in L1 distance. The library also
//! ships the per-class L1 projection oracles, constructive interval
//! decompositions, a tolerant tester, and hard-instance generators used for
//! sample-complexity benchmarking.

pub mod bench;
pub mod classes;
pub mod distfile;
pub mod effective;
pub mod error;
pub mod hardness;
pub mod hist;
pub mod l2;
pub mod lp;
pub mod project;
pub mod sampling;
pub mod splittable;
pub mod structure;
pub mod tolerant;

pub use classes::{ClassSpec, ClassTag};
pub use error::Error;
pub use hist::{Histogram, Interval, Partition};
pub use sampling::{HistogramSource, SampleSource};
pub use splittable::{TestOutcome, Verdict};

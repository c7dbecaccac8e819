//! Finitely supported measures on groups and their convolution powers.

pub mod cache;
pub mod convolve;
pub mod engine;
pub mod gap;
pub mod radial;
pub mod sparse;
pub mod spec;
pub mod weight;

#[cfg(test)]
mod tests;

pub use cache::DiskCache;
pub use convolve::{convolution_power, convolve, convolve_at, power_sequence, truncate, Truncation};
pub use engine::{Bounded, Interval, PowerEngine, SparsePowers};
pub use gap::{gap_ratio_profile, return_gap, GapSequence};
pub use radial::FreeRadialWalk;
pub use sparse::{tv_half_distance, ErrorLedger, ExactMeasure, FloatMeasure, NormP, SparseMeasure};
pub use spec::MuSpec;
pub use weight::{Backend, Rational, Weight};

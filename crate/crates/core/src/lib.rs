//! Exact intersection theory on normal surfaces and toric varieties.

// Error variants carry exact rationals for diagnostics.
#![allow(clippy::result_large_err)]

pub mod chern;
pub mod exact;
pub mod ktheory;
pub mod resolution;
pub mod surface;
pub mod toric;

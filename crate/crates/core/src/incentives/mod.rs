//! How much a coalition gains by misreporting.
//!
//! Ratios compare each corrupted agent's true utility under the manipulated
//! outcome against its utility under the truthful outcome.

mod binary;
mod mnw;
mod ratio;
mod search;

pub use binary::{binary_reduction, binary_reduction_for_rows, BinaryReduction};
pub use mnw::{binary_probes, mnw_manipulation_ratio};
pub use ratio::{
    evaluate_against_profile, evaluate_manipulation, gain_ratio, OrdinalMechanism, RatioReport,
    RatioValue,
};
pub use search::{
    exhaustive_search, search_size, Aggregate, SearchOptions, SearchResult, SEARCH_LIMIT,
};

//! Ordinal allocation mechanisms.

mod coupling;
mod round_robin;
mod serial;

pub use coupling::{
    coupling_violations, expand_profile, factorial_copies, factorial_power, minimal_coupling_t,
    ps_via_rr, ps_via_rr_traced, CopyUniverse, ReductionRun, FACTORIAL_T_LIMIT,
};
pub use round_robin::{round_robin, Pick, RrTrace};
pub use serial::{probabilistic_serial, PsStep, PsTrace};

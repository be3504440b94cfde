//! Fair-division mechanisms and their behavior under coalition manipulation.
//!
//! The crate implements Round-Robin, Probabilistic Serial (as an exact
//! eating-step computation and as Round-Robin over copies of goods), and
//! Maximum Nash Welfare via a Fisher market solved with proportional
//! response dynamics. The [`incentives`] module measures how much a
//! coalition of agents can gain by misreporting, and [`instances`] builds the
//! known worst-case constructions together with their closed-form ratios.

pub mod cli;
pub mod error;
pub mod fairness;
pub mod fisher;
pub mod incentives;
pub mod instances;
pub mod mechanisms;
pub mod model;
pub mod rational;

pub use error::{FisherError, IncentiveError, InstanceError, MechanismError, ModelError};
pub use model::{
    Coalition, FractionalAllocation, Instance, IntegralAllocation, Misreport, OrdinalProfile, Usage,
};
pub use rational::Rational;

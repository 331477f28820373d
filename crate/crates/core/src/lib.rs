//! Time resource networks.
//!
//! A [`Trn`] couples a temporal network (STN, STNU or pSTN) with simple
//! resource constraints `<start, end, rate>`. It is time-resource consistent
//! when one schedule satisfies the temporal network and keeps net resource
//! usage non-positive at all times. Two deciders are provided: a pruned
//! ordering search ([`cp::solve`]) and a big-M MIP encoding ([`mip`]) solved
//! by an external executable.

pub mod atn;
pub mod bench;
pub mod cp;
pub mod document;
pub mod error;
pub mod gaussian;
pub mod generator;
pub mod mip;
pub mod resource;
pub mod scenario;
pub mod temporal;

pub use atn::{tc_check, Atn, ContingentLink, Distribution, Pstn, Stnu, TcResult, UncertainDuration};
pub use cp::{solve, solve_exhaustive, SolveResult, SolverConfig};
pub use error::{Error, Result};
pub use resource::{Ordering, ResourceConstraint, Trn};
pub use temporal::{EventId, Schedule, SimpleTemporalConstraint, Stc, Stn};

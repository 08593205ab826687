//! School choice with strict priorities: deferred acceptance, top trading
//! cycles and immediate acceptance; the mutually-best-pairs conditions under
//! which DA is efficient; envy and efficiency diagnostics; a cardinal random
//! market generator; and a Monte Carlo sweep harness.
//!
//! Students and schools are 0-based indices. Text output labels them
//! `i1, i2, ...` and `s1, s2, ...`.

pub mod analysis;
pub mod conditions;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod market;
pub mod mechanisms;
pub mod simgen;

pub use error::{Error, Result};
pub use market::{Allocation, Assignment, Market, School, Student};
pub use mechanisms::Mechanism;

//! Software reliability growth modelling with a geometric sequence of fault
//! failure rates.
//!
//! * [`data`]: failure histories, CSV ingestion and time-unit conversion.
//! * [`geometric`]: the geometric-rates model equations.
//! * [`optim`]: Nelder-Mead simplex minimisation.
//! * [`estimation`]: log-scale least-squares fitting of the geometric model.
//! * [`comparison`]: Musa basic, Musa-Okumoto, Littlewood-Verrall and NHPP models.
//! * [`evaluation`]: number-of-failures predictive validity and median aggregation.
//! * [`simulation`]: Monte-Carlo failure histories.
//! * [`cli`]: the `georel` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod comparison;
pub mod data;
pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod geometric;
pub mod optim;
pub mod simulation;

pub use error::{Error, Result};

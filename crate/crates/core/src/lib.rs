//! Exact symbolic engine for deformed quantum phase spaces.

pub mod borel;
pub mod coalgebra;
pub mod commutators;
pub mod config;
pub mod error;
pub mod expr;
pub mod phase;
pub mod qdeform;
pub mod realization;
pub mod report;
pub mod scalar;
pub mod series;
pub mod space;
pub mod star;

pub use error::{Error, Result};
pub use scalar::{GaussScalar, Rational};
pub use series::{AnalyticFn, BankMap, Key, ParamPoly, Series, UNBOUNDED};
pub use space::{banks, Bank, Banks, Exps, Metric, Space};

//! Elliptic Demazure-Lusztig operators with dynamical parameters:
//! root data and Weyl combinatorics, numeric theta functions, exact
//! symbolic coefficients, the twisted group algebra with its standard and
//! dynamical modules, operator matrices with closed-form entries, elliptic
//! classes with duality checks, and integer bundle-degree bookkeeping.

pub mod bundle_degree;
pub mod check;
pub mod coefficients;
pub mod dl_operators;
pub mod elliptic_classes;
pub mod error;
pub mod root_system;
pub mod theta;
pub mod twisted_algebra;

pub use error::{Error, Result};

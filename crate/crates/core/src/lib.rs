//! Numerical certification and falsification of inequalities involving the
//! integer part `floor(x)` and fractional part `frac(x)`.

pub mod expr;
pub mod numerics;
pub mod piecewise;
pub mod corpus;
pub mod config;
pub mod falsifier;
pub mod parallel;
pub mod certifier;
pub mod derivation;
pub mod report;
pub mod cli;

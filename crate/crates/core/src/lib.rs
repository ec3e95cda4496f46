//! Non-termination proving for integer programs with non-determinism.
//!
//! The pipeline lowers a program to a transition system, searches for a
//! certificate by template constraint solving, and validates every
//! certificate by enumeration before reporting it.

pub mod frontend;
pub mod poly;
pub mod sexpr;
pub mod tsys;
pub mod cert;
pub mod encode;
pub mod solve;
pub mod reach;
pub mod certcheck;
pub mod prove;
pub mod corpus;

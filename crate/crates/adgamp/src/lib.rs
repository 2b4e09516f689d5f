//! Robust generalized approximate message passing for linear inverse
//! problems: an adaptively damped solver engine, mean-removal preprocessing
//! for difficult measurement matrices, the scalar channel library, and a
//! benchmark harness for sparse-recovery experiments.

pub mod channels;
pub mod cost;
pub mod engine;
pub mod ensembles;
pub mod harness;
pub mod linop;
pub mod meanremoval;
pub mod oracle;
pub mod special;

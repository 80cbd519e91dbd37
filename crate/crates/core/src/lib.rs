//! Interactive answer set programming.
//!
//! A session holds a system state: a ground program, a set of input atoms,
//! an assignment to the inputs, and a set of assumptions. State-changing
//! operators (`define`, `external`, `release`, `assert`, `open`, `retract`,
//! `assume`, `cancel`) evolve it, and queries are answered against the stable
//! models of the program the state induces.

pub mod ground;
pub mod query;
pub mod service;
pub mod shell;
pub mod solver;
pub mod state;
pub mod syntax;

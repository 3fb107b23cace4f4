//! Exact alignment-based conformance checking.

pub mod alignment;
pub mod eventlog;
pub mod fixtures;
pub mod flow;
pub mod io;
pub mod matrix;
pub mod petri;
pub mod rational;
pub mod reach;
pub mod sync;
pub mod astar;
pub mod selector;
pub mod generate;
pub mod bench;

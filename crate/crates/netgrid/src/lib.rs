//! netgrid: a compiler and cycle-accurate simulator for running single-clock
//! RTL netlists on a grid of simple 16-bit cores connected by a bufferless
//! torus NoC.
//!
//! The compiler accepts a textual netlist assembly (`.mntl`, see
//! `docs/format.md`), lowers it to a 16-bit instruction set, partitions it
//! into one process per core, fuses chains of bitwise logic into 4-input
//! custom functions, and emits collision-free, hazard-free static schedules
//! serialized as a bootstream. The machine simulator executes the bootstream
//! in lockstep and checks that no message is ever dropped and no data hazard
//! is ever violated.

pub mod bits;
pub mod cf;
pub mod error;
pub mod gen;
pub mod ir;
pub mod lower;
pub mod machine;
pub mod opt;
pub mod parallel;
pub mod pipeline;
pub mod report;
pub mod sched;

pub use error::{Error, Result};

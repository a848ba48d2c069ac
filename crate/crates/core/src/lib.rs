//! Bug localization for sequential Verilog designs.
//!
//! The pipeline parses a design, builds a program dependency graph with
//! registers as explicit delay-carrying nodes, simulates it against golden
//! I/O to collect per-cycle statement spectra, estimates each statement's
//! minimal propagation latency to an output, backtracks to a per-statement
//! activation cycle, and ranks statements by `(aef, 1/aep)` over the trace
//! prefix that ends at that cycle.

pub mod bench;
pub mod empc;
pub mod frontend;
pub mod localize;
pub mod pdg;
pub mod sim;
pub mod trace;

mod analysis;
mod bitset;

pub use analysis::{Analysis, Error};
pub use bitset::StmtSet;

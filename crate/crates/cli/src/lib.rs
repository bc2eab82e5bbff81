//! Library side of the `cvbench` command-line tool: sweep-table
//! construction with declared invariants, and the figure presets.

pub mod preset;
pub mod runs;
pub mod table;

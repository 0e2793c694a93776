//! Independent reference implementations and random fixtures used by the test suites.
//!
//! Everything here is written separately from the production code paths it checks:
//! the expression oracle evaluates while it parses instead of building a tree, the
//! adaptation oracle is a straight-line transcription of the retrieve / filter /
//! select-or-construct / retain branching, and the grid oracle enumerates the full
//! cartesian product of controllable values.

pub mod cbr;
pub mod expr;
pub mod fixtures;
pub mod grid;

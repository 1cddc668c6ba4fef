//! Planner library behind the `tempo` CLI: the ANML frontend, solver
//! subprocess management, the iterative-deepening planning loop, and
//! encoding statistics.

pub mod anml;
pub mod driver;
pub mod solver;
pub mod stats;

//! Epsilon-fairness for nonnegative allocations as a second-order cone
//! constraint, an embedded LP/SOCP interior-point solver, and the fair
//! minimum-load-shedding model for damaged transmission networks.

pub mod conic;
pub mod experiments;
pub mod fairness;
pub mod grid;
pub mod solver;
pub mod sparse;

pub use conic::{ConicProgram, LinearExpr, ModelError, Sense, StandardConicForm, VariableId};
pub use solver::{solve, Certificate, Solution, SolverError, SolverSettings, Status};

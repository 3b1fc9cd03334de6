//! Vaccine distribution toolkit.
//!
//! Picks distribution centers (DCs) out of a candidate hospital set with
//! k-medoids and silhouette model selection, then allocates a limited
//! vaccine stock to a population frame by frame. Each frame is a
//! capacitated, budgeted assignment problem solved exactly through a
//! min-cost-flow reduction. Four objective models are available:
//!
//! | name | weight of one assignment |
//! |------|--------------------------|
//! | `b`  | `alpha` |
//! | `p`  | `alpha + beta * priority` |
//! | `d`  | `alpha - gamma * distance` |
//! | `pd` | `alpha + beta * priority - gamma * distance` |
//!
//! Objective models, frame solvers and scenario generators are each a
//! family of trait objects looked up by name, see [`vdm::ModelRegistry`],
//! [`solver::SolverRegistry`] and [`simulation::GeneratorRegistry`].

pub mod clustering;
pub mod error;
pub mod io;
pub mod model;
pub mod simulation;
pub mod solver;
pub mod vdm;

pub use error::{Result, VdmError};

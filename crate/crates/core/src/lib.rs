//! Simulation of cursor-control techniques for pointing on a large curved
//! display: geometry, transfer functions, a synthetic participant model,
//! experiment runner and Fitts analysis.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod analysis;
pub mod config;
pub mod experiment;
pub mod geometry;
pub mod math;
pub mod pointer;
pub mod scalar;
pub mod tasks;
pub mod transfer;

pub use agent::AgentParams;
pub use experiment::{ExperimentPlan, TrialRecord};
pub use scalar::Scalar;
pub use transfer::TechniqueId;

pub type Geometry = geometry::DisplayGeometry<f64>;
pub type GeometryF32 = geometry::DisplayGeometry<f32>;
pub type Technique = transfer::TechniqueConfig<f64>;
pub type TechniqueF32 = transfer::TechniqueConfig<f32>;
pub type Cursor = pointer::CursorState<f64>;
pub type CursorF32 = pointer::CursorState<f32>;
pub type Task = tasks::TaskSpec<f64>;
pub type TaskF32 = tasks::TaskSpec<f32>;

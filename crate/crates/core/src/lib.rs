//! Time-domain model of a two-body heaving wave-energy converter with a
//! hydraulic power take-off, and the optimizers used to tune its PTO.
//!
//! The crate is organized bottom-up:
//!
//! - [`wave`]: Pierson-Moskowitz sea state and excitation
//! - [`dynamics`]: heave equations of motion for float and spar
//! - [`hpto`]: piston, rectifier, accumulators, motor and generator
//! - [`simulation`]: the coupled time loop and non-physical detection
//! - [`metrics`]: post-ramp reductions (mean powers, fluctuation ratio, extremes)
//! - [`feasibility`]: calibrated feasible region and the penalized objective
//! - [`optimizers`]: Nelder-Mead, box quasi-Newton, MVO, GA, Kriging, GSF
//! - [`exec`]: sequential or data-parallel batch evaluation

// `!(a < b)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod dynamics;
pub mod exec;
pub mod feasibility;
pub mod hpto;
pub mod metrics;
pub mod optimizers;
pub mod simulation;
pub mod wave;

pub use design::{DesignBounds, DesignVector, Variable};
pub use exec::Execution;
pub use feasibility::{FeasibleRegion, WecObjective};
pub use metrics::Metrics;
pub use simulation::{Assessment, NonPhysical, Pipeline, Scenario, SimulationResult, Simulator};

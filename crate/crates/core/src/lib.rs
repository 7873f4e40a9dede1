//! Lagrangian characteristics solver for the density of metastases
//! structured in size and angiogenic capacity, under anti-angiogenic and
//! cytotoxic therapy.
//!
//! The density obeys a transport equation on `(x_birth, b) x (theta_low, b)`
//! whose velocity is the tumor growth field of [`pkpd`], fed through the
//! birth side by a nonlocal emission term. Straightening the characteristics
//! ([`characteristics`]) turns the problem into two quantities that are
//! constant in time; [`transport`] discretizes them and [`verify`] checks the
//! discrete estimates, small-time asymptotics and convergence order.
//! [`config`] and [`runner`] provide file-driven runs and CSV output.

// `!(v > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristics;
pub mod config;
pub mod error;
pub mod field;
pub mod pkpd;
pub mod runner;
pub mod transport;
pub mod verify;

pub use characteristics::{Domain, Entrance, TimeGrid};
pub use error::{Error, Result};
pub use field::{Point, VelocityField};
pub use pkpd::{DrugSchedule, GrowthParams, Therapy, TumorGrowthField};
pub use transport::{
    DataMode, Discretization, InitialDensity, Model, Quadrature, Repartition, SimulationSeries,
    Solver, SolverOptions,
};

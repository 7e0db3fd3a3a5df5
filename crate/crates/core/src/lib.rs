//! Sparse recovery of dynamic measures regularized by a coercive
//! Benamou-Brenier energy.
//!
//! The unknown is a pair `(rho, m)` of a time-dependent measure and its
//! momentum, represented as a nonnegative combination of curve atoms. Given
//! linear observations of `rho` at a few sample times, [`solver::solve`]
//! minimizes `J_{alpha,beta}(rho, m) + 1/2 |A rho - y|^2` with a generalized
//! conditional gradient method.

pub mod curve;
pub mod error;
pub mod forward;
pub mod measure;
pub mod metrics;
pub mod rng;
pub mod solver;
pub mod verify;

pub use curve::{Curve, DomainBox, TimeGrid};
pub use error::{Error, Result};
pub use forward::{synthesize_data, KernelSpec, Observation};
pub use measure::{AtomJson, AtomicMeasurePair, CloudPoint, CurveAtom, MeasureJson, PointCloud};
pub use metrics::assignment_rmse;
pub use rng::SeededRng;
pub use solver::{solve, IterationRecord, SolveReport, SolverConfig, SolverState};

//! Generalized conditional gradient for
//! `min J_{alpha,beta}(rho, m) + 1/2 |A rho - y|^2` over atomic measures.
//!
//! Each outer iteration finds the curve atom that most decreases the
//! linearized objective, re-solves the conic weight problem, refines weights
//! and curves jointly, then prunes and merges. The surrogate gap computed
//! from the insertion candidate stops the loop.

mod insertion;
mod refine;
mod weights;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::curve::{Curve, DomainBox};
use crate::error::{Error, Result};
use crate::forward::Observation;
use crate::measure::{AtomicMeasurePair, CurveAtom};
use crate::rng::SeededRng;

pub use insertion::{insertion_gradient, insertion_objective, lmo_insert, LmoResult};
pub use refine::{fuse_close_atoms, joint_gradient, joint_objective, prune_and_merge, refine_atoms, reoptimize_weights, surrogate_gap};
pub use weights::{kkt_residual, qp_objective, weight_qp};

pub(crate) use insertion::{insertion_value, spatial_grid};

/// Solver parameters. Only `alpha` and `beta` are required in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "defaults::curve_nodes")]
    pub curve_nodes: usize,
    #[serde(default = "defaults::max_outer_iterations")]
    pub max_outer_iterations: usize,
    #[serde(default = "defaults::multistart_count")]
    pub multistart_count: usize,
    #[serde(default = "defaults::lmo_descent_steps")]
    pub lmo_descent_steps: usize,
    /// Largest node displacement per descent step; defaults to 5% of the box diameter.
    #[serde(default)]
    pub lmo_step_size: Option<f64>,
    #[serde(default = "defaults::refine_steps")]
    pub refine_steps: usize,
    /// Largest node displacement per refinement step; defaults to 5% of the box diameter.
    #[serde(default)]
    pub refine_step_size: Option<f64>,
    #[serde(default = "defaults::weight_qp_tolerance")]
    pub weight_qp_tolerance: f64,
    #[serde(default = "defaults::prune_threshold")]
    pub prune_threshold: f64,
    #[serde(default = "defaults::merge_tolerance")]
    pub merge_tolerance: f64,
    /// Atoms this close at every sample time are tried as one; defaults to 10% of the box diameter.
    #[serde(default)]
    pub fuse_radius: Option<f64>,
    #[serde(default = "defaults::gap_tolerance")]
    pub gap_tolerance: f64,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn curve_nodes() -> usize {
        33
    }
    pub fn max_outer_iterations() -> usize {
        30
    }
    pub fn multistart_count() -> usize {
        24
    }
    pub fn lmo_descent_steps() -> usize {
        300
    }
    pub fn refine_steps() -> usize {
        300
    }
    pub fn weight_qp_tolerance() -> f64 {
        1e-13
    }
    pub fn prune_threshold() -> f64 {
        1e-8
    }
    pub fn merge_tolerance() -> f64 {
        1e-9
    }
    pub fn gap_tolerance() -> f64 {
        1e-6
    }
}

impl SolverConfig {
    /// Default configuration for the given regularization parameters.
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            curve_nodes: defaults::curve_nodes(),
            max_outer_iterations: defaults::max_outer_iterations(),
            multistart_count: defaults::multistart_count(),
            lmo_descent_steps: defaults::lmo_descent_steps(),
            lmo_step_size: None,
            refine_steps: defaults::refine_steps(),
            refine_step_size: None,
            weight_qp_tolerance: defaults::weight_qp_tolerance(),
            prune_threshold: defaults::prune_threshold(),
            merge_tolerance: defaults::merge_tolerance(),
            fuse_radius: None,
            gap_tolerance: defaults::gap_tolerance(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return fail(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return fail(format!("beta must be positive, got {}", self.beta));
        }
        if self.curve_nodes < 2 {
            return fail("curve_nodes must be at least 2".into());
        }
        for (name, v) in [
            ("max_outer_iterations", self.max_outer_iterations),
            ("multistart_count", self.multistart_count),
            ("lmo_descent_steps", self.lmo_descent_steps),
            ("refine_steps", self.refine_steps),
        ] {
            if v == 0 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        for (name, v) in [
            ("weight_qp_tolerance", Some(self.weight_qp_tolerance)),
            ("prune_threshold", Some(self.prune_threshold)),
            ("merge_tolerance", Some(self.merge_tolerance)),
            ("gap_tolerance", Some(self.gap_tolerance)),
            ("lmo_step_size", self.lmo_step_size),
            ("refine_step_size", self.refine_step_size),
            ("fuse_radius", self.fuse_radius),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return fail(format!("{name} must be positive, got {v}"));
                }
            }
        }
        Ok(())
    }

    pub fn lmo_step_size(&self, domain: &DomainBox) -> f64 {
        self.lmo_step_size.unwrap_or(0.05 * domain.diameter())
    }

    pub fn refine_step_size(&self, domain: &DomainBox) -> f64 {
        self.refine_step_size.unwrap_or(0.05 * domain.diameter())
    }

    pub fn fuse_radius(&self, domain: &DomainBox) -> f64 {
        self.fuse_radius.unwrap_or(0.1 * domain.diameter())
    }
}

/// Iterate of the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub measure: AtomicMeasurePair,
    /// `A rho - y`.
    pub residual: Vec<f64>,
    pub objective: f64,
    pub gap: f64,
    pub iteration: usize,
}

impl SolverState {
    pub fn new(measure: AtomicMeasurePair, obs: &Observation) -> Self {
        refine::state_of(measure, obs, 0, f64::INFINITY)
    }

    pub fn fidelity(&self) -> f64 {
        0.5 * self.residual.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn j_value(&self) -> f64 {
        self.objective - self.fidelity()
    }
}

/// One row of the convergence log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub j_value: f64,
    pub fidelity: f64,
    pub gap: f64,
    pub atom_count: usize,
    pub wall_time: f64,
}

impl IterationRecord {
    pub const CSV_HEADER: &'static str = "iteration,objective,j_value,fidelity,gap,atom_count,wall_time_s";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.iteration, self.objective, self.j_value, self.fidelity, self.gap, self.atom_count, self.wall_time
        )
    }
}

/// Outcome of [`solve`].
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub state: SolverState,
    pub records: Vec<IterationRecord>,
    /// Final gap is within `gap_tolerance`.
    pub converged: bool,
    /// The final atom count respects `p <= dim(H)`.
    pub within_sparsity_bound: bool,
}

/// `J(measure) + 1/2 |A measure - y|^2`.
pub fn objective(measure: &AtomicMeasurePair, obs: &Observation) -> Result<f64> {
    let r = obs.residual(measure);
    Ok(measure.j_energy()? + 0.5 * r.iter().map(|v| v * v).sum::<f64>())
}

/// Runs the conditional-gradient loop from the empty measure.
pub fn solve(obs: &Observation, domain: &DomainBox, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    if domain.dim() != obs.spatial_dim() {
        return Err(Error::DimensionMismatch { expected: obs.spatial_dim(), found: domain.dim() });
    }
    let clock = Instant::now();
    let mut rng = SeededRng::new(config.seed);
    let empty = AtomicMeasurePair::empty(config.alpha, config.beta, config.curve_nodes)?;
    let mut state = SolverState::new(empty, obs);
    let mut records = Vec::new();
    let mut converged = false;

    for iteration in 0..=config.max_outer_iterations {
        state.iteration = iteration;
        let candidate = lmo_insert(obs, &state.residual, domain, config, rng.fork_seed())?;
        state.gap = surrogate_gap(&state, obs, candidate.eta);
        records.push(IterationRecord {
            iteration,
            objective: state.objective,
            j_value: state.j_value(),
            fidelity: state.fidelity(),
            gap: state.gap,
            atom_count: state.measure.len(),
            wall_time: clock.elapsed().as_secs_f64(),
        });
        log::debug!(
            "iteration {iteration}: objective {:.12e}, gap {:.3e}, atoms {}, eta {:.6}",
            state.objective,
            state.gap,
            state.measure.len(),
            candidate.eta
        );
        if state.gap <= config.gap_tolerance {
            converged = true;
            break;
        }
        if iteration == config.max_outer_iterations {
            break;
        }

        let previous = state.clone();
        let mut next = state.clone();
        let inserted = candidate.eta < -1.0
            && !next.measure.atoms().iter().any(|a| a.curve().sup_distance(&candidate.curve) < config.merge_tolerance);
        if inserted {
            let mut measure = next.measure.clone();
            // Placeholder weight; the weight problem below sets the real one.
            measure.push(CurveAtom::new(candidate.curve, config.alpha, config.beta)?, f64::MIN_POSITIVE)?;
            next = SolverState::new(measure, obs);
        }
        next = reoptimize_weights(&next, obs, config);
        next = refine_atoms(&next, obs, domain, config);
        next = reoptimize_weights(&next, obs, config);
        next = prune_and_merge(&next, obs, config);
        next = fuse_close_atoms(&next, obs, domain, config);
        if next.objective > previous.objective {
            next = previous.clone();
        }
        let decrease = previous.objective - next.objective;
        state = next;
        if !inserted && decrease <= 1e-15 * (1.0 + previous.objective.abs()) {
            log::debug!("iteration {iteration}: no progress, stopping");
            state.iteration = iteration + 1;
            let candidate = lmo_insert(obs, &state.residual, domain, config, rng.fork_seed())?;
            state.gap = surrogate_gap(&state, obs, candidate.eta);
            converged = state.gap <= config.gap_tolerance;
            records.push(IterationRecord {
                iteration: iteration + 1,
                objective: state.objective,
                j_value: state.j_value(),
                fidelity: state.fidelity(),
                gap: state.gap,
                atom_count: state.measure.len(),
                wall_time: clock.elapsed().as_secs_f64(),
            });
            break;
        }
    }

    let within_sparsity_bound = state.measure.len() <= obs.total_dim();
    if !within_sparsity_bound {
        log::warn!("recovered {} atoms, more than dim(H) = {}", state.measure.len(), obs.total_dim());
    }
    Ok(SolveReport { state, records, converged, within_sparsity_bound })
}

/// Unit-weight atom observation `A u_gamma` for a curve with canonical mass.
pub fn unit_atom_observation(curve: &Curve, obs: &Observation, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    let atom = CurveAtom::new(curve.clone(), alpha, beta)?;
    Ok(obs.atom_observation(atom.curve(), atom.mass()))
}

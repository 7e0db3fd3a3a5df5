//! Seeded comparison of `lmo_insert` against brute-force enumeration on
//! coarse instances.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use bbspike_core::solver::{insertion_objective, lmo_insert};
use bbspike_core::verify::{brute_force_lmo, snap_to_grid};
use bbspike_core::{DomainBox, KernelSpec, Observation, SeededRng, SolverConfig};

use crate::{CliError, ConfigError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSuite {
    #[serde(default = "defaults::run_id")]
    pub run_id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::instances")]
    pub instances: usize,
    #[serde(default = "defaults::domain")]
    pub domain: DomainBox,
    #[serde(default = "defaults::times")]
    pub times: Vec<f64>,
    #[serde(default = "defaults::kernel")]
    pub kernel: KernelSpec,
    /// Spatial grid points per axis for the enumeration.
    #[serde(default = "defaults::grid_points")]
    pub grid_points: usize,
    /// Time intervals of the enumerated curves; the LMO uses one more node.
    #[serde(default = "defaults::coarse_intervals")]
    pub coarse_intervals: usize,
    #[serde(default = "defaults::parameter_range")]
    pub alpha_range: [f64; 2],
    #[serde(default = "defaults::parameter_range")]
    pub beta_range: [f64; 2],
    /// Allowed excess of the LMO value over the enumerated minimum.
    #[serde(default = "defaults::tolerance")]
    pub tolerance: f64,
}

mod defaults {
    use super::*;

    pub fn run_id() -> String {
        "oracle-lmo".into()
    }
    pub fn instances() -> usize {
        20
    }
    pub fn domain() -> DomainBox {
        DomainBox::unit(1)
    }
    pub fn times() -> Vec<f64> {
        vec![1.0 / 3.0, 2.0 / 3.0]
    }
    pub fn kernel() -> KernelSpec {
        KernelSpec::fourier_grid(1, &[0.0, PI]).unwrap()
    }
    pub fn grid_points() -> usize {
        9
    }
    pub fn coarse_intervals() -> usize {
        3
    }
    pub fn parameter_range() -> [f64; 2] {
        [0.1, 2.0]
    }
    pub fn tolerance() -> f64 {
        1e-3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleInstance {
    pub instance: usize,
    pub alpha: f64,
    pub beta: f64,
    pub eta_brute_force: f64,
    pub eta_lmo: f64,
    pub eta_snapped: f64,
    pub raw_gap: f64,
    pub snapped_gap: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub run_id: String,
    pub seed: u64,
    pub tolerance: f64,
    pub instances: Vec<OracleInstance>,
    pub max_raw_gap: f64,
    pub max_snapped_gap: f64,
    pub pass: bool,
}

impl OracleSuite {
    fn check(&self) -> Result<Observation, ConfigError> {
        let invalid = |path: &str, message: String| ConfigError::Invalid { path: path.into(), message };
        for (name, [lo, hi]) in [("alpha_range", self.alpha_range), ("beta_range", self.beta_range)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(invalid(name, format!("need 0 < low <= high, got [{lo}, {hi}]")));
            }
        }
        if self.coarse_intervals == 0 {
            return Err(invalid("coarse_intervals", "must be positive".into()));
        }
        let obs = Observation::template(self.times.clone(), vec![self.kernel.clone()]).map_err(|e| invalid("times", e.to_string()))?;
        if obs.spatial_dim() != self.domain.dim() {
            return Err(invalid("kernel", format!("kernel acts on dimension {}, domain has {}", obs.spatial_dim(), self.domain.dim())));
        }
        Ok(obs)
    }

    pub fn run(&self) -> Result<OracleReport, CliError> {
        let obs = self.check()?;
        let mut rng = SeededRng::new(self.seed);
        let mut instances = Vec::with_capacity(self.instances);
        for instance in 0..self.instances {
            let r: Vec<f64> = (0..obs.total_dim()).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let alpha = rng.uniform_in(self.alpha_range[0], self.alpha_range[1]);
            let beta = rng.uniform_in(self.beta_range[0], self.beta_range[1]);
            let (_, eta_bf) = brute_force_lmo(&obs, &r, alpha, beta, &self.domain, self.grid_points, self.coarse_intervals)
                .map_err(|e| ConfigError::Invalid { path: "grid_points".into(), message: e.to_string() })?;
            let mut config = SolverConfig::new(alpha, beta);
            config.curve_nodes = self.coarse_intervals + 1;
            let lmo = lmo_insert(&obs, &r, &self.domain, &config, rng.fork_seed()).map_err(anyhow::Error::from)?;
            let snapped = snap_to_grid(&lmo.curve, &self.domain, self.grid_points).map_err(anyhow::Error::from)?;
            let eta_snapped = insertion_objective(&snapped, &obs, &r, alpha, beta).map_err(anyhow::Error::from)?;
            instances.push(OracleInstance {
                instance,
                alpha,
                beta,
                eta_brute_force: eta_bf,
                eta_lmo: lmo.eta,
                eta_snapped,
                raw_gap: lmo.eta - eta_bf,
                snapped_gap: eta_snapped - eta_bf,
                pass: lmo.eta <= eta_bf + self.tolerance,
            });
        }
        let max = |f: fn(&OracleInstance) -> f64| instances.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        Ok(OracleReport {
            run_id: self.run_id.clone(),
            seed: self.seed,
            tolerance: self.tolerance,
            max_raw_gap: max(|i| i.raw_gap),
            max_snapped_gap: max(|i| i.snapped_gap),
            pass: instances.iter().all(|i| i.pass),
            instances,
        })
    }
}

//! Scenario files: domain, ground truth, observation template, noise and
//! solver settings.

use std::f64::consts::PI;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use bbspike_core::{AtomicMeasurePair, Curve, DomainBox, KernelSpec, Observation, SeededRng, SolverConfig};

use crate::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Tag copied into every output file.
    #[serde(default = "default_run_id")]
    pub run_id: String,
    /// Master seed for truth generation, noise and the solver.
    #[serde(default)]
    pub seed: u64,
    pub domain: DomainBox,
    pub truth: TruthSpec,
    pub observation: ObservationSpec,
    #[serde(default)]
    pub noise_level: f64,
    pub solver: SolverConfig,
}

fn default_run_id() -> String {
    "run".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TruthSpec {
    /// Curves given by their points on a uniform time grid.
    Explicit { atoms: Vec<ExplicitAtom> },
    /// Random curves drawn from a motion family.
    Generator(GeneratorSpec),
    /// Measured data without a known truth.
    Data { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitAtom {
    pub weight: f64,
    /// Positions at `t = j / (len - 1)`; resampled to `solver.curve_nodes`.
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Motion {
    Static,
    Linear,
    #[serde(rename = "bezier-2")]
    Bezier2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub count: usize,
    pub motion: Motion,
    /// Defaults to a seed derived from the scenario seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_weight_range")]
    pub weight_range: [f64; 2],
    /// Curves stay this fraction of each side away from the box faces.
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_weight_range() -> [f64; 2] {
    [0.5, 1.5]
}

fn default_margin() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSpec {
    pub times: Vec<f64>,
    /// One kernel shared by all times, or one per time.
    pub kernels: Vec<KernelSpec>,
}

/// A scenario with every derived object built and checked.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub truth: Option<AtomicMeasurePair>,
    pub observation: Observation,
}

/// Deserializes JSON, reporting the dotted path of the offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let mut path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        // serde reports a missing field at its parent
        if let Some(field) = message.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
            path = if path == "." { field.to_string() } else { format!("{path}.{field}") };
        }
        ConfigError::Schema { path, message }
    })
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        parse_json(&text)
    }

    /// Seeds for truth generation and noise, derived from the master seed.
    fn derived_seeds(&self) -> (u64, u64) {
        let mut rng = SeededRng::new(self.seed);
        (rng.fork_seed(), rng.fork_seed())
    }

    pub fn prepare(mut self) -> Result<Prepared, ConfigError> {
        let invalid = |path: &str, e: bbspike_core::Error| ConfigError::Invalid { path: path.to_string(), message: e.to_string() };
        self.solver.seed = self.seed;
        self.solver.validate().map_err(|e| invalid("solver", e))?;
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return Err(ConfigError::Invalid { path: "noise_level".into(), message: format!("must be finite and nonnegative, got {}", self.noise_level) });
        }
        let template = Observation::template(self.observation.times.clone(), self.observation.kernels.clone()).map_err(|e| invalid("observation", e))?;
        if template.spatial_dim() != self.domain.dim() {
            return Err(ConfigError::Invalid {
                path: "observation.kernels".into(),
                message: format!("kernels act on dimension {}, domain has dimension {}", template.spatial_dim(), self.domain.dim()),
            });
        }
        let (truth_seed, noise_seed) = self.derived_seeds();
        let truth = match &self.truth {
            TruthSpec::Explicit { atoms } => Some(self.explicit_truth(atoms)?),
            TruthSpec::Generator(g) => Some(self.generated_truth(g, g.seed.unwrap_or(truth_seed))?),
            TruthSpec::Data { .. } => None,
        };
        let observation = match (&truth, &self.truth) {
            (Some(t), _) => bbspike_core::synthesize_data(t, &template, self.noise_level, noise_seed).map_err(|e| invalid("noise_level", e))?,
            (None, TruthSpec::Data { values }) => template.with_data(values.clone()).map_err(|e| invalid("truth.values", e))?,
            (None, _) => unreachable!("only data scenarios lack a truth"),
        };
        Ok(Prepared { scenario: self, truth, observation })
    }

    fn explicit_truth(&self, atoms: &[ExplicitAtom]) -> Result<AtomicMeasurePair, ConfigError> {
        let mut curves = Vec::with_capacity(atoms.len());
        let mut weights = Vec::with_capacity(atoms.len());
        for (k, a) in atoms.iter().enumerate() {
            let path = format!("truth.atoms[{k}]");
            let invalid = |e: bbspike_core::Error| ConfigError::Invalid { path: path.clone(), message: e.to_string() };
            let curve = Curve::from_points(&a.points).and_then(|c| c.resample(self.solver.curve_nodes)).map_err(invalid)?;
            if curve.dim() != self.domain.dim() {
                return Err(ConfigError::Invalid { path, message: format!("points have dimension {}, domain has {}", curve.dim(), self.domain.dim()) });
            }
            self.domain.check_curve(&curve).map_err(invalid)?;
            if !(a.weight.is_finite() && a.weight > 0.0) {
                return Err(ConfigError::Invalid { path: format!("{path}.weight"), message: format!("must be positive, got {}", a.weight) });
            }
            curves.push(curve);
            weights.push(a.weight);
        }
        AtomicMeasurePair::from_curves(self.solver.alpha, self.solver.beta, curves, weights)
            .map_err(|e| ConfigError::Invalid { path: "truth.atoms".into(), message: e.to_string() })
    }

    fn generated_truth(&self, g: &GeneratorSpec, seed: u64) -> Result<AtomicMeasurePair, ConfigError> {
        let [lo_w, hi_w] = g.weight_range;
        if !(lo_w > 0.0 && lo_w <= hi_w && hi_w.is_finite()) {
            return Err(ConfigError::Invalid { path: "truth.weight_range".into(), message: format!("need 0 < low <= high, got [{lo_w}, {hi_w}]") });
        }
        if !(0.0..0.5).contains(&g.margin) {
            return Err(ConfigError::Invalid { path: "truth.margin".into(), message: format!("must lie in [0, 0.5), got {}", g.margin) });
        }
        let mut rng = SeededRng::new(seed);
        let d = &self.domain;
        let point = |rng: &mut SeededRng| -> Vec<f64> {
            (0..d.dim())
                .map(|k| {
                    let (lo, hi) = (d.lower()[k], d.upper()[k]);
                    let pad = g.margin * (hi - lo);
                    rng.uniform_in(lo + pad, hi - pad)
                })
                .collect()
        };
        let n = self.solver.curve_nodes;
        let mut curves = Vec::with_capacity(g.count);
        let mut weights = Vec::with_capacity(g.count);
        for _ in 0..g.count {
            let p0 = point(&mut rng);
            // every family stays in the convex hull of its control points
            let curve = match g.motion {
                Motion::Static => Curve::constant(&p0, n),
                Motion::Linear => Curve::line(&p0, &point(&mut rng), n),
                Motion::Bezier2 => {
                    let (p1, p2) = (point(&mut rng), point(&mut rng));
                    Curve::from_fn(n, p0.len(), |t| {
                        let s = 1.0 - t;
                        (0..p0.len()).map(|k| s * s * p0[k] + 2.0 * s * t * p1[k] + t * t * p2[k]).collect()
                    })
                }
            }
            .expect("generator curves are finite");
            curves.push(curve);
            weights.push(rng.uniform_in(lo_w, hi_w));
        }
        AtomicMeasurePair::from_curves(self.solver.alpha, self.solver.beta, curves, weights)
            .map_err(|e| ConfigError::Invalid { path: "truth".into(), message: e.to_string() })
    }
}

/// Built-in scenario templates for `make-scenario`.
pub fn template(name: &str) -> Option<Scenario> {
    let mut solver = SolverConfig::new(0.1, 0.1);
    let scenario = match name {
        "static" => Scenario {
            run_id: "static".into(),
            seed: 1,
            domain: DomainBox::unit(1),
            truth: TruthSpec::Explicit { atoms: vec![ExplicitAtom { weight: 1.0, points: vec![vec![0.37], vec![0.37]] }] },
            observation: ObservationSpec { times: vec![0.25, 0.75], kernels: vec![KernelSpec::fourier_grid(1, &[0.0, PI, 2.0 * PI]).unwrap()] },
            noise_level: 0.0,
            solver,
        },
        "crossing" => Scenario {
            run_id: "crossing".into(),
            seed: 7,
            domain: DomainBox::unit(2),
            truth: TruthSpec::Explicit {
                atoms: vec![
                    ExplicitAtom { weight: 1.0, points: vec![vec![0.2, 0.2], vec![0.8, 0.8]] },
                    ExplicitAtom { weight: 1.0, points: vec![vec![0.2, 0.8], vec![0.8, 0.2]] },
                ],
            },
            observation: ObservationSpec {
                times: vec![0.1, 0.3, 0.5, 0.7, 0.9],
                kernels: vec![KernelSpec::gaussian_grid(&DomainBox::unit(2), 5, 0.15).unwrap()],
            },
            noise_level: 0.0,
            solver,
        },
        "generated" => {
            solver.max_outer_iterations = 20;
            Scenario {
                run_id: "generated".into(),
                seed: 14,
                domain: DomainBox::unit(2),
                truth: TruthSpec::Generator(GeneratorSpec {
                    count: 2,
                    motion: Motion::Linear,
                    seed: None,
                    weight_range: default_weight_range(),
                    margin: 0.15,
                }),
                observation: ObservationSpec {
                    times: vec![0.1, 0.3, 0.5, 0.7, 0.9],
                    kernels: vec![KernelSpec::gaussian_grid(&DomainBox::unit(2), 8, 0.1).unwrap()],
                },
                noise_level: 0.0,
                solver,
            }
        }
        _ => return None,
    };
    Some(scenario)
}

pub const TEMPLATE_NAMES: [&str; 3] = ["static", "crossing", "generated"];

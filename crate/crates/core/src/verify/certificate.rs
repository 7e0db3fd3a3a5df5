//! Necessary-condition checks for extremality of a candidate pair `(rho, m)`.
//!
//! A nonzero extremal point of the unit sublevel set of `J` is a single curve
//! atom: unit energy, canonical mass, a single moving support point and
//! momentum velocity equal to the curve derivative. The certificate checks
//! those four properties; it cannot certify the converse direction.

use serde::{Deserialize, Serialize};

use crate::curve::Curve;
use crate::measure::{canonical_mass, AtomicMeasurePair, CurveAtom};

/// One curve-supported component `rho_k = mass dt (x) delta_{gamma(t)}`,
/// `m_k = v(t) rho_k` with `v` constant on each grid segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PairComponent {
    pub curve: Curve,
    pub mass: f64,
    pub velocities: Vec<Vec<f64>>,
}

/// A finite pair `(rho, m) = sum_k (rho_k, m_k)` submitted for certification.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePair {
    pub alpha: f64,
    pub beta: f64,
    pub components: Vec<PairComponent>,
}

impl CandidatePair {
    pub fn from_atom(atom: &CurveAtom) -> Self {
        Self::from_measure(&AtomicMeasurePair::new(atom.alpha(), atom.beta(), atom.curve().node_count(), vec![atom.clone()], vec![1.0]).expect("single atom"))
    }

    /// Every weighted atom becomes one component with mass `c a`.
    pub fn from_measure(measure: &AtomicMeasurePair) -> Self {
        let components = measure
            .iter()
            .map(|(c, a)| {
                let curve = a.curve().clone();
                let velocities = (0..curve.grid().intervals()).map(|j| curve.segment_velocity(j)).collect();
                PairComponent { curve, mass: c * a.mass(), velocities }
            })
            .collect();
        Self { alpha: measure.alpha(), beta: measure.beta(), components }
    }

    /// Scales every component mass (and hence `rho` and `m`) by `factor`.
    pub fn with_scaled_mass(mut self, factor: f64) -> Self {
        self.components.iter_mut().for_each(|c| c.mass *= factor);
        self
    }

    /// Adds `delta` to every momentum velocity and rescales the mass so that `J` stays 1.
    pub fn with_perturbed_velocity(mut self, delta: &[f64]) -> Self {
        let (alpha, beta) = (self.alpha, self.beta);
        for c in &mut self.components {
            for v in &mut c.velocities {
                v.iter_mut().zip(delta).for_each(|(a, b)| *a += b);
            }
            let e = mean_square_speed(&c.velocities);
            c.mass = canonical_mass(e, alpha, beta);
        }
        self
    }

    /// Sets `m = 0` while keeping `rho`, with mass chosen so that `J` stays 1.
    pub fn with_dropped_momentum(mut self) -> Self {
        for c in &mut self.components {
            c.velocities.iter_mut().for_each(|v| v.iter_mut().for_each(|x| *x = 0.0));
            c.mass = canonical_mass(0.0, self.alpha, self.beta);
        }
        self
    }

    /// `J = beta sum_k mass_k / 2 int |v_k|^2 + alpha sum_k mass_k`.
    pub fn j_energy(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.mass * (0.5 * self.beta * mean_square_speed(&c.velocities) + self.alpha))
            .sum()
    }
}

fn mean_square_speed(velocities: &[Vec<f64>]) -> f64 {
    velocities.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>()).sum::<f64>() / velocities.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

/// `{checks: [{name, pass, value, tolerance}], verdict}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub checks: Vec<CertificateCheck>,
    /// `true` iff every check passed ("extremal candidate").
    pub verdict: bool,
}

pub const ENERGY_TOLERANCE: f64 = 1e-12;
pub const MASS_TOLERANCE: f64 = 1e-12;
pub const POSITION_TOLERANCE: f64 = 1e-12;
pub const VELOCITY_TOLERANCE: f64 = 1e-12;

/// Runs the four checks:
/// `unit_energy` (|J - 1|), `canonical_mass` (largest relative mass deviation),
/// `singleton_support` (largest number of distinct support points over grid
/// nodes and segment midpoints) and `momentum_velocity` (largest deviation of
/// `dm/drho` from the curve derivative).
pub fn extremality_certificate(candidate: &CandidatePair) -> CertificateReport {
    let j = candidate.j_energy();
    let mass_dev = candidate
        .components
        .iter()
        .map(|c| {
            let a = canonical_mass(c.curve.kinetic_energy(), candidate.alpha, candidate.beta);
            ((c.mass - a) / a).abs()
        })
        .fold(if candidate.components.is_empty() { f64::INFINITY } else { 0.0 }, f64::max);

    let support = candidate.components.first().map_or(0, |first| {
        let grid = first.curve.grid();
        let times = (0..grid.node_count()).map(|j| grid.node(j)).chain((0..grid.intervals()).map(|j| grid.node(j) + 0.5 * grid.dt()));
        times
            .map(|t| {
                let mut reps: Vec<Vec<f64>> = Vec::new();
                for c in &candidate.components {
                    let p = c.curve.position_at(t);
                    if !reps.iter().any(|r| r.iter().zip(&p).all(|(a, b)| (a - b).abs() <= POSITION_TOLERANCE)) {
                        reps.push(p);
                    }
                }
                reps.len()
            })
            .max()
            .unwrap_or(0)
    });

    let velocity_dev = candidate
        .components
        .iter()
        .flat_map(|c| {
            c.velocities
                .iter()
                .enumerate()
                .map(move |(j, v)| c.curve.segment_velocity(j).iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        })
        .fold(0.0, f64::max);

    let checks = vec![
        CertificateCheck { name: "unit_energy".into(), pass: (j - 1.0).abs() <= ENERGY_TOLERANCE, value: j, tolerance: ENERGY_TOLERANCE },
        CertificateCheck { name: "canonical_mass".into(), pass: mass_dev <= MASS_TOLERANCE, value: mass_dev, tolerance: MASS_TOLERANCE },
        CertificateCheck { name: "singleton_support".into(), pass: support == 1, value: support as f64, tolerance: 0.0 },
        CertificateCheck {
            name: "momentum_velocity".into(),
            pass: velocity_dev <= VELOCITY_TOLERANCE,
            value: velocity_dev,
            tolerance: VELOCITY_TOLERANCE,
        },
    ];
    let verdict = checks.iter().all(|c| c.pass);
    CertificateReport { checks, verdict }
}

/// Certificate of a single atom taken at unit weight.
pub fn certify_atom(atom: &CurveAtom) -> CertificateReport {
    extremality_certificate(&CandidatePair::from_atom(atom))
}

//! Curve atoms and finite conic combinations of them.
//!
//! A curve atom is the pair `rho = a dt (x) delta_{gamma(t)}`,
//! `m = gamma'(t) rho`, with canonical mass `a = (beta/2 E(gamma) + alpha)^-1`
//! and `E(gamma) = int_0^1 |gamma'|^2 dt`. Every such pair has `J = 1`, so a
//! weighted sum `sum_i c_i atom_i` of atoms on distinct curves has `J = sum c_i`.

use serde::{Deserialize, Serialize};

use crate::curve::{Curve, TimeGrid};
use crate::error::{Error, Result};

/// One extremal pair: a curve together with its canonical mass.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveAtom {
    curve: Curve,
    alpha: f64,
    beta: f64,
    mass: f64,
}

pub(crate) fn canonical_mass(energy: f64, alpha: f64, beta: f64) -> f64 {
    1.0 / (0.5 * beta * energy + alpha)
}

fn check_parameters(alpha: f64, beta: f64) -> Result<()> {
    if alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameters { alpha, beta })
    }
}

impl CurveAtom {
    /// Builds the atom of `curve` with its canonical mass.
    pub fn new(curve: Curve, alpha: f64, beta: f64) -> Result<Self> {
        check_parameters(alpha, beta)?;
        let energy = curve.kinetic_energy();
        if alpha == 0.0 && energy == 0.0 {
            return Err(Error::ConstantCurveWithoutMassPenalty);
        }
        let mass = canonical_mass(energy, alpha, beta);
        Ok(Self { curve, alpha, beta, mass })
    }

    /// Builds an atom with an externally supplied mass, e.g. one read back
    /// from disk. The mass is not checked against the canonical formula; use
    /// [`CurveAtom::canonical_mass`] or the extremality certificate for that.
    pub fn from_parts(curve: Curve, alpha: f64, beta: f64, mass: f64) -> Result<Self> {
        check_parameters(alpha, beta)?;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidMeasure(format!("atom mass must be finite and positive, got {mass}")));
        }
        Ok(Self { curve, alpha, beta, mass })
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Cached mass `a_gamma`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Mass recomputed from the curve, independent of the cached value.
    pub fn canonical_mass(&self) -> f64 {
        canonical_mass(self.curve.kinetic_energy(), self.alpha, self.beta)
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.curve.kinetic_energy()
    }

    /// Momentum velocity `dm/drho` at `t`, i.e. `gamma'(t)`.
    pub fn velocity_at(&self, t: f64) -> Vec<f64> {
        self.curve.velocity_at(t)
    }

    /// `B` of the unit-weight atom: `a/2 E`.
    pub fn bb_energy(&self) -> f64 {
        0.5 * self.mass * self.kinetic_energy()
    }

    /// `J` of the unit-weight atom; equals 1 for a canonical atom.
    pub fn j_energy(&self) -> f64 {
        self.beta * self.bb_energy() + self.alpha * self.mass
    }
}

/// A support point of a time slice `rho_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub mass: f64,
    pub position: Vec<f64>,
}

/// Finite atomic measure on the spatial domain, e.g. a time slice `rho_t`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub entries: Vec<CloudPoint>,
}

impl PointCloud {
    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct support points, comparing positions within `tol` (sup norm).
    pub fn support_size(&self, tol: f64) -> usize {
        let mut reps: Vec<&[f64]> = Vec::new();
        for e in &self.entries {
            if !reps.iter().any(|r| r.iter().zip(&e.position).all(|(a, b)| (a - b).abs() <= tol)) {
                reps.push(&e.position);
            }
        }
        reps.len()
    }
}

/// `sum_i c_i (rho_i, m_i)` over curve atoms with shared `(alpha, beta)` and time grid.
///
/// The empty combination represents `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasurePair {
    alpha: f64,
    beta: f64,
    time_nodes: usize,
    atoms: Vec<CurveAtom>,
    weights: Vec<f64>,
}

impl AtomicMeasurePair {
    pub fn empty(alpha: f64, beta: f64, time_nodes: usize) -> Result<Self> {
        check_parameters(alpha, beta)?;
        TimeGrid::new(time_nodes)?;
        Ok(Self { alpha, beta, time_nodes, atoms: Vec::new(), weights: Vec::new() })
    }

    pub fn new(alpha: f64, beta: f64, time_nodes: usize, atoms: Vec<CurveAtom>, weights: Vec<f64>) -> Result<Self> {
        let mut m = Self::empty(alpha, beta, time_nodes)?;
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!("{} atoms but {} weights", atoms.len(), weights.len())));
        }
        for (atom, w) in atoms.into_iter().zip(weights) {
            m.push(atom, w)?;
        }
        Ok(m)
    }

    /// Builds a measure from curves, computing canonical masses.
    pub fn from_curves(alpha: f64, beta: f64, curves: Vec<Curve>, weights: Vec<f64>) -> Result<Self> {
        let time_nodes = curves.first().map_or(2, Curve::node_count);
        let atoms = curves.into_iter().map(|c| CurveAtom::new(c, alpha, beta)).collect::<Result<Vec<_>>>()?;
        Self::new(alpha, beta, time_nodes, atoms, weights)
    }

    pub fn push(&mut self, atom: CurveAtom, weight: f64) -> Result<()> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidMeasure(format!("weights must be positive, got {weight}")));
        }
        if atom.alpha != self.alpha || atom.beta != self.beta {
            return Err(Error::InvalidMeasure("atom parameters differ from the measure's (alpha, beta)".into()));
        }
        if atom.curve.node_count() != self.time_nodes {
            return Err(Error::InvalidMeasure(format!(
                "atom has {} time nodes, measure uses {}",
                atom.curve.node_count(),
                self.time_nodes
            )));
        }
        if let Some(first) = self.atoms.first() {
            if first.curve.dim() != atom.curve.dim() {
                return Err(Error::DimensionMismatch { expected: first.curve.dim(), found: atom.curve.dim() });
            }
        }
        self.atoms.push(atom);
        self.weights.push(weight);
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn time_nodes(&self) -> usize {
        self.time_nodes
    }

    pub fn atoms(&self) -> &[CurveAtom] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.curve.dim())
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &CurveAtom)> {
        self.weights.iter().copied().zip(&self.atoms)
    }

    /// Multiplies every weight by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let mut out = self.clone();
        for w in &mut out.weights {
            *w *= s;
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::InvalidMeasure(format!("scaling by {s} yields weight {w}")));
            }
        }
        Ok(out)
    }

    /// Concatenation of the atom lists of two measures.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (w, a) in other.iter() {
            out.push(a.clone(), w)?;
        }
        Ok(out)
    }

    /// Fails if two atoms have identical node arrays.
    pub fn check_distinct(&self) -> Result<()> {
        for i in 0..self.atoms.len() {
            for j in i + 1..self.atoms.len() {
                if self.atoms[i].curve.nodes() == self.atoms[j].curve.nodes() {
                    return Err(Error::DuplicateAtoms(i, j));
                }
            }
        }
        Ok(())
    }

    /// `||rho|| = sum_i c_i a_i`.
    pub fn total_variation(&self) -> f64 {
        self.iter().map(|(c, a)| c * a.mass).sum()
    }

    /// `B(rho, m) = sum_i c_i a_i E_i / 2`, exact when the atoms are mutually singular.
    pub fn bb_energy(&self) -> Result<f64> {
        self.check_distinct()?;
        Ok(self.iter().map(|(c, a)| c * a.bb_energy()).sum())
    }

    /// `J = beta B + alpha ||rho||`.
    pub fn j_energy(&self) -> Result<f64> {
        Ok(self.beta * self.bb_energy()? + self.alpha * self.total_variation())
    }

    /// The time slice `rho_t` as a point cloud.
    pub fn eval_rho_at(&self, t: f64) -> PointCloud {
        PointCloud {
            entries: self.iter().map(|(c, a)| CloudPoint { mass: c * a.mass, position: a.curve.position_at(t) }).collect(),
        }
    }

    pub fn to_json(&self) -> MeasureJson {
        MeasureJson {
            alpha: self.alpha,
            beta: self.beta,
            time_nodes: self.time_nodes,
            atoms: self
                .iter()
                .map(|(c, a)| AtomJson { weight: c, mass: a.mass, nodes: a.curve.points() })
                .collect(),
        }
    }

    pub fn from_json(json: &MeasureJson) -> Result<Self> {
        let mut m = Self::empty(json.alpha, json.beta, json.time_nodes)?;
        for (k, a) in json.atoms.iter().enumerate() {
            let curve = Curve::from_points(&a.nodes).map_err(|e| Error::InvalidMeasure(format!("atom {k}: {e}")))?;
            let atom = CurveAtom::from_parts(curve, json.alpha, json.beta, a.mass)?;
            m.push(atom, a.weight).map_err(|e| Error::InvalidMeasure(format!("atom {k}: {e}")))?;
        }
        Ok(m)
    }
}

/// JSON layout: `{alpha, beta, time_nodes, atoms: [{weight, mass, nodes}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureJson {
    pub alpha: f64,
    pub beta: f64,
    pub time_nodes: usize,
    pub atoms: Vec<AtomJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomJson {
    pub weight: f64,
    pub mass: f64,
    pub nodes: Vec<Vec<f64>>,
}

impl Serialize for AtomicMeasurePair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomicMeasurePair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = MeasureJson::deserialize(d)?;
        Self::from_json(&json).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn line(a: f64, b: f64, n: usize) -> Curve {
        Curve::line(&[a], &[b], n).unwrap()
    }

    #[test]
    fn canonical_mass_examples() {
        let unit = line(0.0, 1.0, 5);
        assert_relative_eq!(unit.kinetic_energy(), 1.0, epsilon = 1e-14);
        let atom = CurveAtom::new(unit, 1.0, 2.0).unwrap();
        assert_relative_eq!(atom.mass(), 0.5, epsilon = 1e-14);

        let flat = Curve::constant(&[0.4], 4).unwrap();
        let atom = CurveAtom::new(flat.clone(), 0.1, 1.0).unwrap();
        assert_relative_eq!(atom.mass(), 10.0, epsilon = 1e-12);
        assert_eq!(CurveAtom::new(flat, 0.0, 1.0), Err(Error::ConstantCurveWithoutMassPenalty));
    }

    #[test]
    fn alpha_zero_allowed_for_moving_curves() {
        let atom = CurveAtom::new(line(0.0, 1.0, 3), 0.0, 2.0).unwrap();
        assert_relative_eq!(atom.mass(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(atom.j_energy(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        let c = line(0.0, 1.0, 3);
        assert!(CurveAtom::new(c.clone(), -1.0, 1.0).is_err());
        assert!(CurveAtom::new(c.clone(), 1.0, 0.0).is_err());
        assert!(CurveAtom::new(c, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn eval_rho_examples() {
        let empty = AtomicMeasurePair::empty(1.0, 2.0, 5).unwrap();
        assert!(empty.eval_rho_at(0.3).is_empty());

        let m = AtomicMeasurePair::from_curves(1.0, 1.2, vec![line(0.2, 0.8, 5)], vec![1.0]).unwrap();
        let a = m.atoms()[0].mass();
        let cloud = m.eval_rho_at(0.5);
        assert_eq!(cloud.len(), 1);
        assert_relative_eq!(cloud.entries[0].position[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(cloud.entries[0].mass, a);

        let curves = vec![Curve::constant(&[0.2], 3).unwrap(), Curve::constant(&[0.8], 3).unwrap()];
        let m = AtomicMeasurePair::from_curves(1.0, 1.0, curves, vec![0.3, 0.5]).unwrap();
        let cloud = m.eval_rho_at(1.0);
        assert_eq!(cloud.entries[0], CloudPoint { mass: 0.3, position: vec![0.2] });
        assert_eq!(cloud.entries[1], CloudPoint { mass: 0.5, position: vec![0.8] });
    }

    #[test]
    fn total_variation_examples() {
        let empty = AtomicMeasurePair::empty(1.0, 2.0, 5).unwrap();
        assert_eq!(empty.total_variation(), 0.0);

        // a = 0.5 for the unit line with alpha = 1, beta = 2
        let m = AtomicMeasurePair::from_curves(1.0, 2.0, vec![line(0.0, 1.0, 5)], vec![1.0]).unwrap();
        assert_relative_eq!(m.total_variation(), 0.5, epsilon = 1e-14);

        let c1 = CurveAtom::from_parts(line(0.0, 1.0, 3), 1.0, 2.0, 0.5).unwrap();
        let c2 = CurveAtom::from_parts(line(0.0, 0.5, 3), 1.0, 2.0, 0.1).unwrap();
        let m = AtomicMeasurePair::new(1.0, 2.0, 3, vec![c1, c2], vec![2.0, 3.0]).unwrap();
        assert_relative_eq!(m.total_variation(), 1.3, epsilon = 1e-14);
    }

    #[test]
    fn bb_energy_examples() {
        let m = AtomicMeasurePair::from_curves(1.0, 2.0, vec![line(0.0, 1.0, 5)], vec![1.0]).unwrap();
        assert_relative_eq!(m.bb_energy().unwrap(), 0.25, epsilon = 1e-14);

        let m = AtomicMeasurePair::from_curves(1.0, 2.0, vec![Curve::constant(&[0.5], 5).unwrap()], vec![1.0]).unwrap();
        assert_eq!(m.bb_energy().unwrap(), 0.0);

        // E = 1 and E = 4 with a = 0.5 each
        let a1 = CurveAtom::from_parts(line(0.0, 1.0, 3), 1.0, 2.0, 0.5).unwrap();
        let a2 = CurveAtom::from_parts(line(0.0, 2.0, 3), 1.0, 2.0, 0.5).unwrap();
        let m = AtomicMeasurePair::new(1.0, 2.0, 3, vec![a1, a2], vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(m.bb_energy().unwrap(), 1.25, epsilon = 1e-14);
    }

    #[test]
    fn duplicated_atoms_are_rejected_by_energies() {
        let c = line(0.0, 1.0, 4);
        let m = AtomicMeasurePair::from_curves(1.0, 1.0, vec![c.clone(), c], vec![0.2, 0.3]).unwrap();
        assert_eq!(m.bb_energy(), Err(Error::DuplicateAtoms(0, 1)));
        assert!(m.j_energy().is_err());
    }

    #[test]
    fn j_energy_examples() {
        let m = AtomicMeasurePair::from_curves(0.7, 3.0, vec![line(0.1, 0.9, 9)], vec![1.0]).unwrap();
        assert_relative_eq!(m.j_energy().unwrap(), 1.0, epsilon = 1e-15);

        let curves = vec![line(0.1, 0.9, 9), Curve::constant(&[0.3], 9).unwrap()];
        let m = AtomicMeasurePair::from_curves(0.7, 3.0, curves, vec![0.3, 0.5]).unwrap();
        assert_relative_eq!(m.j_energy().unwrap(), 0.8, epsilon = 1e-15);

        let empty = AtomicMeasurePair::empty(0.7, 3.0, 9).unwrap();
        assert_eq!(empty.j_energy().unwrap(), 0.0);
    }

    #[test]
    fn mismatched_atoms_are_rejected() {
        let a = CurveAtom::new(line(0.0, 1.0, 4), 1.0, 1.0).unwrap();
        let b = CurveAtom::new(line(0.0, 1.0, 5), 1.0, 1.0).unwrap();
        let c = CurveAtom::new(line(0.0, 1.0, 4), 2.0, 1.0).unwrap();
        assert!(AtomicMeasurePair::new(1.0, 1.0, 4, vec![a.clone(), b], vec![1.0, 1.0]).is_err());
        assert!(AtomicMeasurePair::new(1.0, 1.0, 4, vec![a.clone(), c], vec![1.0, 1.0]).is_err());
        assert!(AtomicMeasurePair::new(1.0, 1.0, 4, vec![a.clone()], vec![0.0]).is_err());
        assert!(AtomicMeasurePair::new(1.0, 1.0, 4, vec![a], vec![]).is_err());
    }

    #[test]
    fn json_layout() {
        let m = AtomicMeasurePair::from_curves(0.5, 2.0, vec![line(0.0, 1.0, 3)], vec![1.5]).unwrap();
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["time_nodes"], 3);
        assert_eq!(v["atoms"][0]["weight"], 1.5);
        assert_eq!(v["atoms"][0]["nodes"], serde_json::json!([[0.0], [0.5], [1.0]]));
        let back: AtomicMeasurePair = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }

    fn arb_curve(n: usize) -> impl Strategy<Value = Curve> {
        proptest::collection::vec(0.0f64..1.0, n * 2).prop_map(|nodes| Curve::new(2, nodes).unwrap())
    }

    proptest! {
        #[test]
        fn unit_atoms_have_unit_energy(curve in arb_curve(9), alpha in 0.01f64..10.0, beta in 0.01f64..10.0) {
            let atom = CurveAtom::new(curve, alpha, beta).unwrap();
            prop_assert!((atom.j_energy() - 1.0).abs() <= 1e-12);
            prop_assert!((atom.mass() * (0.5 * beta * atom.kinetic_energy() + alpha) - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn mass_is_conserved_in_time(c1 in arb_curve(6), c2 in arb_curve(6), w1 in 0.01f64..5.0, w2 in 0.01f64..5.0, t in 0.0f64..=1.0) {
            let m = AtomicMeasurePair::from_curves(0.3, 1.7, vec![c1, c2], vec![w1, w2]).unwrap();
            let tv = m.total_variation();
            prop_assert!((m.eval_rho_at(t).total_mass() - tv).abs() <= 1e-12 * tv.max(1.0));
        }

        #[test]
        fn energies_are_one_homogeneous_and_additive(c1 in arb_curve(6), c2 in arb_curve(6), s in 0.01f64..100.0) {
            let a = AtomicMeasurePair::from_curves(0.3, 1.7, vec![c1], vec![0.7]).unwrap();
            let b = AtomicMeasurePair::from_curves(0.3, 1.7, vec![c2], vec![1.9]).unwrap();
            let ja = a.j_energy().unwrap();
            let sa = a.scaled(s).unwrap();
            prop_assert!((sa.j_energy().unwrap() - s * ja).abs() <= 1e-12 * s * ja);
            prop_assert!((sa.bb_energy().unwrap() - s * a.bb_energy().unwrap()).abs() <= 1e-12 * s * ja);
            let ab = a.concat(&b).unwrap();
            prop_assert!((ab.j_energy().unwrap() - ja - b.j_energy().unwrap()).abs() <= 1e-12);
        }
    }
}

//! Spatial domain, time grid and piecewise-linear curves on `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned closed box `[lower, upper]` in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxRepr {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<BoxRepr> for DomainBox {
    type Error = Error;
    fn try_from(r: BoxRepr) -> Result<Self> {
        DomainBox::new(r.lower, r.upper)
    }
}

impl From<DomainBox> for BoxRepr {
    fn from(b: DomainBox) -> Self {
        BoxRepr { lower: b.lower, upper: b.upper }
    }
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidDomain("dimension must be positive".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::InvalidDomain(format!(
                "lower has {} coordinates, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        for (k, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidDomain(format!("axis {k}: need lower < upper, got [{lo}, {hi}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The unit cube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self { lower: vec![0.0; dim], upper: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn diameter(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| (hi - lo).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Euclidean projection onto the box, in place.
    pub fn project(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Projects every node of a flat node array.
    pub fn project_nodes(&self, nodes: &mut [f64]) {
        for chunk in nodes.chunks_mut(self.dim()) {
            self.project(chunk);
        }
    }

    pub fn check_curve(&self, curve: &Curve) -> Result<()> {
        if curve.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: curve.dim() });
        }
        match (0..curve.node_count()).find(|&j| !self.contains(curve.node(j))) {
            Some(node) => Err(Error::NodeOutsideDomain { node }),
            None => Ok(()),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

/// Uniform grid `tau_j = j / M`, `j = 0..=M`, on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeGrid {
    intervals: usize,
}

impl TimeGrid {
    /// Grid with `node_count >= 2` nodes.
    pub fn new(node_count: usize) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::InvalidCurve(format!("time grid needs at least 2 nodes, got {node_count}")));
        }
        Ok(Self { intervals: node_count - 1 })
    }

    pub fn node_count(&self) -> usize {
        self.intervals + 1
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.intervals as f64
    }

    /// Interval index `j` and local fraction `s` with `t = (j + s) / M`.
    ///
    /// Times at a grid node belong to the interval on their right, except
    /// `t = 1` which is the right end of the last interval.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let m = self.intervals;
        let scaled = t.clamp(0.0, 1.0) * m as f64;
        let nearest = scaled.round();
        let scaled = if (scaled - nearest).abs() < 1e-12 { nearest } else { scaled };
        let j = (scaled.floor() as usize).min(m - 1);
        (j, scaled - j as f64)
    }

    /// Index of the grid node equal to `t`, if any.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let scaled = t * self.intervals as f64;
        let nearest = scaled.round();
        ((scaled - nearest).abs() <= 1e-9 && (0.0..=self.intervals as f64).contains(&nearest)).then_some(nearest as usize)
    }

    /// Smallest grid with at most `max_nodes` nodes containing all `times` as nodes.
    pub fn smallest_containing(times: &[f64], max_nodes: usize) -> Option<Self> {
        (2..=max_nodes)
            .map(|n| Self { intervals: n - 1 })
            .find(|grid| times.iter().all(|&t| grid.node_index(t).is_some()))
    }
}

/// Piecewise-linear curve `gamma: [0, 1] -> R^d` through nodes on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    grid: TimeGrid,
    dim: usize,
    nodes: Vec<f64>,
}

impl Curve {
    /// Builds a curve from a flat, node-major coordinate array.
    pub fn new(dim: usize, nodes: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCurve("dimension must be positive".into()));
        }
        if nodes.len() % dim != 0 {
            return Err(Error::InvalidCurve(format!("{} coordinates do not split into {dim}-vectors", nodes.len())));
        }
        let grid = TimeGrid::new(nodes.len() / dim)?;
        if let Some(k) = nodes.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve(format!("non-finite coordinate at node {}", k / dim)));
        }
        Ok(Self { grid, dim, nodes })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidCurve("nodes have inconsistent dimensions".into()));
        }
        Self::new(dim, points.concat())
    }

    pub fn constant(point: &[f64], node_count: usize) -> Result<Self> {
        Self::new(point.len(), point.repeat(node_count))
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(node_count: usize, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let grid = TimeGrid::new(node_count)?;
        let mut nodes = Vec::with_capacity(node_count * dim);
        for j in 0..node_count {
            let p = f(grid.node(j));
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
            }
            nodes.extend(p);
        }
        Self::new(dim, nodes)
    }

    /// Straight line from `start` to `end` traversed at constant speed.
    pub fn line(start: &[f64], end: &[f64], node_count: usize) -> Result<Self> {
        Self::from_fn(node_count, start.len(), |t| start.iter().zip(end).map(|(a, b)| a + t * (b - a)).collect())
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.nodes[j * self.dim..(j + 1) * self.dim]
    }

    /// Flat node-major coordinates.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<f64> {
        self.nodes
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.nodes.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// `int_0^1 |gamma'(t)|^2 dt`, exact for piecewise-linear curves.
    pub fn kinetic_energy(&self) -> f64 {
        kinetic_energy(&self.nodes, self.dim)
    }

    /// Linear interpolation of the nodes at time `t`.
    pub fn position_at(&self, t: f64) -> Vec<f64> {
        let (j, s) = self.grid.locate(t);
        let (a, b) = (self.node(j), self.node(j + 1));
        a.iter().zip(b).map(|(x0, x1)| x0 + s * (x1 - x0)).collect()
    }

    /// Constant velocity on segment `j`.
    pub fn segment_velocity(&self, j: usize) -> Vec<f64> {
        let m = self.grid.intervals() as f64;
        self.node(j + 1).iter().zip(self.node(j)).map(|(x1, x0)| (x1 - x0) * m).collect()
    }

    /// Velocity at `t`; at a grid node the right-hand segment wins.
    pub fn velocity_at(&self, t: f64) -> Vec<f64> {
        self.segment_velocity(self.grid.locate(t).0)
    }

    pub fn is_constant(&self) -> bool {
        let first = self.node(0);
        self.nodes.chunks(self.dim).all(|p| p == first)
    }

    /// Largest per-segment speed, a Lipschitz constant for `position_at`.
    pub fn max_speed(&self) -> f64 {
        (0..self.grid.intervals()).map(|j| norm(&self.segment_velocity(j))).fold(0.0, f64::max)
    }

    /// Sup-norm distance between two node arrays on the same grid.
    pub fn sup_distance(&self, other: &Curve) -> f64 {
        if self.dim != other.dim || self.node_count() != other.node_count() {
            return f64::INFINITY;
        }
        self.nodes.iter().zip(&other.nodes).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Resamples the curve on a grid with `node_count` nodes.
    pub fn resample(&self, node_count: usize) -> Result<Curve> {
        Curve::from_fn(node_count, self.dim, |t| self.position_at(t))
    }
}

pub(crate) fn kinetic_energy(nodes: &[f64], dim: usize) -> f64 {
    let intervals = nodes.len() / dim - 1;
    let m = intervals as f64;
    nodes.windows(2 * dim).step_by(dim).map(|w| (0..dim).map(|k| (w[dim + k] - w[k]).powi(2)).sum::<f64>()).sum::<f64>() * m
}

/// Gradient of [`kinetic_energy`] with respect to the flat node array.
pub(crate) fn kinetic_energy_grad(nodes: &[f64], dim: usize, out: &mut [f64]) {
    let intervals = nodes.len() / dim - 1;
    let m = intervals as f64;
    out.iter_mut().for_each(|g| *g = 0.0);
    for j in 0..intervals {
        for k in 0..dim {
            let diff = 2.0 * m * (nodes[(j + 1) * dim + k] - nodes[j * dim + k]);
            out[(j + 1) * dim + k] += diff;
            out[j * dim + k] -= diff;
        }
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

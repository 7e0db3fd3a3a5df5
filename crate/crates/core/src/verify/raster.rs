//! Space-time histograms of `(rho, m)` and the cell-wise Benamou-Brenier sum.

use crate::curve::DomainBox;
use crate::error::{Error, Result};
use crate::measure::AtomicMeasurePair;

/// Cell masses of `rho` and cell vector masses of `m` on an
/// `n_t x n_x^d` grid over `[0, 1] x domain`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPair {
    pub n_t: usize,
    pub n_x: usize,
    pub dim: usize,
    /// Indexed `[time_cell * n_x^d + space_cell]`.
    pub rho: Vec<f64>,
    /// Indexed `[(time_cell * n_x^d + space_cell) * dim + k]`.
    pub momentum: Vec<f64>,
}

impl GridPair {
    pub fn cells(&self) -> usize {
        self.rho.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.rho.iter().sum()
    }
}

fn space_cell(domain: &DomainBox, n_x: usize, x: &[f64]) -> usize {
    let mut idx = 0;
    for k in 0..domain.dim() {
        let (lo, hi) = (domain.lower()[k], domain.upper()[k]);
        let q = (((x[k] - lo) / (hi - lo)) * n_x as f64).floor().clamp(0.0, (n_x - 1) as f64) as usize;
        idx = idx * n_x + q;
    }
    idx
}

/// Midpoint deposition: in time cell `k`, each atom puts mass `c a / n_t` and
/// momentum `c a gamma'(t_k) / n_t` into the spatial cell containing
/// `gamma(t_k)`, `t_k` the cell's midpoint time.
pub fn rasterize(measure: &AtomicMeasurePair, domain: &DomainBox, n_t: usize, n_x: usize) -> Result<GridPair> {
    if n_t < 2 || n_x < 2 {
        return Err(Error::InvalidMeasure(format!("grid resolutions must be at least 2, got {n_t} x {n_x}")));
    }
    let dim = domain.dim();
    if let Some(d) = measure.dim() {
        if d != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: d });
        }
    }
    let per_slice = n_x.pow(dim as u32);
    let mut rho = vec![0.0; n_t * per_slice];
    let mut momentum = vec![0.0; n_t * per_slice * dim];
    let dt = 1.0 / n_t as f64;
    for (c, atom) in measure.iter() {
        let mass = c * atom.mass() * dt;
        for k in 0..n_t {
            let t = (k as f64 + 0.5) * dt;
            let cell = k * per_slice + space_cell(domain, n_x, &atom.curve().position_at(t));
            rho[cell] += mass;
            for (m, v) in momentum[cell * dim..(cell + 1) * dim].iter_mut().zip(atom.velocity_at(t)) {
                *m += mass * v;
            }
        }
    }
    Ok(GridPair { n_t, n_x, dim, rho, momentum })
}

/// `Psi(t, x) = |x|^2 / (2t)` for `t > 0`, `0` at the origin, `+inf` otherwise.
pub fn psi(t: f64, x: &[f64]) -> f64 {
    let sq: f64 = x.iter().map(|v| v * v).sum();
    if t > 0.0 {
        sq / (2.0 * t)
    } else if t == 0.0 && sq == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `sum_cells Psi(rho_cell, m_cell)`; `+inf` flags momentum on an empty cell.
pub fn grid_bb_energy(grid: &GridPair) -> f64 {
    grid.rho
        .iter()
        .zip(grid.momentum.chunks(grid.dim))
        .map(|(r, m)| psi(*r, m))
        .sum()
}

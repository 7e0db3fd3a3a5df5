//! Exhaustive insertion oracle over polylines with nodes on a coarse grid.

use rayon::prelude::*;

use crate::curve::{Curve, DomainBox};
use crate::error::{Error, Result};
use crate::forward::Observation;
use crate::solver::{insertion_value, spatial_grid};

/// Largest number of polylines [`brute_force_lmo`] will enumerate.
pub const ENUMERATION_BUDGET: f64 = 1e7;

/// Global minimizer of `eta` over polylines with `coarse_intervals + 1` time
/// nodes, every node on the `grid_points^d` grid over `domain` (endpoints
/// included). Ties keep the first curve in lexicographic node order.
pub fn brute_force_lmo(
    obs: &Observation,
    r: &[f64],
    alpha: f64,
    beta: f64,
    domain: &DomainBox,
    grid_points: usize,
    coarse_intervals: usize,
) -> Result<(Curve, f64)> {
    if grid_points < 2 || coarse_intervals < 1 {
        return Err(Error::InvalidConfig("need at least 2 grid points and 1 time interval".into()));
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidParameters { alpha, beta });
    }
    if domain.dim() != obs.spatial_dim() {
        return Err(Error::DimensionMismatch { expected: obs.spatial_dim(), found: domain.dim() });
    }
    if r.len() != obs.total_dim() {
        return Err(Error::DimensionMismatch { expected: obs.total_dim(), found: r.len() });
    }
    let dim = domain.dim();
    let nodes = coarse_intervals + 1;
    let candidates = (grid_points as f64).powi((dim * nodes) as i32);
    if candidates > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { candidates, budget: ENUMERATION_BUDGET });
    }
    let points = spatial_grid(domain, grid_points);
    let per_node = points.len();
    let total = candidates as usize;

    let decode = |mut index: usize, out: &mut Vec<f64>| {
        out.clear();
        let mut picks = vec![0; nodes];
        for j in (0..nodes).rev() {
            picks[j] = index % per_node;
            index /= per_node;
        }
        for p in picks {
            out.extend_from_slice(&points[p]);
        }
    };

    let (best_index, best_eta) = (0..total)
        .into_par_iter()
        .fold(
            || (usize::MAX, f64::INFINITY, Vec::with_capacity(nodes * dim)),
            |(bi, be, mut buf), index| {
                decode(index, &mut buf);
                let eta = insertion_value(&buf, dim, obs, r, alpha, beta);
                if eta < be || (eta == be && index < bi) {
                    (index, eta, buf)
                } else {
                    (bi, be, buf)
                }
            },
        )
        .map(|(i, e, _)| (i, e))
        .reduce(|| (usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });

    let mut buf = Vec::new();
    decode(best_index, &mut buf);
    Ok((Curve::new(dim, buf)?, best_eta))
}

/// Moves every node of `curve` to the nearest point of the coarse grid.
pub fn snap_to_grid(curve: &Curve, domain: &DomainBox, grid_points: usize) -> Result<Curve> {
    let nodes: Vec<f64> = curve
        .nodes()
        .chunks(curve.dim())
        .flat_map(|p| {
            p.iter().enumerate().map(|(k, &v)| {
                let (lo, hi) = (domain.lower()[k], domain.upper()[k]);
                let h = (hi - lo) / (grid_points - 1) as f64;
                lo + ((v - lo) / h).round().clamp(0.0, (grid_points - 1) as f64) * h
            })
        })
        .collect();
    Curve::new(curve.dim(), nodes)
}

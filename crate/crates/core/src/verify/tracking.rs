//! Decomposition of sampled time slices into curve atoms.
//!
//! Given point clouds `rho_{t_i}` of a measure carried by finitely many
//! well-separated curves, nearest-neighbour linking recovers the curves and
//! the weights, so that `rho_t` is the push-forward of the weighted curves by
//! evaluation at `t`.

use crate::curve::{dist, Curve, TimeGrid};
use crate::error::{Error, Result};
use crate::measure::{AtomicMeasurePair, CurveAtom, PointCloud};

/// Relative tolerance for mass agreement along a track.
const MASS_TOLERANCE: f64 = 1e-12;

/// Links clouds sampled at strictly increasing `times` into tracks and
/// returns one atom per track on `grid`.
///
/// Every sample time must be a node of `grid`. Between sample times the
/// tracks are linear, outside `[t_1, t_N]` they are constant. Weights are
/// chosen so that `c a_gamma` equals the tracked mass.
///
/// Fails when the clouds differ in size, when masses are not conserved along
/// a track, or when the separation condition
/// `min intra-cloud distance > 2 max linking distance` does not hold.
pub fn track_curves(times: &[f64], clouds: &[PointCloud], alpha: f64, beta: f64, grid: TimeGrid) -> Result<AtomicMeasurePair> {
    if times.is_empty() || times.len() != clouds.len() {
        return Err(Error::Tracking(format!("{} times for {} clouds", times.len(), clouds.len())));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Tracking("sample times must be strictly increasing".into()));
    }
    let node_of: Vec<usize> = times
        .iter()
        .map(|&t| grid.node_index(t).ok_or_else(|| Error::Tracking(format!("sample time {t} is not a node of the time grid"))))
        .collect::<Result<_>>()?;
    let count = clouds[0].len();
    if clouds.iter().any(|c| c.len() != count) {
        return Err(Error::Tracking("clouds have different numbers of points".into()));
    }
    if count == 0 {
        return AtomicMeasurePair::empty(alpha, beta, grid.node_count());
    }
    let dim = clouds[0].entries[0].position.len();

    let min_separation = clouds
        .iter()
        .flat_map(|c| {
            (0..c.len()).flat_map(move |a| (a + 1..c.len()).map(move |b| dist(&c.entries[a].position, &c.entries[b].position)))
        })
        .fold(f64::INFINITY, f64::min);

    // tracks[k][i] = index into clouds[i] of track k
    let mut tracks: Vec<Vec<usize>> = (0..count).map(|k| vec![k]).collect();
    let mut max_link = 0.0f64;
    for i in 1..clouds.len() {
        let (prev, next) = (&clouds[i - 1], &clouds[i]);
        let mut pairs: Vec<(f64, usize, usize)> = (0..count)
            .flat_map(|a| (0..count).map(move |b| (a, b)))
            .map(|(a, b)| (dist(&prev.entries[a].position, &next.entries[b].position), a, b))
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut link = vec![usize::MAX; count];
        let mut taken = vec![false; count];
        for (d, a, b) in pairs {
            if link[a] == usize::MAX && !taken[b] {
                link[a] = b;
                taken[b] = true;
                max_link = max_link.max(d);
            }
        }
        for track in &mut tracks {
            let last = *track.last().unwrap();
            track.push(link[last]);
        }
    }
    if !(min_separation > 2.0 * max_link) {
        return Err(Error::Tracking(format!(
            "ambiguous linking: minimal separation {min_separation:.3e} is not larger than twice the maximal displacement {max_link:.3e}"
        )));
    }

    let mut atoms = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for track in &tracks {
        let points: Vec<&[f64]> = track.iter().zip(clouds).map(|(&q, c)| c.entries[q].position.as_slice()).collect();
        let masses: Vec<f64> = track.iter().zip(clouds).map(|(&q, c)| c.entries[q].mass).collect();
        if masses.iter().any(|m| (m - masses[0]).abs() > MASS_TOLERANCE * masses[0].abs().max(1.0)) {
            return Err(Error::Tracking("mass is not conserved along a track".into()));
        }
        let curve = Curve::new(dim, interpolate_track(&node_of, &points, grid, dim))?;
        let atom = CurveAtom::new(curve, alpha, beta)?;
        weights.push(masses[0] / atom.mass());
        atoms.push(atom);
    }
    AtomicMeasurePair::new(alpha, beta, grid.node_count(), atoms, weights)
}

/// Node array through `points[i]` at grid node `node_of[i]`, linear in between.
fn interpolate_track(node_of: &[usize], points: &[&[f64]], grid: TimeGrid, dim: usize) -> Vec<f64> {
    let mut nodes = Vec::with_capacity(grid.node_count() * dim);
    for j in 0..grid.node_count() {
        match node_of.iter().position(|&n| n >= j) {
            Some(i) if node_of[i] == j => nodes.extend_from_slice(points[i]),
            Some(0) => nodes.extend_from_slice(points[0]),
            None => nodes.extend_from_slice(points[points.len() - 1]),
            Some(i) => {
                let s = (j - node_of[i - 1]) as f64 / (node_of[i] - node_of[i - 1]) as f64;
                nodes.extend(points[i - 1].iter().zip(points[i]).map(|(a, b)| a + s * (b - a)));
            }
        }
    }
    nodes
}

//! Atom insertion: minimize `eta(gamma) = a_gamma sum_i w_i(gamma(t_i))` over curves.
//!
//! `eta(gamma)` is the directional derivative of the fidelity along the
//! unit-weight atom of `gamma`; appending the atom lowers the objective iff
//! `eta < -1`.

use rayon::prelude::*;

use crate::curve::{kinetic_energy, kinetic_energy_grad, Curve, DomainBox, TimeGrid};
use crate::error::{Error, Result};
use crate::forward::Observation;
use crate::measure::canonical_mass;
use crate::rng::SeededRng;
use crate::solver::SolverConfig;

/// `eta(gamma)` for a curve against residual `r`.
pub fn insertion_objective(curve: &Curve, obs: &Observation, r: &[f64], alpha: f64, beta: f64) -> Result<f64> {
    check_inputs(curve, obs, r, alpha, beta)?;
    Ok(insertion_value(curve.nodes(), curve.dim(), obs, r, alpha, beta))
}

/// `eta(gamma)` and its gradient with respect to the flat node array.
pub fn insertion_gradient(curve: &Curve, obs: &Observation, r: &[f64], alpha: f64, beta: f64) -> Result<(f64, Vec<f64>)> {
    check_inputs(curve, obs, r, alpha, beta)?;
    let mut grad = vec![0.0; curve.nodes().len()];
    let eta = insertion_value_grad(curve.nodes(), curve.dim(), obs, r, alpha, beta, &mut grad);
    Ok((eta, grad))
}

fn check_inputs(curve: &Curve, obs: &Observation, r: &[f64], alpha: f64, beta: f64) -> Result<()> {
    if curve.dim() != obs.spatial_dim() {
        return Err(Error::DimensionMismatch { expected: obs.spatial_dim(), found: curve.dim() });
    }
    if r.len() != obs.total_dim() {
        return Err(Error::DimensionMismatch { expected: obs.total_dim(), found: r.len() });
    }
    if !(alpha >= 0.0 && beta > 0.0) {
        return Err(Error::InvalidParameters { alpha, beta });
    }
    if alpha == 0.0 && curve.is_constant() {
        return Err(Error::ConstantCurveWithoutMassPenalty);
    }
    Ok(())
}

fn interpolate(nodes: &[f64], dim: usize, j: usize, s: f64, out: &mut [f64]) {
    for k in 0..dim {
        let (x0, x1) = (nodes[j * dim + k], nodes[(j + 1) * dim + k]);
        out[k] = x0 + s * (x1 - x0);
    }
}

/// `sum_i w_i(gamma(t_i))`.
pub(crate) fn dual_sum(nodes: &[f64], dim: usize, obs: &Observation, r: &[f64]) -> f64 {
    let grid = TimeGrid::new(nodes.len() / dim).expect("node array holds at least two nodes");
    let mut x = vec![0.0; dim];
    obs.times()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let (j, s) = grid.locate(t);
            interpolate(nodes, dim, j, s, &mut x);
            obs.dual_value(r, i, &x)
        })
        .sum()
}

pub(crate) fn insertion_value(nodes: &[f64], dim: usize, obs: &Observation, r: &[f64], alpha: f64, beta: f64) -> f64 {
    canonical_mass(kinetic_energy(nodes, dim), alpha, beta) * dual_sum(nodes, dim, obs, r)
}

/// Value and gradient of `eta`; `grad` has the length of `nodes`.
pub(crate) fn insertion_value_grad(nodes: &[f64], dim: usize, obs: &Observation, r: &[f64], alpha: f64, beta: f64, grad: &mut [f64]) -> f64 {
    let grid = TimeGrid::new(nodes.len() / dim).expect("node array holds at least two nodes");
    let mass = canonical_mass(kinetic_energy(nodes, dim), alpha, beta);

    // grad eta = a grad S - S a^2 (beta / 2) grad E
    kinetic_energy_grad(nodes, dim, grad);
    let mut x = vec![0.0; dim];
    let mut gx = vec![0.0; dim];
    let mut sum = 0.0;
    let mut sample_grad = vec![0.0; nodes.len()];
    for (i, (&t, spec)) in obs.times().iter().zip(obs.specs()).enumerate() {
        let (j, s) = grid.locate(t);
        interpolate(nodes, dim, j, s, &mut x);
        sum += spec.pair_with(&x, &r[obs.block(i)], &mut gx);
        for k in 0..dim {
            sample_grad[j * dim + k] += (1.0 - s) * gx[k];
            sample_grad[(j + 1) * dim + k] += s * gx[k];
        }
    }
    let energy_coef = -sum * mass * mass * 0.5 * beta;
    for (g, sg) in grad.iter_mut().zip(&sample_grad) {
        *g = mass * sg + energy_coef * *g;
    }
    mass * sum
}

/// Applies `(I + lambda L)^-1` per coordinate, `L` the path-graph Laplacian
/// over the time nodes. Turns the nodal gradient into a smooth (H^1-type)
/// descent direction so that nodes far from sample times move with their
/// neighbours.
pub(crate) fn smooth_direction(grad: &[f64], dim: usize, lambda: f64) -> Vec<f64> {
    let n = grad.len() / dim;
    let mut out = vec![0.0; grad.len()];
    if n == 1 || lambda == 0.0 {
        out.copy_from_slice(grad);
        return out;
    }
    let diag = |j: usize| 1.0 + if j == 0 || j == n - 1 { lambda } else { 2.0 * lambda };
    let off = -lambda;
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for k in 0..dim {
        // Thomas algorithm for the symmetric tridiagonal system.
        c_prime[0] = off / diag(0);
        d_prime[0] = grad[k] / diag(0);
        for j in 1..n {
            let denom = diag(j) - off * c_prime[j - 1];
            c_prime[j] = off / denom;
            d_prime[j] = (grad[j * dim + k] - off * d_prime[j - 1]) / denom;
        }
        out[(n - 1) * dim + k] = d_prime[n - 1];
        for j in (0..n - 1).rev() {
            out[j * dim + k] = d_prime[j] - c_prime[j] * out[(j + 1) * dim + k];
        }
    }
    out
}

/// Node array with the smallest kinetic energy among those that agree with
/// `nodes` at every sample time.
///
/// `eta` and the data term see a curve only through its positions at the
/// sample times, so this move lowers the energy at no cost elsewhere. It is
/// solved exactly by conjugate gradients on the null space of the sampling
/// constraints.
pub(crate) fn relax_nodes(nodes: &[f64], dim: usize, times: &[f64]) -> Vec<f64> {
    let n = nodes.len() / dim;
    let grid = TimeGrid::new(n).expect("node array holds at least two nodes");
    // Orthonormal basis of the constraint rows, dependent rows dropped.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for &t in times {
        let (j, s) = grid.locate(t);
        let mut row = vec![0.0; n];
        row[j] = 1.0 - s;
        if j + 1 < n {
            row[j + 1] += s;
        }
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = q.iter().zip(&row).map(|(a, b)| a * b).sum();
                row.iter_mut().zip(q).for_each(|(r, qv)| *r -= d * qv);
            }
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-10 {
            row.iter_mut().for_each(|v| *v /= norm);
            basis.push(row);
        }
    }
    let project = |v: &mut [f64]| {
        for q in &basis {
            let d: f64 = q.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(x, qv)| *x -= d * qv);
        }
    };
    let laplacian = |x: &[f64], out: &mut [f64]| {
        for j in 0..n {
            let mut v = 0.0;
            if j > 0 {
                v += x[j] - x[j - 1];
            }
            if j + 1 < n {
                v += x[j] - x[j + 1];
            }
            out[j] = v;
        }
    };

    let mut out = nodes.to_vec();
    let mut x = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut lp = vec![0.0; n];
    for k in 0..dim {
        for j in 0..n {
            x[j] = nodes[j * dim + k];
        }
        laplacian(&x, &mut r);
        r.iter_mut().for_each(|v| *v = -*v);
        project(&mut r);
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for _ in 0..2 * n {
            if rr.sqrt() <= 1e-15 * scale {
                break;
            }
            laplacian(&p, &mut lp);
            project(&mut lp);
            let curvature: f64 = p.iter().zip(&lp).map(|(a, b)| a * b).sum();
            if curvature <= 0.0 {
                break;
            }
            let step = rr / curvature;
            x.iter_mut().zip(&p).for_each(|(xv, pv)| *xv += step * pv);
            r.iter_mut().zip(&lp).for_each(|(rv, v)| *rv -= step * v);
            let rr_next: f64 = r.iter().map(|v| v * v).sum();
            let beta = rr_next / rr;
            rr = rr_next;
            p.iter_mut().zip(&r).for_each(|(pv, rv)| *pv = rv + beta * *pv);
            project(&mut p);
        }
        for j in 0..n {
            out[j * dim + k] = x[j];
        }
    }
    out
}

/// Smoothing strength used by the curve descents.
pub(crate) fn smoothing_for(node_count: usize) -> f64 {
    let m = (node_count - 1) as f64;
    (m * m) / 16.0
}

/// Monotone projected descent on `eta` from `start`.
///
/// Each iteration moves the nodes along the smoothed negative gradient by a
/// sup-norm displacement `step`, projected onto the box. Non-improving trials
/// halve `step`; improving ones grow it back towards `max_step`.
pub(crate) fn descend(
    start: Vec<f64>,
    dim: usize,
    obs: &Observation,
    r: &[f64],
    alpha: f64,
    beta: f64,
    domain: &DomainBox,
    max_step: f64,
    iterations: usize,
) -> (Vec<f64>, f64) {
    let lambda = smoothing_for(start.len() / dim);
    let mut x = start;
    let mut grad = vec![0.0; x.len()];
    let mut eta = insertion_value_grad(&x, dim, obs, r, alpha, beta, &mut grad);
    let mut step = max_step;
    let min_step = max_step * 1e-12;
    let mut trial = vec![0.0; x.len()];
    let try_relax = |x: &mut Vec<f64>, eta: &mut f64, grad: &mut Vec<f64>| {
        let mut relaxed = relax_nodes(x, dim, obs.times());
        domain.project_nodes(&mut relaxed);
        if insertion_value(&relaxed, dim, obs, r, alpha, beta) < *eta {
            *x = relaxed;
            *eta = insertion_value_grad(x, dim, obs, r, alpha, beta, grad);
        }
    };
    for it in 0..iterations {
        if it % RELAX_EVERY == 0 {
            try_relax(&mut x, &mut eta, &mut grad);
        }
        // Coordinates pinned at the box with an outward gradient are frozen;
        // smoothing over the remaining ones keeps a descent direction.
        let active: Vec<bool> = grad
            .iter()
            .enumerate()
            .map(|(q, g)| {
                let k = q % dim;
                (*g > 0.0 && x[q] <= domain.lower()[k]) || (*g < 0.0 && x[q] >= domain.upper()[k])
            })
            .collect();
        let free: Vec<f64> = grad.iter().zip(&active).map(|(g, a)| if *a { 0.0 } else { *g }).collect();
        let mut dir = smooth_direction(&free, dim, lambda);
        dir.iter_mut().zip(&active).filter(|(_, a)| **a).for_each(|(d, _)| *d = 0.0);
        let scale = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 || !scale.is_finite() {
            break;
        }
        loop {
            for ((t, xv), dv) in trial.iter_mut().zip(&x).zip(&dir) {
                *t = xv - step * dv / scale;
            }
            domain.project_nodes(&mut trial);
            let value = insertion_value(&trial, dim, obs, r, alpha, beta);
            if value < eta {
                std::mem::swap(&mut x, &mut trial);
                eta = insertion_value_grad(&x, dim, obs, r, alpha, beta, &mut grad);
                step = (step * 1.5).min(max_step);
                break;
            }
            step *= 0.5;
            if step < min_step {
                try_relax(&mut x, &mut eta, &mut grad);
                return (x, eta);
            }
        }
    }
    try_relax(&mut x, &mut eta, &mut grad);
    (x, eta)
}

/// Best curve found by [`lmo_insert`].
#[derive(Debug, Clone, PartialEq)]
pub struct LmoResult {
    pub curve: Curve,
    pub eta: f64,
    pub starts: usize,
}

fn grid_points_per_axis(dim: usize) -> usize {
    match dim {
        1 => 101,
        2 => 41,
        3 => 13,
        _ => 5,
    }
}

/// Coarse spatial grid over the box, row-major in the last axis.
pub(crate) fn spatial_grid(domain: &DomainBox, per_axis: usize) -> Vec<Vec<f64>> {
    let dim = domain.dim();
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut flat| {
            let mut p = vec![0.0; dim];
            for k in (0..dim).rev() {
                let q = flat % per_axis;
                flat /= per_axis;
                let (lo, hi) = (domain.lower()[k], domain.upper()[k]);
                p[k] = lo + (hi - lo) * q as f64 / (per_axis - 1) as f64;
            }
            p
        })
        .collect()
}

/// Indices of grid-local minimizers (over the full `3^d` neighbourhood) with negative value.
fn local_minima(values: &[f64], dim: usize, per_axis: usize, keep: usize) -> Vec<usize> {
    let strides: Vec<usize> = (0..dim).map(|k| per_axis.pow((dim - 1 - k) as u32)).collect();
    let mut out: Vec<usize> = (0..values.len())
        .filter(|&idx| {
            let v = values[idx];
            if v >= 0.0 {
                return false;
            }
            let coords: Vec<usize> = strides.iter().map(|s| (idx / s) % per_axis).collect();
            let offsets = 3usize.pow(dim as u32);
            (0..offsets).all(|mut o| {
                let mut nb = 0usize;
                for k in 0..dim {
                    let delta = (o % 3) as isize - 1;
                    o /= 3;
                    let c = coords[k] as isize + delta;
                    if c < 0 || c >= per_axis as isize {
                        return true;
                    }
                    nb += c as usize * strides[k];
                }
                nb == idx || values[nb] >= v
            })
        })
        .collect();
    out.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    out.truncate(keep);
    out
}

/// Polyline through `anchors[i]` at `times[i]`, constant before the first and
/// after the last sample time, sampled on `grid`.
fn polyline_through(times: &[f64], anchors: &[&[f64]], grid: TimeGrid) -> Vec<f64> {
    let dim = anchors[0].len();
    let mut nodes = Vec::with_capacity(grid.node_count() * dim);
    for j in 0..grid.node_count() {
        let t = grid.node(j);
        let seg = times.iter().position(|&ti| ti > t);
        match seg {
            Some(0) => nodes.extend_from_slice(anchors[0]),
            None => nodes.extend_from_slice(anchors[anchors.len() - 1]),
            Some(i) => {
                let s = (t - times[i - 1]) / (times[i] - times[i - 1]);
                nodes.extend(anchors[i - 1].iter().zip(anchors[i]).map(|(a, b)| a + s * (b - a)));
            }
        }
    }
    nodes
}

const MINIMA_PER_FIELD: usize = 6;

/// Descent iterations between two energy relaxations.
pub(crate) const RELAX_EVERY: usize = 10;

/// Initial curves for the multistart descent.
pub(crate) fn multistart_curves(obs: &Observation, r: &[f64], domain: &DomainBox, config: &SolverConfig, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    let dim = domain.dim();
    let grid = TimeGrid::new(config.curve_nodes).expect("validated config");
    let n = grid.node_count();
    let per_axis = grid_points_per_axis(dim);
    let points = spatial_grid(domain, per_axis);
    let fields: Vec<Vec<f64>> = (0..obs.sample_count())
        .into_par_iter()
        .map(|i| points.iter().map(|p| obs.dual_value(r, i, p)).collect())
        .collect();
    let summed: Vec<f64> = (0..points.len()).map(|q| fields.iter().map(|f| f[q]).sum()).collect();

    let mut starts: Vec<Vec<f64>> = Vec::new();
    let push = |nodes: Vec<f64>, starts: &mut Vec<Vec<f64>>| {
        if !starts.contains(&nodes) {
            starts.push(nodes);
        }
    };

    for idx in local_minima(&summed, dim, per_axis, MINIMA_PER_FIELD) {
        push(points[idx].repeat(n), &mut starts);
    }
    let minima: Vec<Vec<usize>> = fields.iter().map(|f| local_minima(f, dim, per_axis, MINIMA_PER_FIELD)).collect();
    for m in &minima {
        for &idx in m {
            push(points[idx].repeat(n), &mut starts);
        }
    }

    // Chains of per-time minimizers linked by nearest neighbour, seeded from
    // every minimizer at every time and extended in both directions.
    let times = obs.times();
    for (i0, m0) in minima.iter().enumerate() {
        for &seed in m0 {
            let mut chain: Vec<usize> = vec![usize::MAX; times.len()];
            chain[i0] = seed;
            for i in i0 + 1..times.len() {
                chain[i] = nearest(&points, &minima[i], chain[i - 1]);
            }
            for i in (0..i0).rev() {
                chain[i] = nearest(&points, &minima[i], chain[i + 1]);
            }
            let anchors: Vec<&[f64]> = chain.iter().map(|&q| points[q].as_slice()).collect();
            push(polyline_through(times, &anchors, grid), &mut starts);
        }
    }

    // Random starts alternate between static points and curves with
    // independent nodes; the latter escape saddles of the energy where
    // neighbouring nodes coincide.
    for s in 0..config.multistart_count {
        let mut draw = || -> Vec<f64> { (0..dim).map(|k| rng.uniform_in(domain.lower()[k], domain.upper()[k])).collect() };
        let nodes = if s % 2 == 0 { draw().repeat(n) } else { (0..n).flat_map(|_| draw()).collect() };
        push(nodes, &mut starts);
    }
    starts
}

/// Closest candidate to `from`; keeps `from` when there are no candidates.
fn nearest(points: &[Vec<f64>], candidates: &[usize], from: usize) -> usize {
    candidates
        .iter()
        .copied()
        .min_by(|&a, &b| crate::curve::dist(&points[a], &points[from]).total_cmp(&crate::curve::dist(&points[b], &points[from])))
        .unwrap_or(from)
}

/// Multistart projected descent for the curve minimizing `eta`.
///
/// The result never has a larger `eta` than the best start. A nonnegative
/// `eta` means no descending atom was found.
pub fn lmo_insert(obs: &Observation, r: &[f64], domain: &DomainBox, config: &SolverConfig, seed: u64) -> Result<LmoResult> {
    config.validate()?;
    if domain.dim() != obs.spatial_dim() {
        return Err(Error::DimensionMismatch { expected: obs.spatial_dim(), found: domain.dim() });
    }
    if r.len() != obs.total_dim() {
        return Err(Error::DimensionMismatch { expected: obs.total_dim(), found: r.len() });
    }
    let dim = domain.dim();
    if r.iter().all(|v| *v == 0.0) {
        let curve = Curve::constant(&domain.center(), config.curve_nodes)?;
        return Ok(LmoResult { curve, eta: 0.0, starts: 0 });
    }
    let mut rng = SeededRng::new(seed);
    let starts = multistart_curves(obs, r, domain, config, &mut rng);
    let max_step = config.lmo_step_size(domain);
    let results: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|s| descend(s.clone(), dim, obs, r, config.alpha, config.beta, domain, max_step, config.lmo_descent_steps))
        .collect();
    // First minimum wins on ties.
    let (best, eta) = results
        .into_iter()
        .reduce(|best, next| if next.1 < best.1 { next } else { best })
        .expect("at least one start");
    Ok(LmoResult { curve: Curve::new(dim, best)?, eta, starts: starts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::KernelSpec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn fourier1(ks: &[f64]) -> KernelSpec {
        KernelSpec::fourier(ks.iter().map(|&k| vec![k]).collect()).unwrap()
    }

    #[test]
    fn zero_residual_gives_zero_eta() {
        let obs = Observation::template(vec![0.3, 0.7], vec![fourier1(&[0.0, PI])]).unwrap();
        let r = vec![0.0; obs.total_dim()];
        let c = Curve::line(&[0.1], &[0.8], 9).unwrap();
        assert_eq!(insertion_objective(&c, &obs, &r, 1.0, 1.0).unwrap(), 0.0);
        let config = SolverConfig::new(1.0, 1.0);
        let res = lmo_insert(&obs, &r, &DomainBox::unit(1), &config, 0).unwrap();
        assert_eq!(res.eta, 0.0);
    }

    #[test]
    fn constant_curve_product_formula() {
        // K = {0}, r_i = (-1, 0) gives w_i = -1 everywhere.
        let obs = Observation::template(vec![0.2, 0.5, 0.8], vec![fourier1(&[0.0])]).unwrap();
        let r = vec![-1.0, 0.0, -1.0, 0.0, -1.0, 0.0];
        let c = Curve::constant(&[0.4], 5).unwrap();
        assert_relative_eq!(insertion_objective(&c, &obs, &r, 1.0, 7.0).unwrap(), -3.0, epsilon = 1e-14);
    }

    #[test]
    fn line_product_formula() {
        // E = 1, alpha = 1, beta = 2: a = 0.5; two samples of w = -2.
        let obs = Observation::template(vec![0.25, 0.75], vec![fourier1(&[0.0])]).unwrap();
        let r = vec![-2.0, 0.0, -2.0, 0.0];
        let c = Curve::line(&[0.0], &[1.0], 5).unwrap();
        assert_relative_eq!(insertion_objective(&c, &obs, &r, 1.0, 2.0).unwrap(), -2.0, epsilon = 1e-14);
    }

    #[test]
    fn alpha_zero_constant_curve_rejected() {
        let obs = Observation::template(vec![0.5], vec![fourier1(&[0.0])]).unwrap();
        let c = Curve::constant(&[0.4], 5).unwrap();
        assert_eq!(insertion_objective(&c, &obs, &[1.0, 0.0], 0.0, 1.0), Err(Error::ConstantCurveWithoutMassPenalty));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let obs = Observation::template(vec![0.13, 0.5, 0.77], vec![fourier1(&[0.0, PI, 2.0 * PI, 3.0])]).unwrap();
        let r: Vec<f64> = (0..obs.total_dim()).map(|k| ((k * 7 + 3) as f64).sin()).collect();
        let c = Curve::from_fn(9, 1, |t| vec![0.5 + 0.3 * (3.0 * t).sin()]).unwrap();
        let (_, g) = insertion_gradient(&c, &obs, &r, 0.4, 1.3).unwrap();
        let h = 1e-6;
        for k in 0..c.nodes().len() {
            let mut p = c.nodes().to_vec();
            p[k] += h;
            let mut q = c.nodes().to_vec();
            q[k] -= h;
            let fd = (insertion_value(&p, 1, &obs, &r, 0.4, 1.3) - insertion_value(&q, 1, &obs, &r, 0.4, 1.3)) / (2.0 * h);
            assert_relative_eq!(g[k], fd, epsilon = 1e-7, max_relative = 1e-5);
        }
    }

    #[test]
    fn smoothing_solves_the_tridiagonal_system() {
        let g = vec![1.0, -2.0, 0.5, 3.0, 0.0];
        let lambda = 2.5;
        let x = smooth_direction(&g, 1, lambda);
        let n = g.len();
        for j in 0..n {
            let mut lhs = x[j];
            if j > 0 {
                lhs += lambda * (x[j] - x[j - 1]);
            }
            if j + 1 < n {
                lhs += lambda * (x[j] - x[j + 1]);
            }
            assert_relative_eq!(lhs, g[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn lmo_finds_the_cosine_minimizer() {
        // w(x) = -cos(pi x): the best constant curve sits at x = 0 with eta = -1 / alpha.
        let obs = Observation::template(vec![0.5], vec![fourier1(&[PI])]).unwrap();
        let r = vec![-1.0, 0.0];
        let alpha = 2.0;
        let mut config = SolverConfig::new(alpha, 1.0);
        config.curve_nodes = 9;
        let res = lmo_insert(&obs, &r, &DomainBox::unit(1), &config, 5).unwrap();
        // brute force over 1001 constant curves
        let brute = (0..=1000)
            .map(|q| {
                let c = Curve::constant(&[q as f64 / 1000.0], 9).unwrap();
                insertion_objective(&c, &obs, &r, alpha, 1.0).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(brute, -0.5, epsilon = 1e-12);
        assert!(res.eta <= brute + 1e-9, "lmo {} vs brute {}", res.eta, brute);
        assert!(res.curve.node(0)[0].abs() < 1e-3);
    }

    #[test]
    fn lmo_is_no_worse_than_its_starts() {
        let obs = Observation::template(vec![0.3, 0.7], vec![fourier1(&[0.0, PI, 2.0 * PI])]).unwrap();
        let r: Vec<f64> = (0..obs.total_dim()).map(|k| ((k * 5 + 1) as f64).cos()).collect();
        let domain = DomainBox::unit(1);
        let config = SolverConfig::new(0.5, 0.5);
        let mut rng = SeededRng::new(3);
        let best_start = multistart_curves(&obs, &r, &domain, &config, &mut rng)
            .iter()
            .map(|s| insertion_value(s, 1, &obs, &r, 0.5, 0.5))
            .fold(f64::INFINITY, f64::min);
        let res = lmo_insert(&obs, &r, &domain, &config, 3).unwrap();
        assert!(res.eta <= best_start);
    }

    #[test]
    fn local_minima_on_a_line() {
        let v = vec![0.0, -1.0, 0.0, -2.0, -0.5, 1.0];
        assert_eq!(local_minima(&v, 1, 6, 10), vec![3, 1]);
        assert_eq!(local_minima(&v, 1, 6, 1), vec![3]);
    }
    #[test]
    fn relaxation_interpolates_between_node_samples() {
        let c = Curve::from_fn(9, 1, |t| vec![(7.0 * t).sin()]).unwrap();
        let out = relax_nodes(c.nodes(), 1, &[0.25, 0.75]);
        let (a, b) = (c.node(2)[0], c.node(6)[0]);
        for j in 0..9 {
            let expected = match j {
                0..=2 => a,
                6..=8 => b,
                _ => a + (b - a) * (j - 2) as f64 / 4.0,
            };
            assert_relative_eq!(out[j], expected, epsilon = 1e-13);
        }
    }

    #[test]
    fn relaxation_keeps_samples_and_lowers_energy() {
        let mut rng = SeededRng::new(5);
        for _ in 0..50 {
            let dim = 1 + rng.below(3);
            let n = 5 + rng.below(30);
            let nodes: Vec<f64> = (0..n * dim).map(|_| rng.uniform()).collect();
            let times: Vec<f64> = {
                let mut t: Vec<f64> = (0..1 + rng.below(5)).map(|_| rng.uniform_in(0.01, 0.99)).collect();
                t.sort_by(f64::total_cmp);
                t
            };
            let before = Curve::new(dim, nodes.clone()).unwrap();
            let after = Curve::new(dim, relax_nodes(&nodes, dim, &times)).unwrap();
            assert!(after.kinetic_energy() <= before.kinetic_energy() + 1e-12);
            for &t in &times {
                for (x, y) in before.position_at(t).iter().zip(after.position_at(t)) {
                    assert!((x - y).abs() <= 1e-12, "t = {t}: {x} vs {y}");
                }
            }
        }
    }
}

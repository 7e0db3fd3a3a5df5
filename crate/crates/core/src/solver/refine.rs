//! Joint refinement of weights and curves, pruning, and the stopping gap.

use crate::curve::{kinetic_energy, Curve, DomainBox};
use crate::error::Result;
use crate::forward::Observation;
use crate::measure::{AtomicMeasurePair, CurveAtom};
use crate::measure::canonical_mass;
use crate::solver::insertion::{dual_sum, insertion_value_grad, relax_nodes, smooth_direction, smoothing_for, RELAX_EVERY};
use crate::solver::weights::weight_qp;
use crate::solver::{SolverConfig, SolverState};

/// Maximal number of step halvings per refinement step.
const MAX_HALVINGS: usize = 20;

/// `G(c, gamma) = sum_j c_j + 1/2 |sum_j c_j A u_{gamma_j} - y|^2` for canonical atoms.
pub fn joint_objective(weights: &[f64], curves: &[Curve], obs: &Observation, alpha: f64, beta: f64) -> Result<f64> {
    let measure = AtomicMeasurePair::from_curves(alpha, beta, curves.to_vec(), weights.to_vec())?;
    let r = obs.residual(&measure);
    Ok(weights.iter().sum::<f64>() + 0.5 * r.iter().map(|v| v * v).sum::<f64>())
}

/// Gradient of [`joint_objective`] at a measure: `dG/dc_j = 1 + <A u_j, r>`
/// and `dG/dgamma_j = c_j grad eta_j` with `r = A rho - y`.
pub fn joint_gradient(measure: &AtomicMeasurePair, obs: &Observation) -> (Vec<f64>, Vec<Vec<f64>>) {
    let r = obs.residual(measure);
    let mut grad_c = Vec::with_capacity(measure.len());
    let mut grad_nodes = Vec::with_capacity(measure.len());
    for (c, atom) in measure.iter() {
        let curve = atom.curve();
        let mut g = vec![0.0; curve.nodes().len()];
        let eta = insertion_value_grad(curve.nodes(), curve.dim(), obs, &r, measure.alpha(), measure.beta(), &mut g);
        grad_c.push(1.0 + eta);
        g.iter_mut().for_each(|v| *v *= c);
        grad_nodes.push(g);
    }
    (grad_c, grad_nodes)
}

/// `<A u_j, r>` for every atom of the measure.
pub(crate) fn atom_pairings(measure: &AtomicMeasurePair, obs: &Observation, r: &[f64]) -> Vec<f64> {
    measure.atoms().iter().map(|a| a.mass() * dual_sum(a.curve().nodes(), a.curve().dim(), obs, r)).collect()
}

/// Builds the solver state of a measure: residual and objective.
pub(crate) fn state_of(measure: AtomicMeasurePair, obs: &Observation, iteration: usize, gap: f64) -> SolverState {
    let residual = obs.residual(&measure);
    let j: f64 = measure.iter().map(|(c, a)| c * a.j_energy()).sum();
    let objective = j + 0.5 * residual.iter().map(|v| v * v).sum::<f64>();
    SolverState { measure, residual, objective, gap, iteration }
}

struct Workspace<'a> {
    obs: &'a Observation,
    alpha: f64,
    beta: f64,
    dim: usize,
}

impl Workspace<'_> {
    fn columns(&self, nodes: &[Vec<f64>]) -> Vec<Vec<f64>> {
        nodes
            .iter()
            .map(|x| {
                let curve = Curve::new(self.dim, x.clone()).expect("refined nodes stay finite");
                let mass = 1.0 / (0.5 * self.beta * curve.kinetic_energy() + self.alpha);
                self.obs.atom_observation(&curve, mass)
            })
            .collect()
    }

    fn evaluate(&self, columns: &[Vec<f64>], c: &[f64]) -> (f64, Vec<f64>) {
        let mut r: Vec<f64> = self.obs.data().iter().map(|v| -v).collect();
        for (v, &cj) in columns.iter().zip(c) {
            r.iter_mut().zip(v).for_each(|(ri, vi)| *ri += cj * vi);
        }
        (c.iter().sum::<f64>() + 0.5 * r.iter().map(|v| v * v).sum::<f64>(), r)
    }
}

/// One cyclic sweep of exact nonnegative coordinate updates on the weights.
fn weight_sweep(columns: &[Vec<f64>], c: &mut [f64], r: &mut [f64]) {
    for (v, cj) in columns.iter().zip(c.iter_mut()) {
        let g: f64 = v.iter().map(|x| x * x).sum();
        if g <= 0.0 {
            continue;
        }
        let grad: f64 = v.iter().zip(r.iter()).map(|(a, b)| a * b).sum::<f64>() + 1.0;
        let new = (*cj - grad / g).max(0.0);
        let delta = new - *cj;
        if delta != 0.0 {
            *cj = new;
            r.iter_mut().zip(v).for_each(|(ri, vi)| *ri += delta * vi);
        }
    }
}

/// Projected descent on weights and curve nodes jointly.
///
/// Each step moves all nodes along the smoothed negative gradient (sup-norm
/// displacement `step`, projected onto the box), then updates the weights by
/// one sweep of exact coordinate minimization at the new nodes. A step is
/// accepted only if the objective does not increase; otherwise `step` is
/// halved, at most 20 times, after which the current state is kept.
pub fn refine_atoms(state: &SolverState, obs: &Observation, domain: &DomainBox, config: &SolverConfig) -> SolverState {
    let measure = &state.measure;
    let Some(dim) = measure.dim() else {
        return state.clone();
    };
    let ws = Workspace { obs, alpha: measure.alpha(), beta: measure.beta(), dim };
    let mut nodes: Vec<Vec<f64>> = measure.atoms().iter().map(|a| a.curve().nodes().to_vec()).collect();
    let mut c = measure.weights().to_vec();
    let mut columns = ws.columns(&nodes);
    let (mut value, mut r) = ws.evaluate(&columns, &c);
    let start_value = value;
    let max_step = config.refine_step_size(domain);
    let lambda = smoothing_for(measure.time_nodes());
    let mut step = max_step;

    let relax = |nodes: &[Vec<f64>], c: &[f64]| -> (Vec<Vec<f64>>, Vec<f64>) {
        nodes
            .iter()
            .zip(c)
            .map(|(x, &cj)| {
                let mut y = relax_nodes(x, dim, obs.times());
                domain.project_nodes(&mut y);
                let before = canonical_mass(kinetic_energy(x, dim), ws.alpha, ws.beta);
                let after = canonical_mass(kinetic_energy(&y, dim), ws.alpha, ws.beta);
                (y, cj * before / after)
            })
            .unzip()
    };

    let try_relax = |nodes: &mut Vec<Vec<f64>>, columns: &mut Vec<Vec<f64>>, c: &mut Vec<f64>, value: &mut f64, r: &mut Vec<f64>| {
        let (trial_nodes, trial_c) = relax(nodes, c);
        let trial_columns = ws.columns(&trial_nodes);
        let (trial_value, trial_r) = ws.evaluate(&trial_columns, &trial_c);
        if trial_value < *value {
            *nodes = trial_nodes;
            *columns = trial_columns;
            *c = trial_c;
            *value = trial_value;
            *r = trial_r;
        }
    };

    'outer: for it in 0..config.refine_steps {
        if it % RELAX_EVERY == 0 {
            try_relax(&mut nodes, &mut columns, &mut c, &mut value, &mut r);
        }
        let mut dirs = Vec::with_capacity(nodes.len());
        let mut scale = 0.0f64;
        for (x, &cj) in nodes.iter().zip(&c) {
            let mut g = vec![0.0; x.len()];
            insertion_value_grad(x, dim, obs, &r, ws.alpha, ws.beta, &mut g);
            g.iter_mut().for_each(|v| *v *= cj);
            let d = smooth_direction(&g, dim, lambda);
            scale = d.iter().fold(scale, |m, v| m.max(v.abs()));
            dirs.push(d);
        }
        for _ in 0..=MAX_HALVINGS {
            let trial_nodes: Vec<Vec<f64>> = if scale > 0.0 {
                nodes
                    .iter()
                    .zip(&dirs)
                    .map(|(x, d)| {
                        let mut t: Vec<f64> = x.iter().zip(d).map(|(xv, dv)| xv - step * dv / scale).collect();
                        domain.project_nodes(&mut t);
                        t
                    })
                    .collect()
            } else {
                nodes.clone()
            };
            let trial_columns = if scale > 0.0 { ws.columns(&trial_nodes) } else { columns.clone() };
            let mut trial_c = c.clone();
            let (_, mut trial_r) = ws.evaluate(&trial_columns, &trial_c);
            weight_sweep(&trial_columns, &mut trial_c, &mut trial_r);
            let (trial_value, trial_r) = ws.evaluate(&trial_columns, &trial_c);
            if trial_value < value {
                nodes = trial_nodes;
                columns = trial_columns;
                c = trial_c;
                value = trial_value;
                r = trial_r;
                step = (step * 1.5).min(max_step);
                continue 'outer;
            }
            if scale == 0.0 {
                break 'outer;
            }
            step *= 0.5;
        }
        break;
    }
    try_relax(&mut nodes, &mut columns, &mut c, &mut value, &mut r);

    if value >= start_value {
        return state.clone();
    }
    let atoms: Vec<CurveAtom> = nodes
        .into_iter()
        .map(|x| CurveAtom::new(Curve::new(dim, x).expect("finite nodes"), ws.alpha, ws.beta).expect("alpha > 0"))
        .collect();
    let (atoms, weights): (Vec<_>, Vec<_>) = atoms.into_iter().zip(c).filter(|(_, w)| *w > 0.0).unzip();
    let refined = AtomicMeasurePair::new(ws.alpha, ws.beta, measure.time_nodes(), atoms, weights).expect("consistent atoms");
    state_of(refined, obs, state.iteration, state.gap)
}

/// Re-solves the weight problem for the current atoms, warm-started, and drops zero weights.
pub fn reoptimize_weights(state: &SolverState, obs: &Observation, config: &SolverConfig) -> SolverState {
    let measure = &state.measure;
    if measure.is_empty() {
        return state.clone();
    }
    let columns: Vec<Vec<f64>> = measure.iter().map(|(_, a)| obs.atom_observation(a.curve(), a.mass())).collect();
    let c = weight_qp(&columns, obs.data(), config.weight_qp_tolerance, Some(measure.weights()));
    let mut out = AtomicMeasurePair::empty(measure.alpha(), measure.beta(), measure.time_nodes()).expect("valid parameters");
    for ((_, atom), w) in measure.iter().zip(c) {
        if w > 0.0 {
            out.push(atom.clone(), w).expect("consistent atoms");
        }
    }
    state_of(out, obs, state.iteration, state.gap)
}

/// Drops atoms with weight below `prune_threshold`, merges atoms whose node
/// arrays are within `merge_tolerance` in sup norm (weights added, the heavier
/// atom's curve kept), and re-solves the weights if anything changed.
pub fn prune_and_merge(state: &SolverState, obs: &Observation, config: &SolverConfig) -> SolverState {
    let measure = &state.measure;
    let mut kept: Vec<(f64, CurveAtom)> = Vec::new();
    let mut changed = false;
    for (w, atom) in measure.iter() {
        if w < config.prune_threshold {
            changed = true;
            continue;
        }
        match kept.iter_mut().find(|(_, a)| a.curve().sup_distance(atom.curve()) < config.merge_tolerance) {
            Some((kw, ka)) => {
                if w > *kw {
                    *ka = atom.clone();
                }
                *kw += w;
                changed = true;
            }
            None => kept.push((w, atom.clone())),
        }
    }
    if !changed {
        return state.clone();
    }
    let (weights, atoms): (Vec<f64>, Vec<CurveAtom>) = kept.into_iter().unzip();
    let merged = AtomicMeasurePair::new(measure.alpha(), measure.beta(), measure.time_nodes(), atoms, weights).expect("consistent atoms");
    reoptimize_weights(&state_of(merged, obs, state.iteration, state.gap), obs, config)
}

/// Replaces pairs of atoms that stay within `fuse_radius` of each other at
/// every sample time by a single atom on their mass-weighted mean curve.
///
/// Each fusion is followed by weight and curve refinement and kept only if
/// the objective does not increase. Lighter atoms are tried first.
pub fn fuse_close_atoms(state: &SolverState, obs: &Observation, domain: &DomainBox, config: &SolverConfig) -> SolverState {
    let radius = config.fuse_radius(domain);
    let mut current = state.clone();
    let mut tried: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    'search: loop {
        let measure = &current.measure;
        let mut order: Vec<usize> = (0..measure.len()).collect();
        order.sort_by(|&a, &b| measure.weights()[a].total_cmp(&measure.weights()[b]));
        for &light in &order {
            for &heavy in order.iter().rev() {
                if heavy == light || measure.weights()[heavy] < measure.weights()[light] {
                    continue;
                }
                let (a, b) = (measure.atoms()[light].curve(), measure.atoms()[heavy].curve());
                let close = obs.times().iter().all(|&t| crate::curve::dist(&a.position_at(t), &b.position_at(t)) <= radius);
                let key = (a.nodes().to_vec(), b.nodes().to_vec());
                if !close || tried.contains(&key) {
                    continue;
                }
                tried.push(key);
                if let Some(fused) = try_fuse(&current, light, heavy, obs, domain, config) {
                    current = fused;
                    continue 'search;
                }
            }
        }
        return current;
    }
}

fn try_fuse(state: &SolverState, light: usize, heavy: usize, obs: &Observation, domain: &DomainBox, config: &SolverConfig) -> Option<SolverState> {
    let measure = &state.measure;
    let (atoms, weights) = (measure.atoms(), measure.weights());
    let (ml, mh) = (weights[light] * atoms[light].mass(), weights[heavy] * atoms[heavy].mass());
    let nodes: Vec<f64> = atoms[light]
        .curve()
        .nodes()
        .iter()
        .zip(atoms[heavy].curve().nodes())
        .map(|(x, y)| (ml * x + mh * y) / (ml + mh))
        .collect();
    let curve = Curve::new(atoms[heavy].curve().dim(), nodes).ok()?;
    let atom = CurveAtom::new(curve, measure.alpha(), measure.beta()).ok()?;
    let weight = (ml + mh) / atom.mass();
    let mut kept_atoms = Vec::with_capacity(measure.len() - 1);
    let mut kept_weights = Vec::with_capacity(measure.len() - 1);
    for (k, (a, w)) in atoms.iter().zip(weights).enumerate() {
        if k == heavy {
            kept_atoms.push(atom.clone());
            kept_weights.push(weight);
        } else if k != light {
            kept_atoms.push(a.clone());
            kept_weights.push(*w);
        }
    }
    let fused = AtomicMeasurePair::new(measure.alpha(), measure.beta(), measure.time_nodes(), kept_atoms, kept_weights).ok()?;
    let mut next = reoptimize_weights(&state_of(fused, obs, state.iteration, state.gap), obs, config);
    next = refine_atoms(&next, obs, domain, config);
    next = reoptimize_weights(&next, obs, config);
    next = prune_and_merge(&next, obs, config);
    (next.objective <= state.objective && next.measure.len() < measure.len()).then_some(next)
}

/// Stopping certificate
/// `sum_j c_j |1 + <A u_j, r>| + max(1, sum_j c_j) max(0, -1 - eta)`.
///
/// The first term vanishes at optimal weights, the second when the best
/// insertion candidate cannot decrease the objective.
pub fn surrogate_gap(state: &SolverState, obs: &Observation, candidate_eta: f64) -> f64 {
    let pairings = atom_pairings(&state.measure, obs, &state.residual);
    let weights = state.measure.weights();
    let weight_term: f64 = weights.iter().zip(&pairings).map(|(c, p)| c * (1.0 + p).abs()).sum();
    let scale = weights.iter().sum::<f64>().max(1.0);
    weight_term + scale * (-1.0 - candidate_eta).max(0.0)
}

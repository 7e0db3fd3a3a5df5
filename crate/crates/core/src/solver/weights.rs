//! Conic weight problem `min_{c >= 0} 1/2 |V c - y|^2 + sum_j c_j`.
//!
//! Columns `v_j` are the observations of unit-weight atoms, so `sum_j c_j`
//! is the regularizer value of the combination.

/// Safety cap on coordinate-descent sweeps.
const MAX_SWEEPS: usize = 200_000;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cyclic coordinate descent with exact per-coordinate minimization,
/// stopped when a full sweep changes no weight by more than `tol`.
///
/// `warm_start`, when given, must have one entry per column. Zero columns get
/// weight zero.
pub fn weight_qp(columns: &[Vec<f64>], y: &[f64], tol: f64, warm_start: Option<&[f64]>) -> Vec<f64> {
    let p = columns.len();
    let gram: Vec<Vec<f64>> = columns.iter().map(|a| columns.iter().map(|b| dot(a, b)).collect()).collect();
    let rhs: Vec<f64> = columns.iter().map(|v| dot(v, y)).collect();
    let mut c: Vec<f64> = match warm_start {
        Some(w) => w.iter().map(|v| v.max(0.0)).collect(),
        None => vec![0.0; p],
    };
    // g_j = <v_j, V c>
    let mut vc: Vec<f64> = (0..p).map(|j| (0..p).map(|l| gram[j][l] * c[l]).sum()).collect();
    for _ in 0..MAX_SWEEPS {
        let mut change = 0.0f64;
        for j in 0..p {
            let g = gram[j][j];
            if g <= 0.0 {
                if c[j] != 0.0 {
                    let old = c[j];
                    c[j] = 0.0;
                    for l in 0..p {
                        vc[l] -= gram[l][j] * old;
                    }
                }
                continue;
            }
            let others = vc[j] - g * c[j];
            let new = ((rhs[j] - others - 1.0) / g).max(0.0);
            let delta = new - c[j];
            if delta != 0.0 {
                c[j] = new;
                for l in 0..p {
                    vc[l] += gram[l][j] * delta;
                }
                change = change.max(delta.abs());
            }
        }
        if change <= tol {
            break;
        }
    }
    c
}

/// `1/2 |V c - y|^2 + sum c`.
pub fn qp_objective(columns: &[Vec<f64>], y: &[f64], c: &[f64]) -> f64 {
    let mut r: Vec<f64> = y.iter().map(|v| -v).collect();
    for (v, &cj) in columns.iter().zip(c) {
        r.iter_mut().zip(v).for_each(|(ri, vi)| *ri += cj * vi);
    }
    0.5 * dot(&r, &r) + c.iter().sum::<f64>()
}

/// Largest violation of the KKT conditions of the weight problem:
/// `c_j = 0` requires `<v_j, Vc - y> + 1 >= 0`, `c_j > 0` requires equality.
pub fn kkt_residual(columns: &[Vec<f64>], y: &[f64], c: &[f64]) -> f64 {
    let mut r: Vec<f64> = y.iter().map(|v| -v).collect();
    for (v, &cj) in columns.iter().zip(c) {
        r.iter_mut().zip(v).for_each(|(ri, vi)| *ri += cj * vi);
    }
    columns
        .iter()
        .zip(c)
        .map(|(v, &cj)| {
            let g = dot(v, &r) + 1.0;
            if cj < 0.0 {
                f64::INFINITY
            } else if cj > 0.0 {
                g.abs()
            } else {
                (-g).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

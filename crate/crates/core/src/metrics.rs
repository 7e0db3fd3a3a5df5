//! Recovery error between two atomic measures.

use crate::curve::dist;
use crate::measure::AtomicMeasurePair;

/// Minimum-cost perfect matching on a square cost matrix (row-major,
/// `n x n`). Returns `assignment[row] = column`.
///
/// Shortest augmenting path variant of the Hungarian method, `O(n^3)`.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    // 1-based potentials; column 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = cost[(r - 1) * n + col - 1] - u[r] - v[col];
                if reduced < minv[col] {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for col in 1..=n {
        if owner[col] > 0 {
            assignment[owner[col] - 1] = col - 1;
        }
    }
    assignment
}

/// Root-mean-square matched distance between the support points of
/// `recovered` and `truth` over `times`.
///
/// At each time the two point sets are padded to equal size; matching a real
/// point with padding costs `miss_penalty`. The matching minimizes the sum
/// of squared distances, and the mean runs over every matched pair at every
/// time.
pub fn assignment_rmse(recovered: &AtomicMeasurePair, truth: &AtomicMeasurePair, times: &[f64], miss_penalty: f64) -> f64 {
    let n = recovered.len().max(truth.len());
    if n == 0 || times.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for &t in times {
        let a: Vec<Vec<f64>> = recovered.atoms().iter().map(|x| x.curve().position_at(t)).collect();
        let b: Vec<Vec<f64>> = truth.atoms().iter().map(|x| x.curve().position_at(t)).collect();
        let mut cost = vec![miss_penalty * miss_penalty; n * n];
        for (i, p) in a.iter().enumerate() {
            for (j, q) in b.iter().enumerate() {
                cost[i * n + j] = dist(p, q).powi(2);
            }
        }
        total += hungarian(&cost, n).iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum::<f64>();
    }
    (total / (n * times.len()) as f64).sqrt()
}

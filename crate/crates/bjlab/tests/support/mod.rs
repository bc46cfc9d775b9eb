//! Shared test oracles: a dense symmetric eigensolver (classic cyclic
//! Jacobi rotations) and dense assembly of the arrowhead matrix. Test
//! scope only; the library itself never materializes the dense form.
#![allow(dead_code)]
#![allow(clippy::needless_range_loop)] // index style matches the rotation algebra

use bjlab::ModelParams;

/// Dense arrowhead matrix in the canonical ordering.
pub fn dense_arrowhead(params: &ModelParams) -> Vec<Vec<f64>> {
    let n = params.n();
    let h = params.hamiltonian();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = h.diag()[i];
    }
    for i in 1..n {
        a[0][i] = h.coupling();
        a[i][0] = h.coupling();
    }
    a
}

/// Eigenvalues and eigenvectors (as rows of the returned matrix) of a
/// symmetric matrix by cyclic Jacobi rotations, sorted ascending.
///
/// Foolproof for real symmetric input; plenty at the n <= 26 sizes used
/// in tests.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    const TOLERANCE: f64 = 1e-15;
    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q].abs();
            }
        }
        if off < TOLERANCE {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let s = theta.signum();
                    s / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[p][i];
                    let aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    // eigenvector j as a row: component on basis state i is v[i][order[j]]
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&j| (0..n).map(|i| v[i][j]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}

/// Bright-state weights `|<s|lambda_j>|^2` from a dense eigensolve.
pub fn dense_bright_weights(params: &ModelParams) -> (Vec<f64>, Vec<f64>) {
    let (eigenvalues, eigenvectors) = jacobi_eigen(dense_arrowhead(params));
    let weights = eigenvectors.iter().map(|vec| vec[0] * vec[0]).collect();
    (eigenvalues, weights)
}

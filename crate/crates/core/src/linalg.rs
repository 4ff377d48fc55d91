//! Cyclic Jacobi eigendecomposition for small-to-medium symmetric matrices.

use ndarray::{Array1, Array2};

const OFF_DIAGONAL_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, sorted by non-increasing eigenvalue.
/// Column `j` of `vectors` is the eigenvector for `values[j]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

/// Only the upper triangle is read; the input is assumed symmetric.
pub fn symmetric_eigen(matrix: &Array2<f64>) -> SymmetricEigen {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "matrix must be square");
    // Flat row-major copy, mirrored from the upper triangle.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            a[i * n + j] = matrix[[i, j]];
            a[j * n + i] = matrix[[i, j]];
        }
    }
    // Row r of `vt` is eigenvector r, so rotations touch two contiguous rows.
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }

    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = OFF_DIAGONAL_TOL * frob.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .map(|i| {
                a[i * n + i + 1..(i + 1) * n]
                    .iter()
                    .map(|x| 2.0 * x * x)
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[p * n + k];
                    let akq = a[q * n + k];
                    let new_p = c * akp - s * akq;
                    let new_q = s * akp + c * akq;
                    a[p * n + k] = new_p;
                    a[k * n + p] = new_p;
                    a[q * n + k] = new_q;
                    a[k * n + q] = new_q;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                let (head, tail) = vt.split_at_mut(q * n);
                let vp = &mut head[p * n..(p + 1) * n];
                let vq = &mut tail[..n];
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = Array1::from_iter(order.iter().map(|&i| a[i * n + i]));
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| vt[order[c] * n + r]);
    SymmetricEigen { values, vectors }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Small dense vector helpers and a symmetric eigensolver front-end.
//!
//! Dot products accumulate in `f64` regardless of storage precision.

use nalgebra::{DMatrix, SymmetricEigen};

pub fn dot_f32(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_f32(a: &[f32]) -> f64 {
    dot_f32(a, a).sqrt()
}

/// Returns `None` when the norm is below `eps`.
pub fn normalized(a: &[f64], eps: f64) -> Option<Vec<f64>> {
    let n = norm(a);
    (n >= eps).then(|| a.iter().map(|x| x / n).collect())
}

pub fn cosine_f32(a: &[f32], b: &[f32]) -> f64 {
    let d = dot_f32(a, b);
    let n = norm_f32(a) * norm_f32(b);
    if n == 0.0 {
        0.0
    } else {
        (d / n).clamp(-1.0, 1.0)
    }
}

pub fn to_f32(a: &[f64]) -> Vec<f32> {
    a.iter().map(|&x| x as f32).collect()
}

pub fn to_f64(a: &[f32]) -> Vec<f64> {
    a.iter().map(|&x| f64::from(x)).collect()
}

/// Eigen-decomposition of a symmetric matrix, sorted by descending eigenvalue.
///
/// Returns `(eigenvalues, eigenvectors)` where `eigenvectors[i]` pairs with
/// `eigenvalues[i]`. Each eigenvector's sign is fixed so that its
/// largest-magnitude entry is positive.
pub fn symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let pivot =
                v.iter().copied().fold(
                    0.0_f64,
                    |best, x| if x.abs() > best.abs() { x } else { best },
                );
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    (values, vectors)
}

/// Gram matrix `X Xᵀ` of row vectors.
pub fn gram(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = dot(&rows[i], &rows[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

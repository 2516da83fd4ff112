//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Spectral norm (largest singular value).
pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Largest pairwise Euclidean distance in a set of vectors.
pub fn max_pairwise_distance(vs: &[Vector]) -> f64 {
    let mut best = 0.0_f64;
    for (i, a) in vs.iter().enumerate() {
        for b in &vs[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

pub fn mean(vs: &[Vector]) -> Vector {
    let dim = vs.first().map_or(0, |v| v.len());
    let mut acc = Vector::zeros(dim);
    for v in vs {
        acc += v;
    }
    if !vs.is_empty() {
        acc /= vs.len() as f64;
    }
    acc
}

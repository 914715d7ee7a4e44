//! Accuracy metrics for arc posterior estimates.

use crate::error::{Error, Result};

/// Maximum absolute deviation `max_{i≠j} |p̂_ij - p_ij|` between two
/// row-major `n × n` matrices.
pub fn compute_mad(est: &[f64], reference: &[f64], n: usize) -> Result<f64> {
    if est.len() != n * n || reference.len() != n * n {
        return Err(Error::ShapeMismatch(format!(
            "matrices of {} and {} entries for n = {n}",
            est.len(),
            reference.len()
        )));
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                worst = worst.max((est[i * n + j] - reference[i * n + j]).abs());
            }
        }
    }
    Ok(worst)
}

/// Arc frequencies from a count matrix and a sample count.
pub fn frequencies(counts: &[u64], samples: u64) -> Vec<f64> {
    if samples == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / samples as f64).collect()
}

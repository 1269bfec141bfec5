use crate::error::{Error, Result};
use crate::math::sqrt;

/// Sample distance correlation of two equally long vectors.
///
/// Uses the double-centred pairwise distance matrices
/// `A_ij = a_ij - a_i. - a_.j + a_..` (and `B` likewise); the matrices are
/// never materialised, so memory stays linear in `n`.
pub fn distance_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let n = x.len();
    if n < 4 {
        return Err(Error::DegenerateInput("distance correlation needs at least 4 observations"));
    }
    let (row_x, grand_x) = row_means(x);
    let (row_y, grand_y) = row_means(y);

    let (mut cov, mut var_x, mut var_y) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let a = (x[i] - x[j]).abs() - row_x[i] - row_x[j] + grand_x;
            let b = (y[i] - y[j]).abs() - row_y[i] - row_y[j] + grand_y;
            cov += a * b;
            var_x += a * a;
            var_y += b * b;
        }
    }
    if var_x <= 0.0 || var_y <= 0.0 {
        return Err(Error::DegenerateInput("constant vector has zero distance variance"));
    }
    let r2 = cov / sqrt(var_x * var_y);
    Ok(sqrt(r2.max(0.0)).min(1.0))
}

fn row_means(v: &[f64]) -> (alloc::vec::Vec<f64>, f64) {
    let n = v.len() as f64;
    let rows: alloc::vec::Vec<f64> = v.iter().map(|&a| v.iter().map(|&b| (a - b).abs()).sum::<f64>() / n).collect();
    let grand = rows.iter().sum::<f64>() / n;
    (rows, grand)
}

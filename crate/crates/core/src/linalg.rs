//! Small dense linear-algebra helpers shared by the analysis modules.
//!
//! Numerical rank everywhere follows one convention: a singular value counts
//! as zero when it is at most `rel_tol * sigma_max`. Callers pick `rel_tol`
//! (usually `max(rows, cols) * f64::EPSILON`).

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

/// Default relative rank tolerance for a matrix with the given dimensions.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols).max(1) as f64 * f64::EPSILON
}

/// Singular values in non-increasing order. Empty for a matrix with a zero dimension.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = SVD::new(a.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

pub fn rank_from_singular_values(sv: &[f64], rel_tol: f64) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax <= 0.0 {
        return 0;
    }
    let thresh = rel_tol * smax;
    sv.iter().filter(|&&s| s > thresh).count()
}

pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    rank_from_singular_values(&singular_values(a), rel_tol)
}

/// Orthonormal basis (as columns) of the right null space of `a`.
///
/// Rows are zero-padded up to `ncols` before the SVD so the full set of right
/// singular vectors is available; zero rows leave the null space unchanged.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let rows = a.nrows().max(n);
    let mut padded = DMatrix::<f64>::zeros(rows, n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);

    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let smax = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    let thresh = rel_tol * smax;

    let null_rows: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax <= 0.0 || svd.singular_values[i] <= thresh)
        .collect();
    let mut basis = DMatrix::<f64>::zeros(n, null_rows.len());
    for (c, &i) in null_rows.iter().enumerate() {
        basis.set_column(c, &v_t.row(i).transpose());
    }
    basis
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn max_abs_diff_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Largest |a_ij - a_ji|.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    max_abs_diff(a, &a.transpose())
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eigen_extremes(a: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(symmetrize(a));
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let max = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Scale-aware positive-definiteness: `lambda_min > n * eps * lambda_max`.
pub fn is_positive_definite(a: &DMatrix<f64>) -> bool {
    if a.nrows() == 0 {
        return true;
    }
    let (min, max) = eigen_extremes(a);
    max > 0.0 && min > a.nrows() as f64 * f64::EPSILON * max
}

/// Column-major lower-triangle half-vectorization index of `(row, col)`, `row >= col`.
pub fn vech_index(n: usize, row: usize, col: usize) -> usize {
    debug_assert!(row >= col && row < n);
    col * n - col * col.saturating_sub(1) / 2 + (row - col)
}

/// Column-major lower-triangle half-vectorization.
pub fn vech(a: &DMatrix<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for c in 0..n {
        for r in c..n {
            out.push(a[(r, c)]);
        }
    }
    DVector::from_vec(out)
}

/// `(row, col)` pairs in half-vectorization order.
pub fn vech_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for c in 0..n {
        for r in c..n {
            out.push((r, c));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vech_index_matches_enumeration() {
        for n in 1..7 {
            for (i, (r, c)) in vech_pairs(n).into_iter().enumerate() {
                assert_eq!(vech_index(n, r, c), i, "n={n} r={r} c={c}");
            }
        }
    }

    #[test]
    fn null_space_of_wide_and_empty_matrices() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let ns = null_space(&a, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert!(ns.row(0).iter().all(|x| x.abs() < 1e-12));

        let empty = DMatrix::<f64>::zeros(0, 3);
        assert_eq!(null_space(&empty, 1e-12).ncols(), 3);
    }

    #[test]
    fn rank_of_zero_matrix_is_zero() {
        assert_eq!(numerical_rank(&DMatrix::zeros(3, 2), 1e-12), 0);
        assert_eq!(numerical_rank(&DMatrix::zeros(0, 2), 1e-12), 0);
    }

    #[test]
    fn pd_check_is_scale_aware() {
        let a = DMatrix::from_row_slice(2, 2, &[1e-8, 0.0, 0.0, 2e-8]);
        assert!(is_positive_definite(&a));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(!is_positive_definite(&b));
    }
}

//! Admissible rotations under a loading pattern.
//!
//! A rotation `R` keeps the fixed zeros of column `k` exactly when column `k`
//! of `R` lies in the null space of the rows of `Lambda` that are fixed to zero
//! in that column. Those rows carry a structural zero at position `k`, so
//! `e_k` is always in that null space; when the remaining `m - 1` columns of
//! the rows have full rank the null space is exactly `span(e_k)` and `R` is
//! forced to be diagonal. Working column by column this way is equivalent to
//! permuting `Lambda` into the block form
//!
//! ```text
//!   [ 0        Lambda^[k] ]
//!   [ l_(k)    Lambda_[k] ]
//! ```
//!
//! for each `k` without materializing the permutations.
//!
//! A diagonal `R` acts on the factor variances as `phi_kk -> phi_kk / r_kk^2`,
//! so the correlation metric leaves `r_kk = +-1`. A polarity truncation or a
//! fixed non-zero loading in column `k` then rules out `r_kk = -1`.

use nalgebra::{DMatrix, SVD};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FidentError, Result};
use crate::linalg;
use crate::model::{
    apply_rotation, CellSpec, FactorSolution, LoadingPattern, Metric, RotationMatrix,
    DEFAULT_VALUE_TOL,
};

/// Unit basis vectors closer than this to `e_k` (in `1 - |<v, e_k>|`) count as axis-aligned.
pub const AXIS_ALIGNMENT_TOL: f64 = 1e-8;

/// Largest `m` for which sign flips are enumerated explicitly.
pub const MAX_ENUMERATED_FACTORS: usize = 20;

#[derive(Debug, Clone, Copy)]
pub struct RotationOptions {
    /// Relative rank tolerance for null spaces; `None` uses `max(p, m) * eps`.
    pub rank_tol: Option<f64>,
    /// Absolute tolerance when checking that loadings realize the pattern.
    pub value_tol: f64,
}

impl Default for RotationOptions {
    fn default() -> Self {
        Self {
            rank_tol: None,
            value_tol: DEFAULT_VALUE_TOL,
        }
    }
}

/// Null space of the fixed-zero constraints of one column.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintNullSpace {
    pub column: usize,
    /// Orthonormal basis vectors as columns (m x dim).
    pub basis: DMatrix<f64>,
}

impl ConstraintNullSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `|<v, e_k>|` for a one-dimensional null space.
    pub fn alignment(&self) -> Option<f64> {
        (self.dim() == 1).then(|| self.basis[(self.column, 0)].abs())
    }

    pub fn is_axis_aligned(&self) -> bool {
        self.alignment()
            .is_some_and(|a| a >= 1.0 - AXIS_ALIGNMENT_TOL)
    }
}

/// Basis of `{v : Lambda_j . v = 0 for every row j fixed to zero in column k}`.
pub fn constraint_nullspace(
    lambda: &DMatrix<f64>,
    pat: &LoadingPattern,
    k: usize,
    rank_tol: Option<f64>,
) -> Result<ConstraintNullSpace> {
    if lambda.shape() != (pat.p(), pat.m()) {
        return Err(FidentError::Dimension(format!(
            "lambda is {:?}, pattern is {} x {}",
            lambda.shape(),
            pat.p(),
            pat.m()
        )));
    }
    if k >= pat.m() {
        return Err(FidentError::Dimension(format!("column {k} out of range")));
    }
    let rows = pat.zero_rows(k);
    let mut a = DMatrix::<f64>::zeros(rows.len(), pat.m());
    for (i, &j) in rows.iter().enumerate() {
        a.set_row(i, &lambda.row(j));
    }
    let rel_tol = rank_tol.unwrap_or_else(|| linalg::default_rank_tol(pat.p(), pat.m()));
    Ok(ConstraintNullSpace {
        column: k,
        basis: linalg::null_space(&a, rel_tol),
    })
}

/// How much of the diagonal scale `r_kk` survives in one column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnFreedom {
    /// The column of `R` is not pinned to the `k`th axis.
    Unpinned,
    /// Any non-zero scale.
    Scale,
    /// Only positive scales (a truncation forbids reversal).
    PositiveScale,
    /// `r_kk = +-1`.
    Sign,
    /// `r_kk = 1`.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDiagnostic {
    pub nullspace_dim: usize,
    /// `|<v, e_k>|` when the null space is one-dimensional.
    pub alignment: Option<f64>,
    pub freedom: ColumnFreedom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RotationStructure {
    /// No column is constrained at all.
    FullGroup,
    /// Some column's null space is larger than `span(e_k)`: a continuum of
    /// non-diagonal rotations remains.
    Underdetermined {
        columns: Vec<usize>,
    },
    /// `R` is diagonal and at least one diagonal entry varies continuously.
    /// `basis` holds the unit null-space vector of each column.
    DiagonalScalings {
        basis: Vec<Vec<f64>>,
    },
    /// `R = diag(s)` for the listed free sign columns; other columns are +1.
    SignFlips {
        columns: Vec<usize>,
    },
    Identity,
    /// No rotation is admissible. Cannot occur when the loadings realize the pattern.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleRotationSet {
    pub m: usize,
    pub structure: RotationStructure,
    pub columns: Vec<ColumnDiagnostic>,
}

impl AdmissibleRotationSet {
    /// Number of sign matrices when the structure is finite.
    pub fn finite_size(&self) -> Option<usize> {
        match &self.structure {
            RotationStructure::SignFlips { columns } => Some(1usize << columns.len()),
            RotationStructure::Identity => Some(1),
            RotationStructure::Empty => Some(0),
            _ => None,
        }
    }

    /// The sign vectors of a `SignFlips` or `Identity` structure, ordered by the
    /// binary encoding of the free columns (bit set means -1).
    pub fn sign_flip_members(&self) -> Vec<Vec<i8>> {
        match &self.structure {
            RotationStructure::SignFlips { columns } => (0..1usize << columns.len())
                .map(|code| {
                    let mut s = vec![1i8; self.m];
                    for (bit, &k) in columns.iter().enumerate() {
                        if code >> bit & 1 == 1 {
                            s[k] = -1;
                        }
                    }
                    s
                })
                .collect(),
            RotationStructure::Identity => vec![vec![1i8; self.m]],
            _ => Vec::new(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.structure == RotationStructure::Identity
    }
}

/// Whether negating column `k` keeps every truncated and fixed-value cell satisfied.
fn reversal_admissible(lambda: &DMatrix<f64>, pat: &LoadingPattern, k: usize, tol: f64) -> bool {
    (0..pat.p()).all(|j| match pat.cell(j, k) {
        c @ (CellSpec::TruncatedPositive(_)
        | CellSpec::TruncatedNegative(_)
        | CellSpec::FixedValue(_)) => c.admits(-lambda[(j, k)], tol),
        _ => true,
    })
}

/// The set of rotations `R` such that `(Lambda R, R^-1 Phi R^-T)` still realizes
/// the pattern and metric.
pub fn admissible_rotations(
    lambda: &DMatrix<f64>,
    pat: &LoadingPattern,
    metric: Metric,
    opts: RotationOptions,
) -> Result<AdmissibleRotationSet> {
    pat.check_realized(lambda, opts.value_tol)?;
    let m = pat.m();
    let spaces = (0..m)
        .map(|k| constraint_nullspace(lambda, pat, k, opts.rank_tol))
        .collect::<Result<Vec<_>>>()?;

    let mut columns = Vec::with_capacity(m);
    for (k, ns) in spaces.iter().enumerate() {
        let freedom = if !ns.is_axis_aligned() {
            ColumnFreedom::Unpinned
        } else {
            let has_fixed = (0..pat.p()).any(|j| matches!(pat.cell(j, k), CellSpec::FixedValue(_)));
            let reversible = reversal_admissible(lambda, pat, k, opts.value_tol);
            match (has_fixed, metric, reversible) {
                (true, _, _) => ColumnFreedom::Fixed,
                (false, Metric::Correlation, true) => ColumnFreedom::Sign,
                (false, Metric::Correlation, false) => ColumnFreedom::Fixed,
                (false, Metric::Covariance, true) => ColumnFreedom::Scale,
                (false, Metric::Covariance, false) => ColumnFreedom::PositiveScale,
            }
        };
        columns.push(ColumnDiagnostic {
            nullspace_dim: ns.dim(),
            alignment: ns.alignment(),
            freedom,
        });
    }

    let structure = if spaces.iter().any(|ns| ns.dim() == 0) {
        RotationStructure::Empty
    } else if spaces.iter().all(|ns| ns.dim() == m) && m > 1 {
        RotationStructure::FullGroup
    } else if columns.iter().any(|c| c.freedom == ColumnFreedom::Unpinned) {
        RotationStructure::Underdetermined {
            columns: (0..m)
                .filter(|&k| columns[k].freedom == ColumnFreedom::Unpinned)
                .collect(),
        }
    } else if columns.iter().any(|c| {
        matches!(
            c.freedom,
            ColumnFreedom::Scale | ColumnFreedom::PositiveScale
        )
    }) {
        RotationStructure::DiagonalScalings {
            basis: spaces
                .iter()
                .map(|ns| ns.basis.column(0).iter().copied().collect())
                .collect(),
        }
    } else {
        let sign_cols: Vec<usize> = (0..m)
            .filter(|&k| columns[k].freedom == ColumnFreedom::Sign)
            .collect();
        if sign_cols.is_empty() {
            RotationStructure::Identity
        } else {
            RotationStructure::SignFlips { columns: sign_cols }
        }
    };

    Ok(AdmissibleRotationSet {
        m,
        structure,
        columns,
    })
}

/// Least-squares recovery of `R` from `Lambda_dag = Lambda R`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationSolve {
    pub r: DMatrix<f64>,
    /// `max |Lambda R - Lambda_dag|`.
    pub residual: f64,
    pub in_orbit: bool,
}

impl RotationSolve {
    pub fn rotation(&self) -> Result<RotationMatrix> {
        RotationMatrix::new(self.r.clone())
    }

    /// The sign vector when `R` is `diag(+-1)` within `tol`.
    pub fn sign_label(&self, tol: f64) -> Option<Vec<i8>> {
        if !self.in_orbit {
            return None;
        }
        let m = self.r.nrows();
        let mut signs = Vec::with_capacity(m);
        for k in 0..m {
            let s: i8 = if self.r[(k, k)] < 0.0 { -1 } else { 1 };
            for l in 0..m {
                let target = if k == l { f64::from(s) } else { 0.0 };
                if (self.r[(k, l)] - target).abs() > tol {
                    return None;
                }
            }
            signs.push(s);
        }
        Some(signs)
    }
}

/// `R = (Lambda^T Lambda)^-1 Lambda^T Lambda_dag`, computed through the SVD of `Lambda`.
pub fn solve_rotation(
    lambda: &DMatrix<f64>,
    lambda_dag: &DMatrix<f64>,
    tol: f64,
) -> Result<RotationSolve> {
    if lambda.shape() != lambda_dag.shape() {
        return Err(FidentError::Dimension(format!(
            "lambda is {:?}, lambda_dag is {:?}",
            lambda.shape(),
            lambda_dag.shape()
        )));
    }
    let (p, m) = lambda.shape();
    let rel_tol = linalg::default_rank_tol(p, m);
    let svd = SVD::new(lambda.clone(), true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| smax > 0.0 && s > rel_tol * smax)
        .count();
    if rank < m {
        return Err(FidentError::Regularity(format!(
            "(a) rank(lambda) = {rank} < m = {m}"
        )));
    }
    let r = svd
        .solve(lambda_dag, rel_tol * smax)
        .map_err(|e| FidentError::InvalidInput(e.to_string()))?;
    let residual = linalg::max_abs_diff(&(lambda * &r), lambda_dag);
    Ok(RotationSolve {
        r,
        residual,
        in_orbit: residual <= tol,
    })
}

/// Sign vector for the binary code `code` (bit `k` set means column `k` is negated).
pub fn sign_vector(code: usize, m: usize) -> Vec<i8> {
    (0..m)
        .map(|k| if code >> k & 1 == 1 { -1 } else { 1 })
        .collect()
}

/// All `2^m` solutions `sol * diag(s)`, ordered by the binary code of `s`.
pub fn enumerate_sign_flips(sol: &FactorSolution) -> Result<Vec<FactorSolution>> {
    let m = sol.m();
    if m > MAX_ENUMERATED_FACTORS {
        return Err(FidentError::TooManyFactors(m));
    }
    (0..1usize << m)
        .into_par_iter()
        .map(|code| apply_rotation(sol, &RotationMatrix::signs(&sign_vector(code, m))))
        .collect()
}

/// The unique member of the sign-flip orbit of `sol` that satisfies every
/// truncation (and fixed value) of `pat`.
pub fn canonicalize(
    sol: &FactorSolution,
    pat: &LoadingPattern,
    tol: f64,
) -> Result<FactorSolution> {
    if (sol.p(), sol.m()) != (pat.p(), pat.m()) {
        return Err(FidentError::Dimension(format!(
            "solution is {} x {}, pattern is {} x {}",
            sol.p(),
            sol.m(),
            pat.p(),
            pat.m()
        )));
    }
    let c4 = crate::conditions::check_c4(pat);
    if let Some(col) = c4.truncated_rows.iter().position(Option::is_none) {
        return Err(FidentError::MissingTruncation(col));
    }
    let lambda = sol.lambda();
    for j in 0..pat.p() {
        for k in 0..pat.m() {
            let cell = pat.cell(j, k);
            if cell.is_fixed_zero() && !cell.admits(lambda[(j, k)], tol) {
                return Err(FidentError::PatternViolation {
                    row: j,
                    col: k,
                    reason: format!("expected fixed zero, found {}", lambda[(j, k)]),
                });
            }
            if cell.is_truncated() && lambda[(j, k)].abs() <= tol {
                return Err(FidentError::DegenerateTruncation { row: j, col: k });
            }
        }
    }

    let mut signs = vec![1i8; pat.m()];
    for (k, sign) in signs.iter_mut().enumerate() {
        let cells: Vec<(usize, CellSpec)> = (0..pat.p())
            .map(|j| (j, pat.cell(j, k)))
            .filter(|(_, c)| c.is_truncated() || matches!(c, CellSpec::FixedValue(_)))
            .collect();
        let ok = |s: f64| {
            cells
                .iter()
                .all(|&(j, c)| c.admits(s * lambda[(j, k)], tol))
        };
        match (ok(1.0), ok(-1.0)) {
            (true, false) => *sign = 1,
            (false, true) => *sign = -1,
            (true, true) => {
                let (row, _) = cells[0];
                return Err(FidentError::DegenerateTruncation { row, col: k });
            }
            (false, false) => {
                let offending = cells
                    .iter()
                    .find(|&&(j, c)| {
                        !c.admits(lambda[(j, k)], tol) && !c.admits(-lambda[(j, k)], tol)
                    })
                    .or_else(|| cells.iter().find(|&&(j, c)| !c.admits(lambda[(j, k)], tol)))
                    .map_or(0, |&(j, _)| j);
                return Err(FidentError::TruncationInfeasible {
                    row: offending,
                    col: k,
                });
            }
        }
    }
    apply_rotation(sol, &RotationMatrix::signs(&signs))
}

/// Sign vector of `sol` relative to `reference` when the two differ by a sign flip.
pub fn orbit_label(
    reference: &DMatrix<f64>,
    lambda: &DMatrix<f64>,
    residual_tol: f64,
    entry_tol: f64,
) -> Option<Vec<i8>> {
    solve_rotation(reference, lambda, residual_tol)
        .ok()
        .and_then(|s| s.sign_label(entry_tol))
}

//! Core domain types for the oblique factor model
//! `Sigma = Lambda Phi Lambda^T + Psi`, plus the two transformations that
//! leave the model class invariant: rotation (`Lambda -> Lambda R`,
//! `Phi -> R^-1 Phi R^-T`) and rescaling of observed units (`Lambda -> D Lambda`,
//! `Psi -> D Psi D`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FidentError, Result};
use crate::linalg;

/// Default absolute tolerance for value comparisons on unit-scaled inputs.
pub const DEFAULT_VALUE_TOL: f64 = 1e-10;

/// Specification of a single loading cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum CellSpec {
    Free,
    FixedZero,
    /// A fixed non-zero loading.
    FixedValue(f64),
    /// `lambda > threshold`; threshold 0 is strict positivity.
    TruncatedPositive(f64),
    /// `-lambda > threshold`; threshold 0 is strict negativity.
    TruncatedNegative(f64),
}

impl CellSpec {
    pub fn fixed(value: f64) -> Result<Self> {
        let cell = CellSpec::FixedValue(value);
        cell.validate().map_err(|reason| FidentError::InvalidCell {
            row: 0,
            col: 0,
            reason,
        })?;
        Ok(cell)
    }

    pub fn positive(threshold: f64) -> Result<Self> {
        let cell = CellSpec::TruncatedPositive(threshold);
        cell.validate().map_err(|reason| FidentError::InvalidCell {
            row: 0,
            col: 0,
            reason,
        })?;
        Ok(cell)
    }

    pub fn negative(threshold: f64) -> Result<Self> {
        let cell = CellSpec::TruncatedNegative(threshold);
        cell.validate().map_err(|reason| FidentError::InvalidCell {
            row: 0,
            col: 0,
            reason,
        })?;
        Ok(cell)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match *self {
            CellSpec::FixedValue(v) if !v.is_finite() => Err("fixed value must be finite".into()),
            CellSpec::FixedValue(0.0) => Err("fixed value must be nonzero".into()),
            CellSpec::TruncatedPositive(c) | CellSpec::TruncatedNegative(c)
                if !c.is_finite() || c < 0.0 =>
            {
                Err("truncation threshold must be finite and >= 0".into())
            }
            _ => Ok(()),
        }
    }

    pub fn is_fixed_zero(&self) -> bool {
        matches!(self, CellSpec::FixedZero)
    }

    pub fn is_truncated(&self) -> bool {
        matches!(
            self,
            CellSpec::TruncatedPositive(_) | CellSpec::TruncatedNegative(_)
        )
    }

    /// Free and truncated cells are estimated; the others are fixed.
    pub fn is_parameter(&self) -> bool {
        matches!(
            self,
            CellSpec::Free | CellSpec::TruncatedPositive(_) | CellSpec::TruncatedNegative(_)
        )
    }

    /// Whether `value` satisfies this cell within `tol` (fixed cells) or strictly (truncations).
    pub fn admits(&self, value: f64, tol: f64) -> bool {
        match *self {
            CellSpec::Free => value.is_finite(),
            CellSpec::FixedZero => value.abs() <= tol,
            CellSpec::FixedValue(v) => (value - v).abs() <= tol,
            CellSpec::TruncatedPositive(c) => value > c,
            CellSpec::TruncatedNegative(c) => -value > c,
        }
    }
}

/// The p x m grid of loading cell specifications, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadingPattern {
    p: usize,
    m: usize,
    cells: Vec<CellSpec>,
}

impl LoadingPattern {
    pub fn new(p: usize, m: usize, cells: Vec<CellSpec>) -> Result<Self> {
        if m == 0 || m > p {
            return Err(FidentError::Dimension(format!(
                "need 1 <= m <= p, got p = {p}, m = {m}"
            )));
        }
        if cells.len() != p * m {
            return Err(FidentError::Dimension(format!(
                "expected {} cells for a {p} x {m} pattern, got {}",
                p * m,
                cells.len()
            )));
        }
        for (i, cell) in cells.iter().enumerate() {
            cell.validate().map_err(|reason| FidentError::InvalidCell {
                row: i / m,
                col: i % m,
                reason,
            })?;
        }
        Ok(Self { p, m, cells })
    }

    pub fn from_rows(rows: Vec<Vec<CellSpec>>) -> Result<Self> {
        let p = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(FidentError::Dimension(format!(
                "row {bad} has {} cells, expected {m}",
                rows[bad].len()
            )));
        }
        Self::new(p, m, rows.into_iter().flatten().collect())
    }

    /// Every cell free.
    pub fn unrestricted(p: usize, m: usize) -> Result<Self> {
        Self::new(p, m, vec![CellSpec::Free; p * m])
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cell(&self, row: usize, col: usize) -> CellSpec {
        self.cells[row * self.m + col]
    }

    pub fn set(&mut self, row: usize, col: usize, cell: CellSpec) -> Result<()> {
        cell.validate()
            .map_err(|reason| FidentError::InvalidCell { row, col, reason })?;
        self.cells[row * self.m + col] = cell;
        Ok(())
    }

    pub fn cells(&self) -> &[CellSpec] {
        &self.cells
    }

    /// Rows with a fixed zero in column `col`, ascending.
    pub fn zero_rows(&self, col: usize) -> Vec<usize> {
        (0..self.p)
            .filter(|&j| self.cell(j, col).is_fixed_zero())
            .collect()
    }

    /// Replace every truncated cell by a free one.
    pub fn without_truncations(&self) -> Self {
        let cells = self
            .cells
            .iter()
            .map(|c| if c.is_truncated() { CellSpec::Free } else { *c })
            .collect();
        Self {
            p: self.p,
            m: self.m,
            cells,
        }
    }

    /// Check that `lambda` realizes the pattern; reports the first violated cell in row-major order.
    pub fn check_realized(&self, lambda: &DMatrix<f64>, tol: f64) -> Result<()> {
        if lambda.shape() != (self.p, self.m) {
            return Err(FidentError::Dimension(format!(
                "lambda is {:?}, pattern is {} x {}",
                lambda.shape(),
                self.p,
                self.m
            )));
        }
        for j in 0..self.p {
            for k in 0..self.m {
                let cell = self.cell(j, k);
                let value = lambda[(j, k)];
                if !cell.admits(value, tol) {
                    let reason = match cell {
                        CellSpec::FixedZero => format!("expected fixed zero, found {value}"),
                        CellSpec::FixedValue(v) => {
                            format!("expected fixed value {v}, found {value}")
                        }
                        CellSpec::TruncatedPositive(c) => format!("expected > {c}, found {value}"),
                        CellSpec::TruncatedNegative(c) => format!("expected < -{c}, found {value}"),
                        CellSpec::Free => format!("non-finite value {value}"),
                    };
                    return Err(FidentError::PatternViolation {
                        row: j,
                        col: k,
                        reason,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Metric in which factors are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `diag(Phi) = I` (factor correlation metric).
    Correlation,
    /// Free factor variances.
    Covariance,
}

/// A loading pattern together with the factor metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub pattern: LoadingPattern,
    pub metric: Metric,
}

impl ModelSpec {
    pub fn new(pattern: LoadingPattern, metric: Metric) -> Self {
        Self { pattern, metric }
    }

    pub fn p(&self) -> usize {
        self.pattern.p()
    }

    pub fn m(&self) -> usize {
        self.pattern.m()
    }
}

/// A numeric (Lambda, Phi, Psi) triple; Psi is kept as its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSolution {
    lambda: DMatrix<f64>,
    phi: DMatrix<f64>,
    psi: DVector<f64>,
}

impl FactorSolution {
    /// Validates dimensions, symmetry and positive definiteness of phi, and psi > 0.
    ///
    /// The rank of lambda is not required here; see `conditions::check_regularity`.
    pub fn new(lambda: DMatrix<f64>, phi: DMatrix<f64>, psi: DVector<f64>) -> Result<Self> {
        let (p, m) = lambda.shape();
        if m == 0 || p == 0 {
            return Err(FidentError::Dimension("lambda must be non-empty".into()));
        }
        if phi.shape() != (m, m) {
            return Err(FidentError::Dimension(format!(
                "phi is {:?}, expected {m} x {m}",
                phi.shape()
            )));
        }
        if psi.len() != p {
            return Err(FidentError::Dimension(format!(
                "psi has length {}, expected {p}",
                psi.len()
            )));
        }
        if lambda
            .iter()
            .chain(phi.iter())
            .chain(psi.iter())
            .any(|x| !x.is_finite())
        {
            return Err(FidentError::InvalidInput("non-finite entry".into()));
        }
        let asym = linalg::asymmetry(&phi);
        if asym > DEFAULT_VALUE_TOL * linalg::max_abs(&phi).max(1.0) {
            return Err(FidentError::Asymmetric(asym));
        }
        if !linalg::is_positive_definite(&phi) {
            let (min, _) = linalg::eigen_extremes(&phi);
            return Err(FidentError::NotPositiveDefinite(min));
        }
        if let Some(j) = psi.iter().position(|&v| v <= 0.0) {
            return Err(FidentError::Regularity(format!(
                "(b) psi_jj > 0 fails at j = {j} (psi = {})",
                psi[j]
            )));
        }
        Ok(Self { lambda, phi, psi })
    }

    pub fn from_rows(lambda: &[&[f64]], phi: &[&[f64]], psi: &[f64]) -> Result<Self> {
        let p = lambda.len();
        let m = lambda.first().map_or(0, |r| r.len());
        let lambda =
            DMatrix::from_row_iterator(p, m, lambda.iter().flat_map(|r| r.iter().copied()));
        let phi = DMatrix::from_row_iterator(m, m, phi.iter().flat_map(|r| r.iter().copied()));
        Self::new(lambda, phi, DVector::from_column_slice(psi))
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn psi(&self) -> &DVector<f64> {
        &self.psi
    }

    pub fn p(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn m(&self) -> usize {
        self.lambda.ncols()
    }

    /// Largest entrywise difference across all three components.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        linalg::max_abs_diff(&self.lambda, &other.lambda)
            .max(linalg::max_abs_diff(&self.phi, &other.phi))
            .max(linalg::max_abs_diff_vec(&self.psi, &other.psi))
    }
}

/// A nonsingular m x m matrix acting on a solution by rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix {
    r: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl RotationMatrix {
    /// Rejects non-square input and matrices that are numerically singular
    /// (full rank under the default scale-aware rank threshold).
    pub fn new(r: DMatrix<f64>) -> Result<Self> {
        if !r.is_square() || r.nrows() == 0 {
            return Err(FidentError::Dimension(format!(
                "rotation must be square and non-empty, got {:?}",
                r.shape()
            )));
        }
        let n = r.nrows();
        if r.iter().any(|x| !x.is_finite())
            || linalg::numerical_rank(&r, linalg::default_rank_tol(n, n)) < n
        {
            return Err(FidentError::SingularRotation);
        }
        let inverse = r
            .clone()
            .try_inverse()
            .ok_or(FidentError::SingularRotation)?;
        Ok(Self { r, inverse })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            r: DMatrix::identity(m, m),
            inverse: DMatrix::identity(m, m),
        }
    }

    /// `diag(signs)`, each sign being +1 or -1.
    pub fn signs(signs: &[i8]) -> Self {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            signs.len(),
            signs.iter().map(|&s| if s < 0 { -1.0 } else { 1.0 }),
        ));
        Self {
            r: d.clone(),
            inverse: d,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn m(&self) -> usize {
        self.r.nrows()
    }

    pub fn compose(&self, other: &RotationMatrix) -> Result<RotationMatrix> {
        RotationMatrix::new(&self.r * &other.r)
    }
}

/// `Sigma = Lambda Phi Lambda^T + diag(psi)`.
pub fn assemble_sigma(sol: &FactorSolution) -> DMatrix<f64> {
    let common = &sol.lambda * &sol.phi * sol.lambda.transpose();
    let mut sigma = linalg::symmetrize(&common);
    for j in 0..sol.p() {
        sigma[(j, j)] += sol.psi[j];
    }
    sigma
}

/// Assemble Sigma from raw components without validating them.
pub(crate) fn assemble_raw(
    lambda: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    psi: &DVector<f64>,
) -> DMatrix<f64> {
    let mut sigma = lambda * phi * lambda.transpose();
    for j in 0..lambda.nrows() {
        sigma[(j, j)] += psi[j];
    }
    sigma
}

/// `(Lambda R, R^-1 Phi R^-T, psi)`.
pub fn apply_rotation(sol: &FactorSolution, r: &RotationMatrix) -> Result<FactorSolution> {
    if r.m() != sol.m() {
        return Err(FidentError::Dimension(format!(
            "rotation is {0} x {0}, solution has m = {1}",
            r.m(),
            sol.m()
        )));
    }
    let lambda = &sol.lambda * r.matrix();
    let phi = linalg::symmetrize(&(r.inverse() * &sol.phi * r.inverse().transpose()));
    FactorSolution::new(lambda, phi, sol.psi.clone())
}

/// `(D Lambda, Phi, D Psi D)` for a positive diagonal `D = diag(d)`.
pub fn rescale_units(sol: &FactorSolution, d: &[f64]) -> Result<FactorSolution> {
    if d.len() != sol.p() {
        return Err(FidentError::Dimension(format!(
            "scale vector has length {}, expected {}",
            d.len(),
            sol.p()
        )));
    }
    if let Some(row) = d.iter().position(|&x| !x.is_finite() || x <= 0.0) {
        return Err(FidentError::NonPositiveScale { row, value: d[row] });
    }
    let mut lambda = sol.lambda.clone();
    let mut psi = sol.psi.clone();
    for (j, &dj) in d.iter().enumerate() {
        lambda.row_mut(j).scale_mut(dj);
        psi[j] *= dj * dj;
    }
    FactorSolution::new(lambda, sol.phi.clone(), psi)
}

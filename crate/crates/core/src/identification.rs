//! Local identification by the Jacobian rank rule.
//!
//! The free parameters are collected into a vector `theta`; the model is
//! locally identified at `theta` when the Jacobian of the distinct covariance
//! elements `vech(Sigma)` with respect to `theta` has full column rank.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conditions::{RankMode, GENERIC_DRAWS};
use crate::error::{FidentError, Result};
use crate::linalg;
use crate::model::{CellSpec, FactorSolution, Metric, ModelSpec};
use crate::sampling;

/// Truncated parameters closer than this to their bound are flagged.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// What a component of `theta` stands for. Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "matrix", rename_all = "snake_case")]
pub enum ParamKind {
    Lambda { row: usize, col: usize },
    Phi { row: usize, col: usize },
    Psi { index: usize },
}

impl std::fmt::Display for ParamKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            ParamKind::Lambda { row, col } => write!(f, "lambda[{},{}]", row + 1, col + 1),
            ParamKind::Phi { row, col } => write!(f, "phi[{},{}]", row + 1, col + 1),
            ParamKind::Psi { index } => write!(f, "psi[{}]", index + 1),
        }
    }
}

/// Ordering of the free parameters: loadings (row-major), then the lower
/// triangle of phi in column-major order (off-diagonal only in the
/// correlation metric), then psi.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterLayout {
    spec: ModelSpec,
    entries: Vec<ParamKind>,
    lambda_index: Vec<Option<usize>>,
    phi_index: Vec<Option<usize>>,
    psi_offset: usize,
}

impl ParameterLayout {
    pub fn new(spec: &ModelSpec) -> Self {
        let (p, m) = (spec.p(), spec.m());
        let mut entries = Vec::new();
        let mut lambda_index = vec![None; p * m];
        for j in 0..p {
            for k in 0..m {
                if spec.pattern.cell(j, k).is_parameter() {
                    lambda_index[j * m + k] = Some(entries.len());
                    entries.push(ParamKind::Lambda { row: j, col: k });
                }
            }
        }
        let mut phi_index = vec![None; m * m];
        for l in 0..m {
            for k in l..m {
                if k == l && spec.metric == Metric::Correlation {
                    continue;
                }
                phi_index[k * m + l] = Some(entries.len());
                phi_index[l * m + k] = Some(entries.len());
                entries.push(ParamKind::Phi { row: k, col: l });
            }
        }
        let psi_offset = entries.len();
        entries.extend((0..p).map(|index| ParamKind::Psi { index }));
        Self {
            spec: spec.clone(),
            entries,
            lambda_index,
            phi_index,
            psi_offset,
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Number of free parameters `t`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ParamKind] {
        &self.entries
    }

    pub fn lambda_index(&self, row: usize, col: usize) -> Option<usize> {
        self.lambda_index[row * self.spec.m() + col]
    }

    pub fn phi_index(&self, row: usize, col: usize) -> Option<usize> {
        self.phi_index[row * self.spec.m() + col]
    }

    pub fn psi_index(&self, index: usize) -> usize {
        self.psi_offset + index
    }

    /// The free parameters of `sol`; fixed cells of `sol` are ignored.
    pub fn pack(&self, sol: &FactorSolution) -> Result<DVector<f64>> {
        if (sol.p(), sol.m()) != (self.spec.p(), self.spec.m()) {
            return Err(FidentError::Dimension(format!(
                "solution is {} x {}, spec is {} x {}",
                sol.p(),
                sol.m(),
                self.spec.p(),
                self.spec.m()
            )));
        }
        Ok(DVector::from_iterator(
            self.len(),
            self.entries.iter().map(|e| match *e {
                ParamKind::Lambda { row, col } => sol.lambda()[(row, col)],
                ParamKind::Phi { row, col } => sol.phi()[(row, col)],
                ParamKind::Psi { index } => sol.psi()[index],
            }),
        ))
    }

    /// Raw `(Lambda, Phi, psi)` for `theta`, without validation.
    pub fn unpack_raw(
        &self,
        theta: &DVector<f64>,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>, DVector<f64>)> {
        self.check_len(theta)?;
        let (p, m) = (self.spec.p(), self.spec.m());
        let mut lambda = DMatrix::<f64>::zeros(p, m);
        for j in 0..p {
            for k in 0..m {
                lambda[(j, k)] = match self.lambda_index(j, k) {
                    Some(i) => theta[i],
                    None => match self.spec.pattern.cell(j, k) {
                        CellSpec::FixedValue(v) => v,
                        _ => 0.0,
                    },
                };
            }
        }
        let mut phi = DMatrix::<f64>::identity(m, m);
        for k in 0..m {
            for l in 0..m {
                if let Some(i) = self.phi_index(k, l) {
                    phi[(k, l)] = theta[i];
                }
            }
        }
        let psi = theta.rows(self.psi_offset, p).into_owned();
        Ok((lambda, phi, psi))
    }

    /// A validated solution for `theta`.
    pub fn unpack(&self, theta: &DVector<f64>) -> Result<FactorSolution> {
        let (lambda, phi, psi) = self.unpack_raw(theta)?;
        FactorSolution::new(lambda, phi, psi)
    }

    fn check_len(&self, theta: &DVector<f64>) -> Result<()> {
        if theta.len() != self.len() {
            return Err(FidentError::Dimension(format!(
                "theta has length {}, layout expects {}",
                theta.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Truncated parameters of `theta` within [`BOUNDARY_TOL`] of (or beyond) their bound.
    pub fn boundary_parameters(&self, theta: &DVector<f64>) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| match *e {
                ParamKind::Lambda { row, col } => match self.spec.pattern.cell(row, col) {
                    CellSpec::TruncatedPositive(c) if theta[i] - c <= BOUNDARY_TOL => Some(i),
                    CellSpec::TruncatedNegative(c) if -theta[i] - c <= BOUNDARY_TOL => Some(i),
                    _ => None,
                },
                _ => None,
            })
            .collect()
    }
}

/// Free parameter values tied to their layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub layout: ParameterLayout,
    pub values: DVector<f64>,
}

impl ParameterVector {
    pub fn from_solution(spec: &ModelSpec, sol: &FactorSolution) -> Result<Self> {
        let layout = ParameterLayout::new(spec);
        let values = layout.pack(sol)?;
        Ok(Self { layout, values })
    }
}

/// Jacobian of `vech(Sigma)` (column-major lower triangle) with respect to `theta`.
///
/// With `A = Lambda Phi`:
/// `d sigma_ab / d lambda_jk = [a = j] A_bk + [b = j] A_ak`,
/// `d sigma_ab / d phi_kl = lambda_ak lambda_bl + lambda_al lambda_bk` (`k != l`),
/// `d sigma_ab / d phi_kk = lambda_ak lambda_bk`,
/// `d sigma_ab / d psi_j = [a = b = j]`.
pub fn jacobian_sigma(layout: &ParameterLayout, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (lambda, phi, _) = layout.unpack_raw(theta)?;
    let p = layout.spec().p();
    let lp = &lambda * &phi;
    let pairs = linalg::vech_pairs(p);
    let mut jac = DMatrix::<f64>::zeros(pairs.len(), layout.len());
    for (col, kind) in layout.entries().iter().enumerate() {
        match *kind {
            ParamKind::Lambda { row: j, col: k } => {
                for (i, &(a, b)) in pairs.iter().enumerate() {
                    let mut v = 0.0;
                    if a == j {
                        v += lp[(b, k)];
                    }
                    if b == j {
                        v += lp[(a, k)];
                    }
                    jac[(i, col)] = v;
                }
            }
            ParamKind::Phi { row: k, col: l } => {
                for (i, &(a, b)) in pairs.iter().enumerate() {
                    jac[(i, col)] = if k == l {
                        lambda[(a, k)] * lambda[(b, k)]
                    } else {
                        lambda[(a, k)] * lambda[(b, l)] + lambda[(a, l)] * lambda[(b, k)]
                    };
                }
            }
            ParamKind::Psi { index } => {
                jac[(linalg::vech_index(p, index, index), col)] = 1.0;
            }
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationReport {
    /// Number of free parameters.
    pub t: usize,
    /// Number of distinct covariance elements, p(p+1)/2.
    pub s: usize,
    pub jacobian_rank: usize,
    /// `s - t`.
    pub df: i64,
    pub locally_identified: bool,
    pub mode: RankMode,
    /// Ranks of the individual random draws in generic mode.
    pub draw_ranks: Vec<usize>,
    /// Unit vectors spanning the Jacobian null space, in `theta` coordinates.
    pub null_directions: Vec<Vec<f64>>,
    pub parameter_labels: Vec<String>,
    /// Truncated parameters evaluated at (or beyond) their bound.
    pub boundary_parameters: Vec<usize>,
}

struct RankOutcome {
    rank: usize,
    null_directions: Vec<Vec<f64>>,
}

fn jacobian_rank(jac: &DMatrix<f64>, rel_tol: Option<f64>) -> RankOutcome {
    let (s, t) = jac.shape();
    let rel_tol = rel_tol.unwrap_or_else(|| linalg::default_rank_tol(s, t));
    let sv = if t == 0 {
        Vec::new()
    } else {
        linalg::singular_values(jac)
    };
    let rank = linalg::rank_from_singular_values(&sv, rel_tol);
    let null_directions = if rank < t {
        let basis = linalg::null_space(jac, rel_tol);
        basis
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect()
    } else {
        Vec::new()
    };
    RankOutcome {
        rank,
        null_directions,
    }
}

/// Jacobian rank rule at the given parameter values.
///
/// `tol` is relative to the largest singular value; it defaults to
/// `max(s, t) * eps`.
pub fn wald_rank(theta: &ParameterVector, tol: Option<f64>) -> Result<IdentificationReport> {
    let layout = &theta.layout;
    let jac = jacobian_sigma(layout, &theta.values)?;
    let outcome = jacobian_rank(&jac, tol);
    Ok(report(
        layout,
        outcome,
        RankMode::AtValues,
        Vec::new(),
        layout.boundary_parameters(&theta.values),
    ))
}

/// Jacobian rank rule on [`GENERIC_DRAWS`] random realizations of `spec`;
/// the reported rank is the largest rank attained.
pub fn wald_rank_generic(
    spec: &ModelSpec,
    seed: u64,
    tol: Option<f64>,
) -> Result<IdentificationReport> {
    let layout = ParameterLayout::new(spec);
    let mut rng = sampling::rng(seed);
    let mut best: Option<RankOutcome> = None;
    let mut draw_ranks = Vec::with_capacity(GENERIC_DRAWS);
    for _ in 0..GENERIC_DRAWS {
        let sol = sampling::generic_realization(spec, &mut rng)?;
        let theta = layout.pack(&sol)?;
        let outcome = jacobian_rank(&jacobian_sigma(&layout, &theta)?, tol);
        draw_ranks.push(outcome.rank);
        if best.as_ref().is_none_or(|b| outcome.rank > b.rank) {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one draw");
    Ok(report(
        &layout,
        best,
        RankMode::Generic,
        draw_ranks,
        Vec::new(),
    ))
}

fn report(
    layout: &ParameterLayout,
    outcome: RankOutcome,
    mode: RankMode,
    draw_ranks: Vec<usize>,
    boundary_parameters: Vec<usize>,
) -> IdentificationReport {
    let p = layout.spec().p();
    let s = p * (p + 1) / 2;
    let t = layout.len();
    IdentificationReport {
        t,
        s,
        jacobian_rank: outcome.rank,
        df: s as i64 - t as i64,
        locally_identified: outcome.rank == t,
        mode,
        draw_ranks,
        null_directions: outcome.null_directions,
        parameter_labels: layout.entries().iter().map(ToString::to_string).collect(),
        boundary_parameters,
    }
}

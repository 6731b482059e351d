//! Checks for the rotational-uniqueness conditions and the regularity
//! assumptions of the oblique factor model.
//!
//! * C1: at least `m - 1` fixed zeros in every column of the loadings.
//! * C2: for every column `k`, the rows holding those fixed zeros, with
//!   column `k` deleted, form a submatrix of rank `m - 1`.
//! * C3: `Phi` is a correlation matrix.
//! * C4: every column has one loading truncated to a single polarity.
//! * C*: C1 plus one fixed non-zero loading per column, in distinct rows.
//!
//! Indices in reports are zero-based.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FidentError, Result};
use crate::linalg;
use crate::model::{CellSpec, FactorSolution, LoadingPattern, Metric, ModelSpec};
use crate::sampling;

/// Number of random realizations used when a rank is evaluated generically.
pub const GENERIC_DRAWS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C1Report {
    pub zero_counts: Vec<usize>,
    pub required: usize,
    pub pass: bool,
}

/// Where a rank was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMode {
    /// At the supplied numeric loadings.
    AtValues,
    /// Maximum over random realizations of the free cells.
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C2Report {
    pub ranks: Vec<usize>,
    pub required: usize,
    pub mode: RankMode,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C3Report {
    pub max_deviation: f64,
    pub positive_definite: bool,
    pub pass: bool,
}

/// C3 within a full report: the metric decides whether it is imposed at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C3Status {
    pub imposed_by_metric: bool,
    pub numeric: Option<C3Report>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C4Report {
    /// First truncated row per column.
    pub truncated_rows: Vec<Option<usize>>,
    /// Truncated cells per column beyond the first.
    pub extra_truncations: Vec<usize>,
    /// `|lambda|` at the first truncated cell relative to the largest `|lambda|`
    /// in its column, when values are known.
    pub relative_magnitudes: Option<Vec<Option<f64>>>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CStarReport {
    pub c1_pass: bool,
    /// All rows holding a fixed non-zero value, per column.
    pub fixed_rows: Vec<Vec<usize>>,
    /// One selected row per column from a maximum matching.
    pub selected_rows: Vec<Option<usize>>,
    pub distinct_rows: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub lambda_rank: Option<usize>,
    /// (a) rank(Lambda) = m.
    pub rank_ok: Option<bool>,
    /// (b) every psi_jj > 0.
    pub psi_positive: Option<bool>,
    /// (c) (p - m)^2 - p - m.
    pub df: i64,
    pub df_ok: bool,
}

impl RegularityReport {
    pub fn pass(&self) -> bool {
        self.df_ok && self.rank_ok.unwrap_or(true) && self.psi_positive.unwrap_or(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictionCount {
    pub fixed_zero_count: usize,
    pub fixed_value_count: usize,
    pub truncation_count: usize,
    /// m(m - 1) fixed zeros demanded by C1.
    pub minimal_c1c4: usize,
    /// m^2 restrictions of the C2-C* pairing.
    pub minimal_c2cstar: usize,
}

/// A condition set whose joint satisfaction is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionSet {
    /// C1-C3: local rotational uniqueness (up to sign flips).
    C1C3,
    /// C1-C4: global rotational uniqueness in the correlation metric.
    C1C4,
    /// C2 with C*: global rotational uniqueness.
    C2CStar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub c1: C1Report,
    pub c2: C2Report,
    pub c3: C3Status,
    pub c4: C4Report,
    pub cstar: CStarReport,
    pub regularity: RegularityReport,
    pub restrictions: RestrictionCount,
}

impl ConditionReport {
    pub fn passes(&self, set: ConditionSet) -> bool {
        match set {
            ConditionSet::C1C3 => self.c1.pass && self.c2.pass && self.c3.pass,
            ConditionSet::C1C4 => self.c1.pass && self.c2.pass && self.c3.pass && self.c4.pass,
            ConditionSet::C2CStar => self.c2.pass && self.cstar.pass,
        }
    }

    /// Names of the conditions in `set` that fail, with the offending columns.
    pub fn failures(&self, set: ConditionSet) -> Vec<String> {
        let cols = |flags: Vec<bool>| -> String {
            flags
                .iter()
                .enumerate()
                .filter(|(_, ok)| !**ok)
                .map(|(k, _)| (k + 1).to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut out = Vec::new();
        let wants_c1 = matches!(set, ConditionSet::C1C3 | ConditionSet::C1C4);
        if wants_c1 && !self.c1.pass {
            let f = self
                .c1
                .zero_counts
                .iter()
                .map(|&z| z >= self.c1.required)
                .collect();
            out.push(format!("C1 fails in column(s) {}", cols(f)));
        }
        if !self.c2.pass {
            let f = self
                .c2
                .ranks
                .iter()
                .map(|&r| r == self.c2.required)
                .collect();
            out.push(format!("C2 fails in column(s) {}", cols(f)));
        }
        if wants_c1 && !self.c3.pass {
            out.push(if self.c3.imposed_by_metric {
                "C3 fails: phi is not a correlation matrix".to_string()
            } else {
                "C3 fails: covariance metric does not fix diag(phi) = I".to_string()
            });
        }
        if set == ConditionSet::C1C4 && !self.c4.pass {
            let f = self.c4.truncated_rows.iter().map(Option::is_some).collect();
            out.push(format!("C4 fails: no truncation in column(s) {}", cols(f)));
        }
        if set == ConditionSet::C2CStar && !self.cstar.pass {
            out.push("C* fails".to_string());
        }
        out
    }
}

/// Per-column fixed-zero counts against the requirement `m - 1`.
pub fn check_c1(pat: &LoadingPattern) -> C1Report {
    let required = pat.m() - 1;
    let zero_counts: Vec<usize> = (0..pat.m()).map(|k| pat.zero_rows(k).len()).collect();
    let pass = zero_counts.iter().all(|&z| z >= required);
    C1Report {
        zero_counts,
        required,
        pass,
    }
}

/// The rows of `lambda` with a fixed zero in column `k`, column `k` deleted.
pub fn extract_submatrix(lambda: &DMatrix<f64>, pat: &LoadingPattern, k: usize) -> DMatrix<f64> {
    let rows = pat.zero_rows(k);
    let m = pat.m();
    let mut sub = DMatrix::<f64>::zeros(rows.len(), m - 1);
    for (i, &j) in rows.iter().enumerate() {
        for (c, l) in (0..m).filter(|&l| l != k).enumerate() {
            sub[(i, c)] = lambda[(j, l)];
        }
    }
    sub
}

fn c2_ranks(lambda: &DMatrix<f64>, pat: &LoadingPattern, rel_tol: f64) -> Vec<usize> {
    (0..pat.m())
        .map(|k| linalg::numerical_rank(&extract_submatrix(lambda, pat, k), rel_tol))
        .collect()
}

/// Rank of every `Lambda^[k]` at the given values.
///
/// `tol` is relative to the largest singular value; it defaults to
/// `max(p, m) * eps`.
pub fn check_c2(lambda: &DMatrix<f64>, pat: &LoadingPattern, tol: Option<f64>) -> Result<C2Report> {
    if lambda.shape() != (pat.p(), pat.m()) {
        return Err(FidentError::Dimension(format!(
            "lambda is {:?}, pattern is {} x {}",
            lambda.shape(),
            pat.p(),
            pat.m()
        )));
    }
    let rel_tol = tol.unwrap_or_else(|| linalg::default_rank_tol(pat.p(), pat.m()));
    let ranks = c2_ranks(lambda, pat, rel_tol);
    Ok(c2_from_ranks(ranks, pat.m(), RankMode::AtValues))
}

/// C2 on generic realizations of the pattern: the per-column maximum rank
/// over [`GENERIC_DRAWS`] random fillings of the non-zero cells.
pub fn check_c2_generic(pat: &LoadingPattern, seed: u64, tol: Option<f64>) -> Result<C2Report> {
    let rel_tol = tol.unwrap_or_else(|| linalg::default_rank_tol(pat.p(), pat.m()));
    let spec = ModelSpec::new(pat.clone(), Metric::Correlation);
    let mut rng = sampling::rng(seed);
    let mut best = vec![0usize; pat.m()];
    for _ in 0..GENERIC_DRAWS {
        let sol = sampling::generic_realization(&spec, &mut rng)?;
        for (b, r) in best.iter_mut().zip(c2_ranks(sol.lambda(), pat, rel_tol)) {
            *b = (*b).max(r);
        }
    }
    Ok(c2_from_ranks(best, pat.m(), RankMode::Generic))
}

fn c2_from_ranks(ranks: Vec<usize>, m: usize, mode: RankMode) -> C2Report {
    let required = m - 1;
    let pass = ranks.iter().all(|&r| r == required);
    C2Report {
        ranks,
        required,
        mode,
        pass,
    }
}

/// `phi` must be a positive-definite matrix with unit diagonal (within `tol`).
pub fn check_c3(phi: &DMatrix<f64>, tol: f64) -> Result<C3Report> {
    if !phi.is_square() {
        return Err(FidentError::Dimension(format!("phi is {:?}", phi.shape())));
    }
    let asym = linalg::asymmetry(phi);
    if asym > tol.max(crate::model::DEFAULT_VALUE_TOL) * linalg::max_abs(phi).max(1.0) {
        return Err(FidentError::Asymmetric(asym));
    }
    let max_deviation = phi
        .diagonal()
        .iter()
        .fold(0.0_f64, |acc, v| acc.max((v - 1.0).abs()));
    let positive_definite = linalg::is_positive_definite(phi);
    Ok(C3Report {
        max_deviation,
        positive_definite,
        pass: positive_definite && max_deviation <= tol,
    })
}

/// At least one truncated cell per column. Truncated cells are never fixed
/// zeros by construction of [`CellSpec`].
pub fn check_c4(pat: &LoadingPattern) -> C4Report {
    let mut truncated_rows = Vec::with_capacity(pat.m());
    let mut extra_truncations = Vec::with_capacity(pat.m());
    for k in 0..pat.m() {
        let rows: Vec<usize> = (0..pat.p())
            .filter(|&j| pat.cell(j, k).is_truncated())
            .collect();
        truncated_rows.push(rows.first().copied());
        extra_truncations.push(rows.len().saturating_sub(1));
    }
    let pass = truncated_rows.iter().all(Option::is_some);
    C4Report {
        truncated_rows,
        extra_truncations,
        relative_magnitudes: None,
        pass,
    }
}

/// [`check_c4`] plus magnitude diagnostics for the truncated cells.
pub fn check_c4_with_values(pat: &LoadingPattern, lambda: &DMatrix<f64>) -> C4Report {
    let mut report = check_c4(pat);
    let mags = report
        .truncated_rows
        .iter()
        .enumerate()
        .map(|(k, row)| {
            row.map(|j| {
                let col_max = lambda.column(k).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                if col_max > 0.0 {
                    lambda[(j, k)].abs() / col_max
                } else {
                    0.0
                }
            })
        })
        .collect();
    report.relative_magnitudes = Some(mags);
    report
}

/// C1 plus a selection of one fixed non-zero cell per column in pairwise
/// distinct rows, found by maximum bipartite matching.
pub fn check_cstar(pat: &LoadingPattern) -> CStarReport {
    let c1_pass = check_c1(pat).pass;
    let fixed_rows: Vec<Vec<usize>> = (0..pat.m())
        .map(|k| {
            (0..pat.p())
                .filter(|&j| matches!(pat.cell(j, k), CellSpec::FixedValue(_)))
                .collect()
        })
        .collect();

    let mut row_owner: Vec<Option<usize>> = vec![None; pat.p()];
    for k in 0..pat.m() {
        let mut seen = vec![false; pat.p()];
        augment(k, &fixed_rows, &mut row_owner, &mut seen);
    }
    let mut selected_rows = vec![None; pat.m()];
    for (j, owner) in row_owner.iter().enumerate() {
        if let Some(k) = owner {
            selected_rows[*k] = Some(j);
        }
    }
    let every_column_has_fixed = fixed_rows.iter().all(|r| !r.is_empty());
    let distinct_rows = selected_rows.iter().all(Option::is_some);
    CStarReport {
        c1_pass,
        fixed_rows,
        selected_rows,
        distinct_rows,
        pass: c1_pass && every_column_has_fixed && distinct_rows,
    }
}

fn augment(
    col: usize,
    adj: &[Vec<usize>],
    row_owner: &mut [Option<usize>],
    seen: &mut [bool],
) -> bool {
    for &row in &adj[col] {
        if seen[row] {
            continue;
        }
        seen[row] = true;
        let free = match row_owner[row] {
            None => true,
            Some(other) => augment(other, adj, row_owner, seen),
        };
        if free {
            row_owner[row] = Some(col);
            return true;
        }
    }
    false
}

/// `(p - m)^2 - p - m`.
pub fn degrees_of_freedom(p: usize, m: usize) -> i64 {
    let (p, m) = (p as i64, m as i64);
    (p - m) * (p - m) - p - m
}

/// Regularity assumptions (a) rank(Lambda) = m, (b) psi > 0, (c) df >= 0.
pub fn check_regularity(sol: &FactorSolution, tol: Option<f64>) -> RegularityReport {
    let (p, m) = (sol.p(), sol.m());
    let rel_tol = tol.unwrap_or_else(|| linalg::default_rank_tol(p, m));
    let rank = linalg::numerical_rank(sol.lambda(), rel_tol);
    let df = degrees_of_freedom(p, m);
    RegularityReport {
        lambda_rank: Some(rank),
        rank_ok: Some(rank == m),
        psi_positive: Some(sol.psi().iter().all(|&v| v > 0.0)),
        df,
        df_ok: df >= 0,
    }
}

/// Regularity (c) only, for pattern-only specifications.
pub fn check_regularity_dims(p: usize, m: usize) -> RegularityReport {
    let df = degrees_of_freedom(p, m);
    RegularityReport {
        lambda_rank: None,
        rank_ok: None,
        psi_positive: None,
        df,
        df_ok: df >= 0,
    }
}

pub fn count_restrictions(pat: &LoadingPattern) -> RestrictionCount {
    let count = |f: fn(&CellSpec) -> bool| pat.cells().iter().filter(|c| f(c)).count();
    let m = pat.m();
    RestrictionCount {
        fixed_zero_count: count(CellSpec::is_fixed_zero),
        fixed_value_count: count(|c| matches!(c, CellSpec::FixedValue(_))),
        truncation_count: count(CellSpec::is_truncated),
        minimal_c1c4: m * (m - 1),
        minimal_c2cstar: m * m,
    }
}

/// Options for [`evaluate`].
#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    /// Relative rank tolerance; `None` uses `max(p, m) * eps`.
    pub rank_tol: Option<f64>,
    /// Absolute tolerance for the unit diagonal of phi.
    pub value_tol: f64,
    /// Seed for generic realizations when no numeric loadings are given.
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            rank_tol: None,
            value_tol: crate::model::DEFAULT_VALUE_TOL,
            seed: 0,
        }
    }
}

/// Every condition at once. Without a numeric solution C2 is evaluated
/// generically and C3 holds exactly when the metric imposes it.
pub fn evaluate(
    spec: &ModelSpec,
    sol: Option<&FactorSolution>,
    opts: CheckOptions,
) -> Result<ConditionReport> {
    let pat = &spec.pattern;
    let imposed = spec.metric == Metric::Correlation;
    let (c2, c3, c4, regularity) = match sol {
        Some(sol) => {
            if (sol.p(), sol.m()) != (pat.p(), pat.m()) {
                return Err(FidentError::Dimension(format!(
                    "solution is {} x {}, pattern is {} x {}",
                    sol.p(),
                    sol.m(),
                    pat.p(),
                    pat.m()
                )));
            }
            let numeric = check_c3(sol.phi(), opts.value_tol)?;
            let c3 = C3Status {
                imposed_by_metric: imposed,
                pass: imposed && numeric.pass,
                numeric: Some(numeric),
            };
            (
                check_c2(sol.lambda(), pat, opts.rank_tol)?,
                c3,
                check_c4_with_values(pat, sol.lambda()),
                check_regularity(sol, opts.rank_tol),
            )
        }
        None => (
            check_c2_generic(pat, opts.seed, opts.rank_tol)?,
            C3Status {
                imposed_by_metric: imposed,
                numeric: None,
                pass: imposed,
            },
            check_c4(pat),
            check_regularity_dims(pat.p(), pat.m()),
        ),
    };
    Ok(ConditionReport {
        c1: check_c1(pat),
        c2,
        c3,
        c4,
        cstar: check_cstar(pat),
        regularity,
        restrictions: count_restrictions(pat),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CellSpec::{FixedValue as V, FixedZero as Z, Free as F};

    const P0: CellSpec = CellSpec::TruncatedPositive(0.0);

    fn two_factor_pattern() -> LoadingPattern {
        LoadingPattern::from_rows(vec![
            vec![F, Z],
            vec![F, Z],
            vec![Z, F],
            vec![Z, F],
            vec![F, F],
        ])
        .unwrap()
    }

    fn two_factor_lambda() -> DMatrix<f64> {
        DMatrix::from_row_slice(5, 2, &[0.9, 0.0, 0.8, 0.0, 0.0, 0.7, 0.0, 0.6, 0.5, 0.4])
    }

    #[test]
    fn c1_counts() {
        let r = check_c1(&two_factor_pattern());
        assert_eq!(r.zero_counts, vec![2, 2]);
        assert!(r.pass);

        let single = LoadingPattern::unrestricted(3, 1).unwrap();
        assert!(check_c1(&single).pass);

        let r = check_c1(&LoadingPattern::unrestricted(3, 3).unwrap());
        assert_eq!(r.zero_counts, vec![0, 0, 0]);
        assert!(!r.pass);
    }

    #[test]
    fn submatrix_extraction() {
        let (lam, pat) = (two_factor_lambda(), two_factor_pattern());
        assert_eq!(
            extract_submatrix(&lam, &pat, 0),
            DMatrix::from_row_slice(2, 1, &[0.7, 0.6])
        );
        assert_eq!(
            extract_submatrix(&lam, &pat, 1),
            DMatrix::from_row_slice(2, 1, &[0.9, 0.8])
        );
        let open = LoadingPattern::unrestricted(5, 2).unwrap();
        assert_eq!(extract_submatrix(&lam, &open, 0).shape(), (0, 1));
    }

    #[test]
    fn c2_at_values() {
        let r = check_c2(&two_factor_lambda(), &two_factor_pattern(), None).unwrap();
        assert_eq!(r.ranks, vec![1, 1]);
        assert!(r.pass);

        let mut broken = two_factor_lambda();
        broken[(2, 1)] = 0.0;
        broken[(3, 1)] = 0.0;
        let r = check_c2(&broken, &two_factor_pattern(), None).unwrap();
        assert_eq!(r.ranks[0], 0);
        assert!(!r.pass);

        let single = LoadingPattern::unrestricted(3, 1).unwrap();
        let r = check_c2(&DMatrix::from_element(3, 1, 0.5), &single, None).unwrap();
        assert_eq!(r.ranks, vec![0]);
        assert!(r.pass);
    }

    #[test]
    fn c2_generic_labels_mode() {
        let r = check_c2_generic(&two_factor_pattern(), 3, None).unwrap();
        assert_eq!(r.mode, RankMode::Generic);
        assert!(r.pass);
    }

    #[test]
    fn c3_cases() {
        let phi = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let r = check_c3(&phi, 1e-10).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_deviation, 0.0);

        let phi = DMatrix::from_row_slice(2, 2, &[0.25, 0.15, 0.15, 1.0]);
        let r = check_c3(&phi, 1e-10).unwrap();
        assert!(!r.pass);
        assert!((r.max_deviation - 0.75).abs() < 1e-15);

        assert!(check_c3(&DMatrix::identity(3, 3), 1e-10).unwrap().pass);

        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.1, 1.0]);
        assert!(matches!(
            check_c3(&asym, 1e-10),
            Err(FidentError::Asymmetric(_))
        ));
    }

    #[test]
    fn c4_cases() {
        let mut pat = two_factor_pattern();
        pat.set(0, 0, P0).unwrap();
        pat.set(2, 1, P0).unwrap();
        let r = check_c4(&pat);
        assert!(r.pass);
        assert_eq!(r.truncated_rows, vec![Some(0), Some(2)]);

        let mut missing = pat.clone();
        missing.set(2, 1, F).unwrap();
        let r = check_c4(&missing);
        assert!(!r.pass);
        assert_eq!(r.truncated_rows[1], None);

        let mut thresh = pat.clone();
        thresh.set(0, 0, CellSpec::TruncatedNegative(0.2)).unwrap();
        assert!(check_c4(&thresh).pass);
    }

    #[test]
    fn cstar_cases() {
        let mut pat = two_factor_pattern();
        pat.set(0, 0, V(0.9)).unwrap();
        pat.set(2, 1, V(0.7)).unwrap();
        let r = check_cstar(&pat);
        assert!(r.pass);
        assert_eq!(r.selected_rows, vec![Some(0), Some(2)]);

        let same_row = LoadingPattern::from_rows(vec![
            vec![V(0.9), V(0.5)],
            vec![F, Z],
            vec![Z, F],
            vec![F, F],
        ])
        .unwrap();
        assert!(!check_cstar(&same_row).pass);

        assert!(!check_cstar(&two_factor_pattern()).pass);
    }

    #[test]
    fn cstar_needs_matching_not_first_choice() {
        // column 0 can use rows 0 or 1, column 1 only row 0
        let pat = LoadingPattern::from_rows(vec![
            vec![V(1.0), V(1.0)],
            vec![V(1.0), Z],
            vec![Z, F],
            vec![F, F],
        ])
        .unwrap();
        let r = check_cstar(&pat);
        assert!(r.pass, "{r:?}");
        assert_eq!(r.selected_rows, vec![Some(1), Some(0)]);
    }

    #[test]
    fn regularity_df() {
        assert_eq!(degrees_of_freedom(5, 2), 2);
        assert_eq!(degrees_of_freedom(4, 2), -2);
        let sol = FactorSolution::new(
            two_factor_lambda(),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]),
            nalgebra::DVector::from_vec(vec![0.2, 0.3, 0.4, 0.5, 0.6]),
        )
        .unwrap();
        let r = check_regularity(&sol, None);
        assert_eq!(r.lambda_rank, Some(2));
        assert!(r.pass());
        assert!(!check_regularity_dims(4, 2).df_ok);
    }

    #[test]
    fn restriction_counts() {
        let mut pat = two_factor_pattern();
        pat.set(0, 0, P0).unwrap();
        pat.set(2, 1, P0).unwrap();
        let r = count_restrictions(&pat);
        assert_eq!(r.fixed_zero_count, 4);
        assert_eq!(r.truncation_count, 2);
        assert_eq!(r.minimal_c1c4, 2);

        let r = count_restrictions(&LoadingPattern::unrestricted(6, 3).unwrap());
        assert_eq!((r.minimal_c1c4, r.minimal_c2cstar), (6, 9));
        let r = count_restrictions(&LoadingPattern::unrestricted(2, 1).unwrap());
        assert_eq!((r.minimal_c1c4, r.minimal_c2cstar), (0, 1));
    }

    #[test]
    fn evaluate_pattern_only_is_generic() {
        let mut pat = two_factor_pattern();
        pat.set(0, 0, P0).unwrap();
        pat.set(2, 1, P0).unwrap();
        let spec = ModelSpec::new(pat, Metric::Correlation);
        let rep = evaluate(&spec, None, CheckOptions::default()).unwrap();
        assert_eq!(rep.c2.mode, RankMode::Generic);
        assert!(rep.passes(ConditionSet::C1C4));
        assert!(!rep.passes(ConditionSet::C2CStar));
    }
}

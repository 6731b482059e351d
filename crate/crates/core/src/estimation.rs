//! Model generation and a multi-start least-squares fitter.
//!
//! The fitter minimizes `F(theta) = 1/2 ||S - Sigma(theta)||_F^2`. Without
//! polarity truncations every minimum comes with its `2^m` sign reflections,
//! so starts scattered over the parameter space land in several equivalent
//! modes; truncating one loading per column leaves a single mode.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{check_c4, degrees_of_freedom};
use crate::error::{FidentError, Result};
use crate::identification::{jacobian_sigma, ParamKind, ParameterLayout};
use crate::linalg;
use crate::model::{assemble_raw, CellSpec, FactorSolution, LoadingPattern, Metric, ModelSpec};
use crate::rotation::{canonicalize, orbit_label};
use crate::sampling::{self, random_sign, uniform};

/// What pins each column's sign in a generated pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// A `TruncatedPositive(0)` cell per column.
    Truncated,
    /// A fixed non-zero value per column, in distinct rows.
    FixedValue,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub p: usize,
    pub m: usize,
    pub seed: u64,
    /// Magnitude interval for free loadings.
    pub loading_range: (f64, f64),
    pub phi_offdiag_range: (f64, f64),
    pub psi_range: (f64, f64),
    /// Minimum magnitude of the anchor loading of each column.
    pub truncation_floor: f64,
    pub anchor: Anchor,
}

impl GeneratorConfig {
    pub fn new(p: usize, m: usize, seed: u64) -> Self {
        Self {
            p,
            m,
            seed,
            loading_range: (0.3, 0.9),
            phi_offdiag_range: (-0.5, 0.5),
            psi_range: (0.2, 0.8),
            truncation_floor: 0.3,
            anchor: Anchor::Truncated,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(FidentError::Config(what.to_string()));
        if self.m == 0 || self.p < self.m {
            return bad("need 1 <= m <= p");
        }
        let df = degrees_of_freedom(self.p, self.m);
        if df < 0 {
            return Err(FidentError::Regularity(format!(
                "(c) (p - m)^2 - p - m = {df} < 0 for p = {}, m = {}",
                self.p, self.m
            )));
        }
        let (lo, hi) = self.loading_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad("loading_range must satisfy 0 < lo <= hi");
        }
        let (lo, hi) = self.phi_offdiag_range;
        if !(lo <= hi && lo > -1.0 && hi < 1.0) {
            return bad("phi_offdiag_range must lie inside (-1, 1)");
        }
        let (lo, hi) = self.psi_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad("psi_range must satisfy 0 < lo <= hi");
        }
        if !(self.truncation_floor > 0.0 && self.truncation_floor.is_finite()) {
            return bad("truncation_floor must be positive");
        }
        Ok(())
    }
}

/// A random model satisfying C1-C4 (or C2-C* with [`Anchor::FixedValue`]) and
/// regularity (a)-(c).
///
/// `m` distinct marker rows are drawn; marker row `k` loads only on factor
/// `k`, so column `k` has fixed zeros on the other `m - 1` marker rows and
/// every `Lambda^[k]` is a scaled permutation of the identity. The marker
/// loading of each column carries the anchor. Remaining cells are free.
pub fn generate_model(cfg: &GeneratorConfig) -> Result<(LoadingPattern, FactorSolution)> {
    cfg.validate()?;
    let (p, m) = (cfg.p, cfg.m);
    let mut rng = sampling::rng(cfg.seed);

    let mut rows: Vec<usize> = (0..p).collect();
    rows.shuffle(&mut rng);
    let markers = &rows[..m];

    let mut cells = vec![CellSpec::Free; p * m];
    let mut lambda = DMatrix::<f64>::zeros(p, m);
    for j in 0..p {
        for k in 0..m {
            lambda[(j, k)] = random_sign(&mut rng) * uniform(&mut rng, cfg.loading_range);
        }
    }
    let anchor_range = (
        cfg.loading_range.0.max(cfg.truncation_floor),
        cfg.loading_range.1.max(cfg.truncation_floor),
    );
    for (k, &row) in markers.iter().enumerate() {
        for l in (0..m).filter(|&l| l != k) {
            cells[row * m + l] = CellSpec::FixedZero;
            lambda[(row, l)] = 0.0;
        }
        let value = uniform(&mut rng, anchor_range);
        lambda[(row, k)] = value;
        cells[row * m + k] = match cfg.anchor {
            Anchor::Truncated => CellSpec::TruncatedPositive(0.0),
            Anchor::FixedValue => CellSpec::FixedValue(value),
        };
    }
    let phi = sampling::random_correlation(m, cfg.phi_offdiag_range, &mut rng)?;
    let psi = DVector::from_iterator(p, (0..p).map(|_| uniform(&mut rng, cfg.psi_range)));
    Ok((
        LoadingPattern::new(p, m, cells)?,
        FactorSolution::new(lambda, phi, psi)?,
    ))
}

/// How truncated loadings are enforced during fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationHandling {
    /// Project each iterate onto the admissible side of every truncation.
    Project,
    /// Fit without the truncations, then map each result to its canonical
    /// sign-flip representative.
    Canonicalize,
}

/// Search direction used by the descent iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Negative gradient.
    Steepest,
    /// Negative gradient preconditioned by the damped Gauss-Newton matrix `J^T W J`.
    GaussNewton,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence when the max-norm of the (projected) gradient falls below this.
    pub grad_tol: f64,
    pub truncation: TruncationHandling,
    /// Distance kept from a truncation bound under projection.
    pub projection_floor: f64,
    /// Lower bound kept on every unique variance.
    pub psi_floor: f64,
    pub direction: Direction,
    /// Magnitude interval for random starting loadings.
    pub loading_range: (f64, f64),
    /// Explicit starting solution for start 0.
    pub start: Option<FactorSolution>,
    /// Tolerance for deciding that two results differ by a sign flip.
    pub orbit_tol: f64,
    /// A start is abandoned once `lambda_min / lambda_max` of phi stays below
    /// this for 50 consecutive iterations.
    pub collapse_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            grad_tol: 1e-9,
            truncation: TruncationHandling::Project,
            projection_floor: 1e-8,
            psi_floor: 1e-6,
            direction: Direction::GaussNewton,
            loading_range: (0.3, 0.9),
            start: None,
            orbit_tol: 1e-6,
            collapse_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub solution: FactorSolution,
    /// `1/2 ||S - Sigma||_F^2`.
    pub discrepancy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub start_index: usize,
    /// Sign vector relating this result to the best one, when they lie in one orbit.
    pub orbit_label: Option<Vec<i8>>,
    pub note: Option<String>,
}

/// Residual weights for `vech`: 1 on the diagonal, 2 off it, so that the
/// weighted sum of squares equals the full Frobenius norm.
fn vech_weights(p: usize) -> DVector<f64> {
    DVector::from_iterator(
        p * (p + 1) / 2,
        linalg::vech_pairs(p)
            .into_iter()
            .map(|(a, b)| if a == b { 1.0 } else { 2.0 }),
    )
}

/// Discrepancy objective over the free parameters of a layout.
pub struct Discrepancy<'a> {
    layout: &'a ParameterLayout,
    s_vech: DVector<f64>,
    weights: DVector<f64>,
}

impl<'a> Discrepancy<'a> {
    pub fn new(layout: &'a ParameterLayout, s_matrix: &DMatrix<f64>) -> Result<Self> {
        let p = layout.spec().p();
        if s_matrix.shape() != (p, p) {
            return Err(FidentError::Dimension(format!(
                "covariance is {:?}, expected {p} x {p}",
                s_matrix.shape()
            )));
        }
        Ok(Self {
            layout,
            s_vech: linalg::vech(s_matrix),
            weights: vech_weights(p),
        })
    }

    fn residual(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        let (lambda, phi, psi) = self.layout.unpack_raw(theta)?;
        Ok(&self.s_vech - linalg::vech(&assemble_raw(&lambda, &phi, &psi)))
    }

    pub fn value(&self, theta: &DVector<f64>) -> Result<f64> {
        let r = self.residual(theta)?;
        Ok(0.5 * r.component_mul(&r).dot(&self.weights))
    }

    /// `(F, grad F)`; the gradient is `-J^T W r`.
    pub fn value_and_gradient(&self, theta: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let r = self.residual(theta)?;
        let wr = r.component_mul(&self.weights);
        let jac = jacobian_sigma(self.layout, theta)?;
        Ok((0.5 * r.dot(&wr), -(jac.transpose() * wr)))
    }

    fn gauss_newton_matrix(&self, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
        let jac = jacobian_sigma(self.layout, theta)?;
        let mut wj = jac.clone();
        for (i, mut row) in wj.row_iter_mut().enumerate() {
            row *= self.weights[i];
        }
        Ok(jac.transpose() * wj)
    }

    /// `lambda_min / lambda_max` of phi at `theta`.
    fn phi_conditioning(&self, theta: &DVector<f64>) -> Result<f64> {
        let (_, phi, _) = self.layout.unpack_raw(theta)?;
        let (min, max) = linalg::eigen_extremes(&phi);
        Ok(if max > 0.0 { min / max } else { 0.0 })
    }

    /// Whether `theta` gives a positive-definite phi and positive psi.
    pub fn is_admissible(&self, theta: &DVector<f64>) -> bool {
        match self.layout.unpack_raw(theta) {
            Ok((_, phi, psi)) => psi.iter().all(|&v| v > 0.0) && linalg::is_positive_definite(&phi),
            Err(_) => false,
        }
    }
}

/// Per-parameter bounds: `Some((sign, bound))` means `sign * theta_i >= bound`.
/// Truncated loadings keep `floor` away from their threshold and unique
/// variances stay above `psi_floor`.
fn parameter_bounds(
    layout: &ParameterLayout,
    floor: f64,
    psi_floor: f64,
) -> Vec<Option<(f64, f64)>> {
    layout
        .entries()
        .iter()
        .map(|e| match *e {
            ParamKind::Lambda { row, col } => match layout.spec().pattern.cell(row, col) {
                CellSpec::TruncatedPositive(c) => Some((1.0, c + floor)),
                CellSpec::TruncatedNegative(c) => Some((-1.0, c + floor)),
                _ => None,
            },
            ParamKind::Psi { .. } => Some((1.0, psi_floor)),
            ParamKind::Phi { .. } => None,
        })
        .collect()
}

fn project(theta: &mut DVector<f64>, bounds: &[Option<(f64, f64)>]) {
    for (i, b) in bounds.iter().enumerate() {
        if let Some((sign, bound)) = *b {
            if sign * theta[i] < bound {
                theta[i] = sign * bound;
            }
        }
    }
}

/// Components within `eps` of their bound whose descent direction points outward.
fn active_set(
    theta: &DVector<f64>,
    grad: &DVector<f64>,
    bounds: &[Option<(f64, f64)>],
    eps: f64,
) -> Vec<bool> {
    bounds
        .iter()
        .enumerate()
        .map(|(i, b)| match *b {
            Some((sign, bound)) => {
                sign * theta[i] <= bound * (1.0 + 1e-12) + eps && sign * grad[i] > 0.0
            }
            None => false,
        })
        .collect()
}

/// Width of the near-active band: `min(1e-3, |theta - P(theta - grad)|_inf)`.
fn active_band(theta: &DVector<f64>, grad: &DVector<f64>, bounds: &[Option<(f64, f64)>]) -> f64 {
    let mut moved = theta - grad;
    project(&mut moved, bounds);
    (theta - moved).amax().min(1e-3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stop {
    Converged,
    MaxIter,
    LineSearch,
    Collapse,
}

struct Descent {
    theta: DVector<f64>,
    value: f64,
    stop: Stop,
    iterations: usize,
}

fn descend(
    obj: &Discrepancy<'_>,
    start: DVector<f64>,
    bounds: &[Option<(f64, f64)>],
    opts: &FitOptions,
) -> Result<Descent> {
    const ARMIJO: f64 = 1e-4;
    const MAX_HALVINGS: usize = 60;

    let mut theta = start;
    project(&mut theta, bounds);
    let (mut value, mut grad) = obj.value_and_gradient(&theta)?;
    let n = theta.len();

    const COLLAPSE_PATIENCE: usize = 50;
    let mut collapsing = 0;

    for iter in 0..opts.max_iter {
        let strict = active_set(&theta, &grad, bounds, 0.0);
        let pgrad_norm = grad
            .iter()
            .zip(&strict)
            .filter(|(_, a)| !**a)
            .fold(0.0_f64, |acc, (g, _)| acc.max(g.abs()));
        if pgrad_norm < opts.grad_tol {
            return Ok(Descent {
                theta,
                value,
                stop: Stop::Converged,
                iterations: iter,
            });
        }
        if obj.phi_conditioning(&theta)? < opts.collapse_tol {
            collapsing += 1;
        } else {
            collapsing = 0;
        }
        if collapsing >= COLLAPSE_PATIENCE {
            return Ok(Descent {
                theta,
                value,
                stop: Stop::Collapse,
                iterations: iter,
            });
        }

        let active = active_set(&theta, &grad, bounds, active_band(&theta, &grad, bounds));
        let mut reduced = grad.clone();
        for (i, &a) in active.iter().enumerate() {
            if a {
                reduced[i] = 0.0;
            }
        }
        let steepest = -&reduced;
        let mut candidates = Vec::with_capacity(2);
        if opts.direction == Direction::GaussNewton {
            let mut h = obj.gauss_newton_matrix(&theta)?;
            for (i, &a) in active.iter().enumerate() {
                if a {
                    h.row_mut(i).fill(0.0);
                    h.column_mut(i).fill(0.0);
                    h[(i, i)] = 1.0;
                }
            }
            let scale = (0..n).fold(0.0_f64, |acc, i| acc.max(h[(i, i)])).max(1.0);
            let mut mu = 1e-12 * scale;
            for _ in 0..8 {
                let mut damped = h.clone();
                for i in 0..n {
                    damped[(i, i)] += mu;
                }
                if let Some(chol) = damped.cholesky() {
                    candidates.push(chol.solve(&steepest));
                    break;
                }
                mu *= 100.0;
            }
        }
        candidates.push(steepest);

        let mut accepted: Option<(DVector<f64>, f64)> = None;
        for dir in &candidates {
            let mut step = 1.0;
            for _ in 0..MAX_HALVINGS {
                let mut trial = &theta + dir * step;
                project(&mut trial, bounds);
                if obj.is_admissible(&trial) {
                    let trial_value = obj.value(&trial)?;
                    let decrease = grad.dot(&(&trial - &theta));
                    if trial_value <= value + ARMIJO * decrease {
                        if accepted.as_ref().is_none_or(|(_, v)| trial_value < *v) {
                            accepted = Some((trial, trial_value));
                        }
                        break;
                    }
                }
                step *= 0.5;
            }
        }
        match accepted {
            Some((trial, _)) => {
                theta = trial;
                let (v, g) = obj.value_and_gradient(&theta)?;
                value = v;
                grad = g;
            }
            None => {
                return Ok(Descent {
                    theta,
                    value,
                    stop: Stop::LineSearch,
                    iterations: iter,
                });
            }
        }
    }
    let active = active_set(&theta, &grad, bounds, 0.0);
    let converged = grad
        .iter()
        .zip(&active)
        .all(|(g, a)| *a || g.abs() < opts.grad_tol);
    Ok(Descent {
        theta,
        value,
        stop: if converged {
            Stop::Converged
        } else {
            Stop::MaxIter
        },
        iterations: opts.max_iter,
    })
}

fn random_start(
    layout: &ParameterLayout,
    s_matrix: &DMatrix<f64>,
    opts: &FitOptions,
    respect_truncations: bool,
    rng: &mut ChaCha8Rng,
) -> Result<DVector<f64>> {
    let spec = layout.spec();
    let m = spec.m();
    let phi = sampling::random_correlation(m, (-0.3, 0.3), rng)?;
    let mut theta = DVector::<f64>::zeros(layout.len());
    for (i, e) in layout.entries().iter().enumerate() {
        theta[i] = match *e {
            ParamKind::Lambda { row, col } => {
                let mag = uniform(rng, opts.loading_range);
                match (spec.pattern.cell(row, col), respect_truncations) {
                    (CellSpec::TruncatedPositive(c), true) => c + mag,
                    (CellSpec::TruncatedNegative(c), true) => -(c + mag),
                    _ => random_sign(rng) * mag,
                }
            }
            ParamKind::Phi { row, col } => phi[(row, col)],
            ParamKind::Psi { index } => 0.5 * s_matrix[(index, index)],
        };
    }
    Ok(theta)
}

/// Fit `spec` to `s_matrix` from `starts` starting points.
///
/// Start `i` draws from its own generator seeded with `seed + i`; results are
/// sorted by discrepancy (ties by start index) and labelled with their sign
/// vector relative to the best result.
pub fn fit(
    s_matrix: &DMatrix<f64>,
    pat: &LoadingPattern,
    metric: Metric,
    starts: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<Vec<FitResult>> {
    if starts == 0 {
        return Err(FidentError::Config("starts must be at least 1".into()));
    }
    let p = pat.p();
    if s_matrix.shape() != (p, p) {
        return Err(FidentError::Dimension(format!(
            "covariance is {:?}, expected {p} x {p}",
            s_matrix.shape()
        )));
    }
    if linalg::asymmetry(s_matrix) > 1e-10 * linalg::max_abs(s_matrix).max(1.0) {
        return Err(FidentError::InvalidInput(
            "covariance matrix is not symmetric".into(),
        ));
    }
    if !linalg::is_positive_definite(s_matrix) {
        return Err(FidentError::InvalidInput(
            "covariance matrix is not positive definite".into(),
        ));
    }

    let canonicalize_after = opts.truncation == TruncationHandling::Canonicalize;
    let fit_pattern = if canonicalize_after {
        pat.without_truncations()
    } else {
        pat.clone()
    };
    let spec = ModelSpec::new(fit_pattern, metric);
    let layout = ParameterLayout::new(&spec);
    let obj = Discrepancy::new(&layout, s_matrix)?;
    let bounds = parameter_bounds(&layout, opts.projection_floor, opts.psi_floor);
    let can_canonicalize = canonicalize_after && check_c4(pat).pass;

    let mut results = (0..starts)
        .into_par_iter()
        .map(|start_index| -> Result<FitResult> {
            let mut rng = sampling::rng(seed.wrapping_add(start_index as u64));
            let start = match (&opts.start, start_index) {
                (Some(sol), 0) => layout.pack(sol)?,
                _ => random_start(&layout, s_matrix, opts, !canonicalize_after, &mut rng)?,
            };
            let run = descend(&obj, start, &bounds, opts)?;
            let mut solution = layout.unpack(&run.theta)?;
            let mut note = match run.stop {
                Stop::Converged => None,
                Stop::MaxIter => Some(format!(
                    "no convergence after {} iterations",
                    run.iterations
                )),
                Stop::LineSearch => Some("line search failed".to_string()),
                Stop::Collapse => Some(format!(
                    "factor collapse: phi nearly singular after {} iterations",
                    run.iterations
                )),
            };
            if can_canonicalize {
                match canonicalize(&solution, pat, crate::model::DEFAULT_VALUE_TOL) {
                    Ok(c) => solution = c,
                    Err(e) => note = Some(e.to_string()),
                }
            }
            Ok(FitResult {
                solution,
                discrepancy: run.value,
                converged: run.stop == Stop::Converged,
                iterations: run.iterations,
                start_index,
                orbit_label: None,
                note,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    results.sort_by(|a, b| {
        a.discrepancy
            .total_cmp(&b.discrepancy)
            .then(a.start_index.cmp(&b.start_index))
    });
    let reference = results[0].solution.lambda().clone();
    for r in &mut results {
        r.orbit_label = orbit_label(
            &reference,
            r.solution.lambda(),
            opts.orbit_tol,
            opts.orbit_tol,
        );
    }
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    /// Sign vector relative to the best result; `None` for results outside its orbit.
    pub label: Option<Vec<i8>>,
    pub count: usize,
    pub start_indices: Vec<usize>,
    pub min_discrepancy: f64,
    pub max_discrepancy: f64,
    /// Largest entrywise difference between two members of the mode.
    pub max_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCensus {
    pub modes: Vec<ModeSummary>,
    pub unconverged: usize,
    /// Largest entrywise difference between the first members of each pair of modes.
    pub between_mode_distances: Vec<Vec<f64>>,
}

impl ModeCensus {
    /// Number of distinct sign labels among converged in-orbit results.
    pub fn labelled_modes(&self) -> usize {
        self.modes.iter().filter(|m| m.label.is_some()).count()
    }
}

/// Group converged results by orbit label. Results outside the reference
/// orbit are clustered by proximity (`tol`, entrywise).
pub fn mode_census(results: &[FitResult], tol: f64) -> ModeCensus {
    let mut groups: Vec<(Option<Vec<i8>>, Vec<&FitResult>)> = Vec::new();
    for r in results.iter().filter(|r| r.converged) {
        let slot = groups
            .iter_mut()
            .find(|(label, members)| match (label, &r.orbit_label) {
                (Some(a), Some(b)) => a == b,
                (None, None) => r.solution.max_abs_diff(&members[0].solution) <= tol,
                _ => false,
            });
        match slot {
            Some((_, members)) => members.push(r),
            None => groups.push((r.orbit_label.clone(), vec![r])),
        }
    }
    let modes: Vec<ModeSummary> = groups
        .iter()
        .map(|(label, members)| {
            let mut spread = 0.0_f64;
            for (i, a) in members.iter().enumerate() {
                for b in &members[i + 1..] {
                    spread = spread.max(a.solution.max_abs_diff(&b.solution));
                }
            }
            ModeSummary {
                label: label.clone(),
                count: members.len(),
                start_indices: members.iter().map(|r| r.start_index).collect(),
                min_discrepancy: members
                    .iter()
                    .map(|r| r.discrepancy)
                    .fold(f64::INFINITY, f64::min),
                max_discrepancy: members
                    .iter()
                    .map(|r| r.discrepancy)
                    .fold(f64::NEG_INFINITY, f64::max),
                max_spread: spread,
            }
        })
        .collect();
    let between_mode_distances = groups
        .iter()
        .map(|(_, a)| {
            groups
                .iter()
                .map(|(_, b)| a[0].solution.max_abs_diff(&b[0].solution))
                .collect()
        })
        .collect();
    ModeCensus {
        modes,
        unconverged: results.iter().filter(|r| !r.converged).count(),
        between_mode_distances,
    }
}

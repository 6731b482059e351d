//! Seeded random draws shared by the generator, the generic-rank checks and
//! the multi-start fitter. All randomness flows through [`ChaCha8Rng`] so
//! runs are reproducible across platforms.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FidentError, Result};
use crate::linalg;
use crate::model::{CellSpec, FactorSolution, Metric, ModelSpec};

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn uniform(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..range.1)
    } else {
        range.0
    }
}

pub(crate) fn random_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Random correlation matrix with off-diagonals uniform on `range`,
/// rejection-sampled until positive definite.
pub fn random_correlation(
    m: usize,
    range: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>> {
    const MAX_TRIES: usize = 10_000;
    for _ in 0..MAX_TRIES {
        let mut phi = DMatrix::<f64>::identity(m, m);
        for k in 0..m {
            for l in 0..k {
                let v = uniform(rng, range);
                phi[(k, l)] = v;
                phi[(l, k)] = v;
            }
        }
        if linalg::is_positive_definite(&phi) {
            return Ok(phi);
        }
    }
    Err(FidentError::Config(format!(
        "no positive definite {m} x {m} correlation matrix found with off-diagonals in {range:?}"
    )))
}

/// A random numeric solution realizing `spec`: free loadings with random sign
/// and magnitude in [0.3, 0.9], truncated loadings on their admissible side,
/// fixed cells at their values. Phi is a random correlation matrix, rescaled
/// by random variances under the covariance metric.
pub fn generic_realization(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> Result<FactorSolution> {
    let (p, m) = (spec.p(), spec.m());
    let mut lambda = DMatrix::<f64>::zeros(p, m);
    for j in 0..p {
        for k in 0..m {
            lambda[(j, k)] = match spec.pattern.cell(j, k) {
                CellSpec::Free => random_sign(rng) * uniform(rng, (0.3, 0.9)),
                CellSpec::FixedZero => 0.0,
                CellSpec::FixedValue(v) => v,
                CellSpec::TruncatedPositive(c) => c + uniform(rng, (0.3, 0.9)),
                CellSpec::TruncatedNegative(c) => -(c + uniform(rng, (0.3, 0.9))),
            };
        }
    }
    let mut phi = random_correlation(m, (-0.5, 0.5), rng)?;
    if spec.metric == Metric::Covariance {
        let sd: Vec<f64> = (0..m).map(|_| uniform(rng, (0.7, 1.4))).collect();
        for k in 0..m {
            for l in 0..m {
                phi[(k, l)] *= sd[k] * sd[l];
            }
        }
    }
    let psi = DVector::from_iterator(p, (0..p).map(|_| uniform(rng, (0.2, 0.8))));
    FactorSolution::new(lambda, phi, psi)
}

#![allow(dead_code)]

use fident::estimation::{generate_model, Anchor, GeneratorConfig};
use fident::identification::ParameterLayout;
use fident::linalg::{singular_values, vech};
use fident::model::{assemble_sigma, FactorSolution, LoadingPattern, RotationMatrix};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Smallest `p` with non-negative degrees of freedom, for `m` up to 4.
pub fn min_p(m: usize) -> usize {
    [0, 3, 5, 6, 8][m]
}

/// `(p, m)` for an index, cycling through m = 1..=4 with p up to 10.
pub fn dims(index: u64) -> (usize, usize) {
    let m = (index % 4) as usize + 1;
    let span = 10 - min_p(m) + 1;
    (min_p(m) + (index / 4) as usize % span, m)
}

pub fn model(index: u64, anchor: Anchor) -> (LoadingPattern, FactorSolution) {
    let (p, m) = dims(index);
    let cfg = GeneratorConfig {
        anchor,
        ..GeneratorConfig::new(p, m, 1000 + index)
    };
    generate_model(&cfg).expect("generator accepts these dimensions")
}

pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = singular_values(a);
    sv[0] / sv[sv.len() - 1]
}

/// A random nonsingular `m x m` matrix with condition number at most `max_cond`.
pub fn random_rotation(m: usize, seed: u64, max_cond: f64) -> RotationMatrix {
    let mut rng = fident::sampling::rng(seed);
    loop {
        let r = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
        if condition_number(&r) <= max_cond {
            return RotationMatrix::new(r).expect("well conditioned");
        }
    }
}

/// Central-difference Jacobian of `vech(Sigma)`.
pub fn fd_jacobian(layout: &ParameterLayout, theta: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let sigma = |t: &DVector<f64>| {
        let sol = layout.unpack(t).expect("admissible point");
        vech(&assemble_sigma(&sol))
    };
    let s = sigma(theta).len();
    let mut jac = DMatrix::zeros(s, theta.len());
    for i in 0..theta.len() {
        let mut up = theta.clone();
        let mut down = theta.clone();
        up[i] += h;
        down[i] -= h;
        jac.set_column(i, &((sigma(&up) - sigma(&down)) / (2.0 * h)));
    }
    jac
}

/// `max |a - b| / max(1, max |b|)`.
pub fn relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

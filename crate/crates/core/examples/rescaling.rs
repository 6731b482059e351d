// Changing measurement units rescales rows of the loadings. Sign
// restrictions survive; fixed nonzero values do not.

use fident::model::DEFAULT_VALUE_TOL;
use fident::{assemble_sigma, rescale_units, CellSpec, FactorSolution, LoadingPattern};
use nalgebra::DMatrix;

use CellSpec::{FixedZero as Z, Free as F};

pub fn run() -> fident::Result<()> {
    let sol = FactorSolution::from_rows(
        &[
            &[0.9, 0.0],
            &[0.8, 0.0],
            &[0.0, 0.7],
            &[0.0, 0.6],
            &[0.5, 0.4],
        ],
        &[&[1.0, 0.3], &[0.3, 1.0]],
        &[0.2, 0.3, 0.4, 0.5, 0.6],
    )?;
    let d = [2.0, 1.0, 1.0, 1.0, 1.0];
    let scaled = rescale_units(&sol, &d)?;
    let dd = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&d));
    let drift = (assemble_sigma(&scaled) - &dd * assemble_sigma(&sol) * &dd).amax();
    println!(
        "lambda11 {} -> {}, sigma11 -> {:.2}, |sigma - D sigma D| = {drift:.1e}",
        sol.lambda()[(0, 0)],
        scaled.lambda()[(0, 0)],
        assemble_sigma(&scaled)[(0, 0)]
    );

    let truncated = LoadingPattern::from_rows(vec![
        vec![CellSpec::positive(0.0)?, Z],
        vec![F, Z],
        vec![Z, CellSpec::positive(0.0)?],
        vec![Z, F],
        vec![F, F],
    ])?;
    let fixed = LoadingPattern::from_rows(vec![
        vec![CellSpec::fixed(0.9)?, Z],
        vec![F, Z],
        vec![Z, CellSpec::fixed(0.7)?],
        vec![Z, F],
        vec![F, F],
    ])?;
    println!(
        "truncations hold after rescaling: {}",
        truncated
            .check_realized(scaled.lambda(), DEFAULT_VALUE_TOL)
            .is_ok()
    );
    match fixed.check_realized(scaled.lambda(), DEFAULT_VALUE_TOL) {
        Ok(()) => println!("fixed values hold after rescaling"),
        Err(e) => println!("fixed values broken: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fident::Result<()> {
    run()
}

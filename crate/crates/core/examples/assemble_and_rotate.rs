// Assemble the implied covariance and show that any nonsingular rotation
// leaves it unchanged.

use fident::{apply_rotation, assemble_sigma, FactorSolution, RotationMatrix};
use nalgebra::DMatrix;

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
    let sigma = assemble_sigma(&sol);
    println!("sigma = {sigma:.4}");

    let rotations = [
        (
            "reflect column 2",
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        ),
        (
            "stretch column 1",
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]),
        ),
        (
            "oblique mix",
            DMatrix::from_row_slice(2, 2, &[0.8, 0.3, -0.2, 1.1]),
        ),
    ];
    for (name, r) in rotations {
        let rotated = apply_rotation(&sol, &RotationMatrix::new(r)?)?;
        let drift = (assemble_sigma(&rotated) - &sigma).amax();
        println!(
            "{name:>18}: phi12 = {:+.4}, max |sigma change| = {drift:.2e}",
            rotated.phi()[(0, 1)]
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fident::Result<()> {
    run()
}

// Watch the admissible rotation set shrink as restrictions are added:
// rescalings, then sign flips, then the identity alone.

use fident::estimation::{generate_model, GeneratorConfig};
use fident::rotation::{admissible_rotations, RotationOptions, RotationStructure};
use fident::{CellSpec, Metric};

pub fn run() -> fident::Result<()> {
    let (pattern, sol) = generate_model(&GeneratorConfig::new(8, 3, 11))?;
    let bare = pattern.without_truncations();
    let stages = [
        ("zeros only, covariance metric", &bare, Metric::Covariance),
        ("zeros only, correlation metric", &bare, Metric::Correlation),
        ("zeros and truncations", &pattern, Metric::Correlation),
    ];
    for (name, pat, metric) in stages {
        let set = admissible_rotations(sol.lambda(), pat, metric, RotationOptions::default())?;
        let summary = match &set.structure {
            RotationStructure::DiagonalScalings { .. } => "diagonal rescalings".to_string(),
            RotationStructure::SignFlips { columns } => {
                format!("{} sign flips", 1 << columns.len())
            }
            other => format!("{other:?}"),
        };
        println!("{name:>32}: {summary}");
    }

    // Zeroing the loadings that feed one constraint submatrix breaks the rank condition.
    let mut lambda = sol.lambda().clone();
    let mut broken = bare.clone();
    for row in pattern.zero_rows(0) {
        for col in 1..pattern.m() {
            if !pattern.cell(row, col).is_fixed_zero() {
                lambda[(row, col)] = 0.0;
                broken.set(row, col, CellSpec::Free)?;
            }
        }
    }
    let set = admissible_rotations(
        &lambda,
        &broken,
        Metric::Correlation,
        RotationOptions::default(),
    )?;
    println!("{:>32}: {:?}", "rank condition broken", set.structure);
    Ok(())
}

#[allow(dead_code)]
fn main() -> fident::Result<()> {
    run()
}

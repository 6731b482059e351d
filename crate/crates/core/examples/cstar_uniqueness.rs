// One fixed nonzero loading per column, in distinct rows, pins the
// rotation even when factor variances are free.

use fident::conditions::{check_cstar, count_restrictions};
use fident::estimation::{generate_model, Anchor, GeneratorConfig};
use fident::rotation::{admissible_rotations, RotationOptions};
use fident::Metric;

pub fn run() -> fident::Result<()> {
    for m in 1..=4 {
        let cfg = GeneratorConfig {
            anchor: Anchor::FixedValue,
            ..GeneratorConfig::new(2 * m + 4, m, 100 + m as u64)
        };
        let (pattern, sol) = generate_model(&cfg)?;
        let cstar = check_cstar(&pattern);
        let set = admissible_rotations(
            sol.lambda(),
            &pattern,
            Metric::Covariance,
            RotationOptions::default(),
        )?;
        let counts = count_restrictions(&pattern);
        println!(
            "m = {m}: fixed-value rows {:?}, identity only = {}, restrictions {} (C1-C4 minimum {}, C2-C* minimum {})",
            cstar.selected_rows,
            set.is_identity(),
            counts.fixed_zero_count + counts.fixed_value_count,
            counts.minimal_c1c4,
            counts.minimal_c2cstar
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fident::Result<()> {
    run()
}

// Multi-start fitting of a population covariance. Without truncations
// the starts scatter over the sign-flip modes; with them only one remains.

use fident::estimation::{fit, generate_model, mode_census, FitOptions, GeneratorConfig};
use fident::{assemble_sigma, Metric};

pub fn run() -> fident::Result<()> {
    let (pattern, sol) = generate_model(&GeneratorConfig::new(6, 2, 4))?;
    let s = assemble_sigma(&sol);
    let opts = FitOptions::default();
    for (name, pat) in [
        ("off", pattern.without_truncations()),
        ("on", pattern.clone()),
    ] {
        let results = fit(&s, &pat, Metric::Correlation, 32, 9, &opts)?;
        let census = mode_census(&results, opts.orbit_tol);
        println!(
            "truncations {name}: {} labelled mode(s), {} unconverged",
            census.labelled_modes(),
            census.unconverged
        );
        for mode in census.modes.iter().filter(|m| m.label.is_some()) {
            println!(
                "  {:?} x{:<2} discrepancy <= {:.1e}, spread {:.1e}",
                mode.label.as_deref().unwrap_or_default(),
                mode.count,
                mode.max_discrepancy,
                mode.max_spread
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fident::Result<()> {
    run()
}

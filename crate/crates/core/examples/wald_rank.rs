// Local identification by the rank of the covariance Jacobian.

use fident::identification::{wald_rank, wald_rank_generic, ParameterVector};
use fident::{CellSpec, FactorSolution, LoadingPattern, Metric, ModelSpec};

use CellSpec::{FixedZero as Z, Free as F};

fn show(name: &str, r: &fident::identification::IdentificationReport) {
    println!(
        "{name}: t = {}, s = {}, rank = {}, df = {}, identified = {}",
        r.t, r.s, r.jacobian_rank, r.df, r.locally_identified
    );
    for d in &r.null_directions {
        let (i, v) = d
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("non-empty direction");
        println!(
            "  null direction led by {} ({v:+.3})",
            r.parameter_labels[i]
        );
    }
}

pub fn run() -> fident::Result<()> {
    let pattern = LoadingPattern::from_rows(vec![
        vec![F, Z],
        vec![F, Z],
        vec![Z, F],
        vec![Z, F],
        vec![F, F],
    ])?;
    let spec = ModelSpec::new(pattern.clone(), Metric::Correlation);
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
    show(
        "at values",
        &wald_rank(&ParameterVector::from_solution(&spec, &sol)?, None)?,
    );
    show("generic", &wald_rank_generic(&spec, 3, None)?);

    let broken = FactorSolution::from_rows(
        &[
            &[0.9, 0.0],
            &[0.8, 0.0],
            &[0.0, 0.0],
            &[0.0, 0.0],
            &[0.5, 0.4],
        ],
        &[&[1.0, 0.3], &[0.3, 1.0]],
        &[0.2, 0.3, 0.4, 0.5, 0.6],
    )?;
    show(
        "rank condition broken",
        &wald_rank(&ParameterVector::from_solution(&spec, &broken)?, None)?,
    );

    let free = ModelSpec::new(LoadingPattern::unrestricted(5, 2)?, Metric::Correlation);
    show("no fixed zeros", &wald_rank_generic(&free, 3, None)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> fident::Result<()> {
    run()
}

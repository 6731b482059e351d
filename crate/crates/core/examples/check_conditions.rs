// Evaluate the uniqueness conditions on a few variants of one pattern.

use fident::conditions::{evaluate, CheckOptions, ConditionSet};
use fident::{CellSpec, FactorSolution, LoadingPattern, Metric, ModelSpec};

use CellSpec::{FixedZero as Z, Free as F};

pub fn run() -> fident::Result<()> {
    let plus = CellSpec::positive(0.0)?;
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
    let full = LoadingPattern::from_rows(vec![
        vec![plus, Z],
        vec![F, Z],
        vec![Z, plus],
        vec![Z, F],
        vec![F, F],
    ])?;
    let mut one_truncation = full.clone();
    one_truncation.set(2, 1, F)?;

    let variants = [
        (
            "truncations in both columns",
            full.clone(),
            Metric::Correlation,
        ),
        (
            "truncation in column 1 only",
            one_truncation,
            Metric::Correlation,
        ),
        ("covariance metric", full, Metric::Covariance),
    ];
    for (name, pattern, metric) in variants {
        let report = evaluate(
            &ModelSpec::new(pattern, metric),
            Some(&sol),
            CheckOptions::default(),
        )?;
        println!("{name}");
        println!(
            "  C1-C3 {}  C1-C4 {}",
            report.passes(ConditionSet::C1C3),
            report.passes(ConditionSet::C1C4)
        );
        for failure in report.failures(ConditionSet::C1C4) {
            println!("  {failure}");
        }
        let counts = report.restrictions;
        println!(
            "  {} zeros, {} truncations (minimum {} zeros)",
            counts.fixed_zero_count, counts.truncation_count, counts.minimal_c1c4
        );
    }

    // Without numeric values the rank condition is checked on random draws.
    let bare = LoadingPattern::from_rows(vec![
        vec![F, Z],
        vec![F, Z],
        vec![Z, F],
        vec![Z, F],
        vec![F, F],
    ])?;
    let generic = evaluate(
        &ModelSpec::new(bare, Metric::Correlation),
        None,
        CheckOptions::default(),
    )?;
    println!(
        "generic ranks {:?}, C2 {}",
        generic.c2.ranks, generic.c2.pass
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> fident::Result<()> {
    run()
}

//! The acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;

use common::{condition_number, fd_jacobian, model, random_rotation, relative_error};
use fident::conditions::{check_c1, check_c2, check_c4, count_restrictions};
use fident::estimation::{fit, generate_model, mode_census, Anchor, FitOptions, GeneratorConfig};
use fident::identification::{jacobian_sigma, wald_rank, wald_rank_generic, ParameterVector};
use fident::model::DEFAULT_VALUE_TOL;
use fident::rotation::{
    admissible_rotations, constraint_nullspace, enumerate_sign_flips, solve_rotation,
    RotationOptions, RotationStructure,
};
use fident::{
    apply_rotation, assemble_sigma, rescale_units, CellSpec, FactorSolution, LoadingPattern,
    Metric, ModelSpec,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn sign_flip_orbits() -> Outcome {
    for index in 0..100 {
        let (pat, sol) = model(index, Anchor::Truncated);
        let m = sol.m();
        let orbit = enumerate_sign_flips(&sol).map_err(|e| e.to_string())?;
        ensure!(
            orbit.len() == 1 << m,
            "model {index}: {} members",
            orbit.len()
        );
        for (i, a) in orbit.iter().enumerate() {
            for b in &orbit[i + 1..] {
                ensure!(a.max_abs_diff(b) > 1e-6, "model {index}: duplicate members");
            }
        }
        let sigma = assemble_sigma(&sol);
        let drift = orbit
            .iter()
            .map(|s| (assemble_sigma(s) - &sigma).amax())
            .fold(0.0, f64::max);
        ensure!(drift < 1e-10, "model {index}: sigma drift {drift:e}");
        let passing = orbit
            .iter()
            .filter(|s| pat.check_realized(s.lambda(), DEFAULT_VALUE_TOL).is_ok())
            .count();
        ensure!(
            passing == 1,
            "model {index}: {passing} members satisfy the truncations"
        );
    }
    Ok("100 models, 2^m distinct members each, exactly one satisfies the truncations".into())
}

fn axis_angle(basis: &DMatrix<f64>, k: usize) -> f64 {
    let v = basis.column(0);
    let off: f64 = v
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .map(|(_, x)| x * x)
        .sum();
    off.sqrt().atan2(v[k].abs())
}

fn structural_progression() -> Outcome {
    let opts = RotationOptions::default();
    let mut worst_angle = 0.0_f64;
    for index in 0..100 {
        let (pat, sol) = model(index, Anchor::Truncated);
        let m = sol.m();
        let bare = pat.without_truncations();
        for k in 0..m {
            let ns =
                constraint_nullspace(sol.lambda(), &bare, k, None).map_err(|e| e.to_string())?;
            ensure!(
                ns.dim() == 1,
                "model {index} column {k}: null space dimension {}",
                ns.dim()
            );
            worst_angle = worst_angle.max(axis_angle(&ns.basis, k));
        }
        let run = |p: &LoadingPattern, metric| {
            admissible_rotations(sol.lambda(), p, metric, opts).map_err(|e| e.to_string())
        };
        let cov = run(&bare, Metric::Covariance)?;
        ensure!(
            matches!(cov.structure, RotationStructure::DiagonalScalings { .. }),
            "model {index}: covariance metric gives {:?}",
            cov.structure
        );
        let cor = run(&bare, Metric::Correlation)?;
        ensure!(
            matches!(cor.structure, RotationStructure::SignFlips { .. })
                && cor.finite_size() == Some(1 << m),
            "model {index}: correlation metric gives {:?}",
            cor.structure
        );
        let full = run(&pat, Metric::Correlation)?;
        ensure!(
            full.is_identity(),
            "model {index}: with truncations gives {:?}",
            full.structure
        );
    }
    ensure!(
        worst_angle <= 1e-8,
        "null space off axis by {worst_angle:e} rad"
    );
    Ok(format!(
        "100 models, rescalings -> 2^m sign flips -> identity, worst axis angle {worst_angle:.1e}"
    ))
}

fn fixed_value_uniqueness() -> Outcome {
    for index in 0..50 {
        let (pat, sol) = model(index, Anchor::FixedValue);
        let set = admissible_rotations(
            sol.lambda(),
            &pat,
            Metric::Covariance,
            RotationOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        ensure!(set.is_identity(), "model {index}: {:?}", set.structure);
    }
    Ok("50 fixed-value models are unique under the covariance metric".into())
}

fn rotation_recovery() -> Outcome {
    let mut worst = 0.0_f64;
    let mut smallest_residual = f64::INFINITY;
    for index in 0..200u64 {
        let (_, sol) = model(index, Anchor::Truncated);
        let r = random_rotation(sol.m(), 7_000 + index, 1e3);
        ensure!(condition_number(r.matrix()) <= 1e3, "ill-conditioned draw");
        let rotated = apply_rotation(&sol, &r).map_err(|e| e.to_string())?;
        let solve =
            solve_rotation(sol.lambda(), rotated.lambda(), 1e-8).map_err(|e| e.to_string())?;
        worst = worst.max((&solve.r - r.matrix()).amax());
        ensure!(
            solve.in_orbit,
            "index {index}: residual {:e}",
            solve.residual
        );

        let mut rng = fident::sampling::rng(index);
        let (j, k) = (rng.random_range(0..sol.p()), rng.random_range(0..sol.m()));
        let mut off = rotated.lambda().clone();
        off[(j, k)] += 0.5;
        let solve = solve_rotation(sol.lambda(), &off, 1e-8).map_err(|e| e.to_string())?;
        ensure!(
            !solve.in_orbit && solve.residual > 1e-3,
            "index {index}: perturbed residual {:e}",
            solve.residual
        );
        smallest_residual = smallest_residual.min(solve.residual);
    }
    ensure!(worst <= 1e-8, "worst entrywise error {worst:e}");
    Ok(format!("200 rotations, worst error {worst:.1e}, smallest perturbed residual {smallest_residual:.3}"))
}

fn reference_solution(lambda: [[f64; 2]; 5]) -> FactorSolution {
    let rows: Vec<&[f64]> = lambda.iter().map(|r| &r[..]).collect();
    FactorSolution::from_rows(
        &rows,
        &[&[1.0, 0.3], &[0.3, 1.0]],
        &[0.2, 0.3, 0.4, 0.5, 0.6],
    )
    .unwrap()
}

fn rank_rule() -> Outcome {
    use CellSpec::{FixedZero as Z, Free as F};
    let pattern = LoadingPattern::from_rows(vec![
        vec![F, Z],
        vec![F, Z],
        vec![Z, F],
        vec![Z, F],
        vec![F, F],
    ])
    .unwrap();
    let spec = ModelSpec::new(pattern, Metric::Correlation);
    let base = [[0.9, 0.0], [0.8, 0.0], [0.0, 0.7], [0.0, 0.6], [0.5, 0.4]];
    let theta = ParameterVector::from_solution(&spec, &reference_solution(base))
        .map_err(|e| e.to_string())?;
    let r = wald_rank(&theta, None).map_err(|e| e.to_string())?;
    ensure!(
        (r.t, r.s, r.jacobian_rank, r.df, r.locally_identified) == (12, 15, 12, 3, true),
        "reference model: t {} s {} rank {} df {}",
        r.t,
        r.s,
        r.jacobian_rank,
        r.df
    );

    let free = ModelSpec::new(
        LoadingPattern::unrestricted(5, 2).unwrap(),
        Metric::Correlation,
    );
    let r = wald_rank_generic(&free, 1, None).map_err(|e| e.to_string())?;
    ensure!(
        !r.locally_identified,
        "unrestricted pattern reported identified"
    );

    let mut broken = base;
    broken[2][1] = 0.0;
    broken[3][1] = 0.0;
    let theta = ParameterVector::from_solution(&spec, &reference_solution(broken))
        .map_err(|e| e.to_string())?;
    let r = wald_rank(&theta, None).map_err(|e| e.to_string())?;
    ensure!(
        r.jacobian_rank < r.t && !r.null_directions.is_empty(),
        "broken rank condition: rank {} of {}",
        r.jacobian_rank,
        r.t
    );
    let broken_rank = r.jacobian_rank;

    let mut worst = 0.0_f64;
    for index in 0..50 {
        let (pat, sol) = model(index, Anchor::Truncated);
        let metric = if index % 2 == 0 {
            Metric::Correlation
        } else {
            Metric::Covariance
        };
        let theta = ParameterVector::from_solution(&ModelSpec::new(pat, metric), &sol)
            .map_err(|e| e.to_string())?;
        let analytic = jacobian_sigma(&theta.layout, &theta.values).map_err(|e| e.to_string())?;
        worst = worst.max(relative_error(
            &fd_jacobian(&theta.layout, &theta.values, 1e-6),
            &analytic,
        ));
    }
    ensure!(worst < 1e-6, "Jacobian relative error {worst:e}");
    Ok(format!(
        "t=12 s=15 rank=12 df=3; unrestricted not identified; broken rank {broken_rank}; Jacobian error {worst:.1e}"
    ))
}

fn restriction_counts() -> Outcome {
    for m in 1..=6 {
        let p = (m + 1..)
            .find(|&p| fident::conditions::degrees_of_freedom(p, m) >= 0)
            .unwrap();
        let (pat, _) =
            generate_model(&GeneratorConfig::new(p, m, m as u64)).map_err(|e| e.to_string())?;
        let c = count_restrictions(&pat);
        ensure!(
            c.minimal_c1c4 == m * (m - 1),
            "m {m}: minimal C1-C4 {}",
            c.minimal_c1c4
        );
        ensure!(
            c.minimal_c2cstar == m * m,
            "m {m}: minimal C2-C* {}",
            c.minimal_c2cstar
        );
        ensure!(c.minimal_c2cstar - c.minimal_c1c4 == m, "m {m}: difference");
        ensure!(
            c.fixed_zero_count == m * (m - 1) && check_c1(&pat).pass,
            "m {m}: generator uses {} zeros",
            c.fixed_zero_count
        );
    }
    Ok("m = 1..6: m(m-1) vs m^2, difference m".into())
}

fn rescaling() -> Outcome {
    for index in 0..50u64 {
        let mut rng = fident::sampling::rng(9_000 + index);
        let (pat, sol) = model(index, Anchor::Truncated);
        let d: Vec<f64> = (0..sol.p()).map(|_| rng.random_range(0.2..5.0)).collect();
        let scaled = rescale_units(&sol, &d).map_err(|e| e.to_string())?;
        let dm = DMatrix::from_diagonal(&DVector::from_column_slice(&d));
        let drift = (assemble_sigma(&scaled) - &dm * assemble_sigma(&sol) * &dm).amax();
        ensure!(drift < 1e-10, "model {index}: drift {drift:e}");
        ensure!(
            pat.check_realized(scaled.lambda(), DEFAULT_VALUE_TOL)
                .is_ok(),
            "model {index}: pattern broken"
        );
        ensure!(
            check_c1(&pat).pass && check_c4(&pat).pass,
            "model {index}: C1/C4"
        );
        ensure!(
            check_c2(scaled.lambda(), &pat, None)
                .map_err(|e| e.to_string())?
                .pass,
            "model {index}: C2 lost"
        );

        let (fixed, fsol) = model(index, Anchor::FixedValue);
        let scaled = rescale_units(&fsol, &d).map_err(|e| e.to_string())?;
        for (j, &dj) in d.iter().enumerate() {
            for k in 0..fixed.m() {
                if let c @ CellSpec::FixedValue(_) = fixed.cell(j, k) {
                    let holds = c.admits(scaled.lambda()[(j, k)], DEFAULT_VALUE_TOL);
                    ensure!(
                        holds == (dj == 1.0),
                        "model {index}: fixed value at ({j}, {k}) with d = {dj}"
                    );
                }
            }
        }
    }
    Ok("50 models: D sigma D within 1e-10, truncation patterns kept, fixed values broken".into())
}

fn mode_collapse() -> Outcome {
    let mut pattern = LoadingPattern::from_rows(vec![
        vec![CellSpec::Free, CellSpec::FixedZero],
        vec![CellSpec::Free, CellSpec::FixedZero],
        vec![CellSpec::FixedZero, CellSpec::Free],
        vec![CellSpec::FixedZero, CellSpec::Free],
        vec![CellSpec::Free, CellSpec::Free],
    ])
    .unwrap();
    pattern.set(0, 0, CellSpec::TruncatedPositive(0.0)).unwrap();
    pattern.set(2, 1, CellSpec::TruncatedPositive(0.0)).unwrap();
    let s = assemble_sigma(&reference_solution([
        [0.9, 0.0],
        [0.8, 0.0],
        [0.0, 0.7],
        [0.0, 0.6],
        [0.5, 0.4],
    ]));
    let opts = FitOptions::default();

    let off = fit(
        &s,
        &pattern.without_truncations(),
        Metric::Correlation,
        32,
        1,
        &opts,
    )
    .map_err(|e| e.to_string())?;
    let census = mode_census(&off, opts.orbit_tol);
    let labelled: Vec<_> = census.modes.iter().filter(|m| m.label.is_some()).collect();
    ensure!(
        labelled.len() >= 2,
        "truncations off: {} labels",
        labelled.len()
    );
    let hi = labelled
        .iter()
        .map(|m| m.max_discrepancy)
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = labelled
        .iter()
        .map(|m| m.min_discrepancy)
        .fold(f64::INFINITY, f64::min);
    ensure!(
        hi - lo < 1e-8,
        "truncations off: discrepancies differ by {:e}",
        hi - lo
    );

    let on = fit(&s, &pattern, Metric::Correlation, 32, 1, &opts).map_err(|e| e.to_string())?;
    let census_on = mode_census(&on, opts.orbit_tol);
    let labelled_on: Vec<_> = census_on
        .modes
        .iter()
        .filter(|m| m.label.is_some())
        .collect();
    ensure!(
        labelled_on.len() == 1,
        "truncations on: {} labels",
        labelled_on.len()
    );
    ensure!(
        labelled_on[0].max_spread < 1e-5,
        "truncations on: spread {:e}",
        labelled_on[0].max_spread
    );
    Ok(format!(
        "off: {} labels within {:.1e}; on: 1 label x{}, spread {:.1e}",
        labelled.len(),
        hi - lo,
        labelled_on[0].count,
        labelled_on[0].max_spread
    ))
}

fn cli_contract() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_fident");
    let demo = || {
        Command::new(exe)
            .args(["demo", "--seed", "1", "--format", "json"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (demo()?, demo()?);
    ensure!(a.status.success() && b.status.success(), "demo failed");
    ensure!(a.stdout == b.stdout, "demo output differs between runs");

    let specs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/specs");
    for (file, expected) in [
        ("two_factor.json", 0),
        ("two_factor_one_truncation.json", 1),
        ("fixed_zero_value.json", 2),
    ] {
        let out = Command::new(exe)
            .arg("check")
            .arg(specs.join(file))
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            out.status.code() == Some(expected),
            "{file}: exit {:?}",
            out.status.code()
        );
    }
    Ok(format!(
        "demo identical across runs ({} bytes); exit codes 0/1/2",
        a.stdout.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("sign-flip orbits", sign_flip_orbits),
        ("structural progression", structural_progression),
        ("fixed-value uniqueness", fixed_value_uniqueness),
        ("rotation recovery", rotation_recovery),
        ("Jacobian rank rule", rank_rule),
        ("restriction counts", restriction_counts),
        ("rescaling", rescaling),
        ("mode collapse", mode_collapse),
        ("CLI determinism and exit codes", cli_contract),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail}) [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

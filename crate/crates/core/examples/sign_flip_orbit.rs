// Enumerate the sign-flip orbit of a solution, pick its canonical member
// and recover the rotation between two members.

use fident::estimation::{generate_model, GeneratorConfig};
use fident::model::DEFAULT_VALUE_TOL;
use fident::rotation::{canonicalize, enumerate_sign_flips, solve_rotation};
use fident::{apply_rotation, assemble_sigma, RotationMatrix};

pub fn run() -> fident::Result<()> {
    let (pattern, sol) = generate_model(&GeneratorConfig::new(7, 3, 5))?;
    let sigma = assemble_sigma(&sol);
    let orbit = enumerate_sign_flips(&sol)?;
    println!("{} members", orbit.len());
    for (code, member) in orbit.iter().enumerate() {
        let ok = pattern
            .check_realized(member.lambda(), DEFAULT_VALUE_TOL)
            .is_ok();
        let drift = (assemble_sigma(member) - &sigma).amax();
        println!("  code {code}: satisfies truncations {ok:5}, sigma drift {drift:.1e}");
    }

    let flipped = apply_rotation(&sol, &RotationMatrix::signs(&[-1, 1, -1]))?;
    let back = canonicalize(&flipped, &pattern, DEFAULT_VALUE_TOL)?;
    println!(
        "canonical member recovers the original: {}",
        back.max_abs_diff(&sol) < 1e-12
    );

    let solve = solve_rotation(sol.lambda(), flipped.lambda(), 1e-8)?;
    println!(
        "solved rotation label {:?}, residual {:.1e}",
        solve.sign_label(1e-8),
        solve.residual
    );

    let mut off_orbit = flipped.lambda().clone();
    off_orbit[(0, 0)] += 0.5;
    let solve = solve_rotation(sol.lambda(), &off_orbit, 1e-8)?;
    println!(
        "perturbed target in orbit: {}, residual {:.3}",
        solve.in_orbit, solve.residual
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> fident::Result<()> {
    run()
}

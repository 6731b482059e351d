// Load the bundled JSON specifications and summarize each one.

use std::path::Path;

use fident::conditions::{evaluate, CheckOptions, ConditionSet};
use fident::spec_file::{load, ModelSpecFile};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/specs");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.sort();
    for path in paths {
        let name = path
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        match load(&path) {
            Ok(loaded) => {
                let report = evaluate(
                    &loaded.spec,
                    loaded.solution.as_ref(),
                    CheckOptions::default(),
                )?;
                let text =
                    ModelSpecFile::from_model(&loaded.spec, loaded.solution.as_ref()).to_json();
                let again = ModelSpecFile::from_json(&text)?.validate()?;
                println!(
                    "{name:>28}: C1-C4 {:5} C2-C* {:5} round trip {}",
                    report.passes(ConditionSet::C1C4),
                    report.passes(ConditionSet::C2CStar),
                    again.spec == loaded.spec
                );
            }
            Err(e) => println!("{name:>28}: rejected ({e})"),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}

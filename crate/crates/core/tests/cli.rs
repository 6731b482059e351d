use std::path::PathBuf;
use std::process::Command;

use fident::cli::{CheckOutput, DemoOutput, FitOutput, RotationsOutput};
use fident::identification::IdentificationReport;

fn spec(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples/specs")
        .join(name)
}

fn fident(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fident"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn on(cmd: &str, file: &str, extra: &[&str]) -> (i32, String, String) {
    let path = spec(file);
    let mut args = vec![cmd, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    fident(&args)
}

fn temp_spec(name: &str, body: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn check_reports_each_outcome() {
    let (code, out, _) = on("check", "two_factor.json", &["--format", "json"]);
    assert_eq!(code, 0);
    let report: CheckOutput = serde_json::from_str(&out).unwrap();
    assert!(report.pass && report.report.c4.pass);

    let (code, out, _) = on("check", "two_factor_one_truncation.json", &[]);
    assert_eq!(code, 1);
    assert!(
        out.contains("C4 fails: no truncation in column(s) 2"),
        "{out}"
    );

    let (code, _, err) = on("check", "fixed_zero_value.json", &[]);
    assert_eq!(code, 2);
    assert!(
        err.contains("fixed value must be nonzero") && err.contains("line 6"),
        "{err}"
    );

    assert_eq!(on("check", "two_factor_fixed_values.json", &[]).0, 1);
    assert_eq!(
        on(
            "check",
            "two_factor_fixed_values.json",
            &["--set", "c2cstar"]
        )
        .0,
        0
    );
}

#[test]
fn rotations_describe_the_admissible_set() {
    let (code, out, _) = on("rotations", "two_factor_no_truncations.json", &[]);
    assert_eq!(code, 1);
    assert!(out.contains("SignFlips (4 members"), "{out}");

    let (code, out, _) = on("rotations", "two_factor.json", &[]);
    assert_eq!(code, 0);
    assert!(
        out.contains("Identity: globally rotationally unique"),
        "{out}"
    );

    let (code, out, _) = on("rotations", "c2_broken.json", &[]);
    assert_eq!(code, 1);
    assert!(
        out.contains("DiagonalScalings NOT established: column 1 null-space dimension 2"),
        "{out}"
    );

    let (code, out, _) = on(
        "rotations",
        "two_factor_no_truncations.json",
        &["--format", "json"],
    );
    assert_eq!(code, 1);
    let parsed: RotationsOutput = serde_json::from_str(&out).unwrap();
    assert_eq!(parsed.members.len(), 4);

    assert_eq!(on("rotations", "pattern_only.json", &[]).0, 2);
}

#[test]
fn identify_applies_the_rank_rule() {
    let (code, out, _) = on("identify", "two_factor.json", &["--format", "json"]);
    assert_eq!(code, 0);
    let r: IdentificationReport = serde_json::from_str(&out).unwrap();
    assert_eq!((r.t, r.s, r.jacobian_rank, r.df), (12, 15, 12, 3));

    assert_eq!(on("identify", "unrestricted.json", &[]).0, 1);
    let (code, out, _) = on("identify", "c2_broken.json", &[]);
    assert_eq!(code, 1);
    assert!(out.contains("null direction 1"), "{out}");

    let (code, out, _) = on("identify", "pattern_only.json", &["--generic"]);
    assert_eq!(code, 0);
    assert!(out.contains("generic"), "{out}");
}

#[test]
fn fit_reports_a_mode_census() {
    let (code, out, _) = on(
        "fit",
        "sample_cov.json",
        &["--truncate", "off", "--format", "json"],
    );
    assert_eq!(code, 0);
    let off: FitOutput = serde_json::from_str(&out).unwrap();
    assert!(off.census.labelled_modes() >= 2);

    let (code, out, _) = on(
        "fit",
        "two_factor.json",
        &["--format", "json", "--starts", "16"],
    );
    assert_eq!(code, 0);
    let fitted: FitOutput = serde_json::from_str(&out).unwrap();
    assert_eq!(fitted.census.labelled_modes(), 1);
    assert_eq!(fitted.results.len(), 16);

    assert_eq!(on("fit", "two_factor.json", &["--starts", "0"]).0, 2);
    assert_eq!(on("fit", "pattern_only.json", &[]).0, 2);

    let not_pd = temp_spec(
        "not_pd.json",
        r#"{"p": 3, "m": 1, "metric": "correlation",
            "lambda_pattern": [["free"], ["free"], ["free"]],
            "sample_cov": [[1, 2, 0], [2, 1, 0], [0, 0, 1]]}"#,
    );
    let (code, _, err) = fident(&["fit", not_pd.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("positive definite"), "{err}");
}

#[test]
fn malformed_input_exits_with_code_two() {
    let cases = [
        ("empty.json", ""),
        ("garbage.json", "{not json"),
        (
            "wrong_dims.json",
            r#"{"p": 2, "m": 1, "metric": "correlation", "lambda_pattern": [["free"]]}"#,
        ),
        (
            "bad_metric.json",
            r#"{"p": 1, "m": 1, "metric": "oblique", "lambda_pattern": [["free"]]}"#,
        ),
        (
            "bad_cell.json",
            r#"{"p": 1, "m": 1, "metric": "correlation", "lambda_pattern": [["x"]]}"#,
        ),
        (
            "m_zero.json",
            r#"{"p": 1, "m": 0, "metric": "correlation", "lambda_pattern": [[]]}"#,
        ),
        (
            "unrealized.json",
            r#"{"p": 1, "m": 1, "metric": "correlation", "lambda_pattern": [[{"trunc": "-"}]],
                "lambda": [[0.5]], "phi": [[1]], "psi": [0.5]}"#,
        ),
    ];
    for (name, body) in cases {
        let path = temp_spec(name, body);
        for cmd in ["check", "rotations", "identify", "fit"] {
            let (code, _, err) = fident(&[cmd, path.to_str().unwrap()]);
            assert_eq!(code, 2, "{cmd} {name}: {err}");
            assert!(err.starts_with("error:"), "{cmd} {name}: {err}");
        }
    }
    assert_eq!(fident(&["check"]).0, 2);
    assert_eq!(fident(&["check", "/no/such/file.json"]).0, 2);
    assert_eq!(
        fident(&[
            "check",
            spec("two_factor.json").to_str().unwrap(),
            "--tol",
            "-1"
        ])
        .0,
        2
    );
    let (code, out, _) = fident(&["check", "/no/such/file.json", "--format", "json"]);
    assert_eq!(code, 2);
    assert!(serde_json::from_str::<serde_json::Value>(&out).unwrap()["error"].is_string());
}

fn max_significant_digits(v: &serde_json::Value) -> usize {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            let text = n.to_string();
            let mantissa = text.split(['e', 'E']).next().unwrap();
            mantissa
                .chars()
                .filter(char::is_ascii_digit)
                .collect::<String>()
                .trim_start_matches('0')
                .len()
        }
        serde_json::Value::Array(items) => {
            items.iter().map(max_significant_digits).max().unwrap_or(0)
        }
        serde_json::Value::Object(map) => {
            map.values().map(max_significant_digits).max().unwrap_or(0)
        }
        _ => 0,
    }
}

#[test]
fn demo_json_round_trips_with_twelve_digits() {
    let (code, out, _) = fident(&["demo", "--seed", "7", "--format", "json"]);
    assert_eq!(code, 0);
    let demo: DemoOutput = serde_json::from_str(&out).unwrap();
    assert!(demo.check.pass);
    assert!(demo.rotations.correlation_with_truncations.is_identity());
    assert_eq!(
        demo.rotations.correlation_without_truncations.finite_size(),
        Some(4)
    );
    assert!(demo.identify.locally_identified);
    assert_eq!(demo.fit_with_truncations.census.labelled_modes(), 1);

    let again = fident::cli::to_json(&demo);
    assert_eq!(again, out);
    let value: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(
        max_significant_digits(&value) <= 12,
        "{}",
        max_significant_digits(&value)
    );

    let (code, text, _) = fident(&["demo", "--seed", "7"]);
    assert_eq!(code, 0);
    assert!(text.contains("== rotations, correlation metric, with truncations"));
}

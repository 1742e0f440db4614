//! Config parsing, validation and hashing.

use ffns::config::{parse_config, CHECK_NAMES};
use ffns::error::FfnsError;

const BASE: &str = r#"
[scenario]
name = "base"
dimension = 2

[grid]
half_width = 32.0
points = 256

[time]
horizon = 2.0

[force]
kind = "gaussian"
width = 1.2
amplitude = [2.9e-4, 0.0]
"#;

fn invalid(text: &str) -> Vec<String> {
    match parse_config(text) {
        Err(FfnsError::ConfigInvalid(v)) => v,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn defaults_fill_missing_sections() {
    let c = parse_config(BASE).unwrap();
    assert_eq!(c.raw.time.slices_per_unit, 64);
    assert_eq!(c.raw.solver.tol, 1e-10);
    assert_eq!(c.checks(), CHECK_NAMES.to_vec());
    let ts = c.sweep_times();
    assert_eq!((ts[0], *ts.last().unwrap(), ts.len()), (1.0, 2.0, 9));
    assert_eq!(c.decay_pairs().len(), 3);
}

#[test]
fn every_violation_is_reported() {
    let text = BASE
        .replace("points = 256", "points = 255")
        .replace("horizon = 2.0", "horizon = -1.0");
    let v = invalid(&text);
    assert!(v.len() >= 2, "{v:?}");
}

#[test]
fn unknown_check_and_key_are_rejected() {
    let v = invalid(&format!(
        "{BASE}\n[checks]\nrun = [\"kernel\", \"bogus\"]\n"
    ));
    assert!(v.iter().any(|m| m.contains("bogus")));
    assert!(matches!(
        parse_config(&BASE.replace("[grid]", "[grid]\nspacing = 1")),
        Err(FfnsError::ConfigParse { .. })
    ));
}

#[test]
fn decay_pair_outside_the_regime_is_rejected() {
    let v = invalid(&format!("{BASE}\n[checks]\ndecay_pairs = [[1, 1]]\n"));
    assert!(!v.is_empty());
    let v = invalid(&format!(
        "{BASE}\n[checks]\ndivergence_pairs = [[0, \"inf\"]]\n"
    ));
    assert!(!v.is_empty());
}

#[test]
fn hash_tracks_content_not_output() {
    let a = parse_config(BASE).unwrap();
    let b = parse_config(&format!(
        "{BASE}\n[output]\ndir = \"elsewhere\"\nthreads = 3\n"
    ))
    .unwrap();
    let c = parse_config(&BASE.replace("2.9e-4", "2.8e-4")).unwrap();
    assert_eq!(a.hash, b.hash);
    assert_ne!(a.hash, c.hash);
}

#[test]
fn exit_code_for_config_errors_is_2() {
    for text in ["[grid\n", "[scenario]\nname = 3\n"] {
        assert_eq!(parse_config(text).unwrap_err().exit_code(), 2);
    }
}

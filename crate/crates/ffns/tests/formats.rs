//! Binary snapshots, trajectory manifests and report file names.

use std::fs;

use ffns::config::parse_config;
use ffns::io::{
    csv_name, decode_snapshot, encode_snapshot, read_trajectory, summary_name, write_trajectory,
    Endian, HEADER_LEN, MANIFEST,
};
use ffns::runner::Runner;
use ffns_core::grid::{BoxGrid, VectorFieldGrid};
use ffns_core::Dim;
use proptest::prelude::*;

const TINY: &str = r#"
[scenario]
name = "tiny"
dimension = 2

[grid]
half_width = 16.0
points = 32

[time]
horizon = 0.5
slices_per_unit = 8

[force]
kind = "gaussian"
width = 1.2
amplitude = [1e-4, 2e-5]

[checks]
run = ["mild"]
profile_time = 0.5
"#;

fn bits(f: &VectorFieldGrid) -> Vec<u64> {
    f.components()
        .iter()
        .flatten()
        .map(|v| v.to_bits())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn snapshot_roundtrip_is_lossless(seed in any::<u64>(), e in 4u32..6, l in 0.5f64..100.0, t in 0.0f64..10.0, big in any::<bool>()) {
        let grid = BoxGrid::new(Dim::Two, l, 1 << e).unwrap();
        let field = VectorFieldGrid::from_fn(grid, |x| {
            let h = (x[0] * 12.9898 + x[1] * 78.233 + seed as f64 * 1e-9).sin() * 43758.5453;
            [h.fract(), -h.fract() * 1e-300, 0.0]
        });
        let e = if big { Endian::Big } else { Endian::Little };
        let bytes = encode_snapshot(&field, t, e);
        prop_assert_eq!(bytes.len(), HEADER_LEN + 2 * grid.len() * 8);
        let back = decode_snapshot(std::path::Path::new("mem"), &bytes).unwrap();
        prop_assert_eq!(back.time.to_bits(), t.to_bits());
        prop_assert_eq!(bits(&back.field), bits(&field));
        prop_assert_eq!(back.field.grid(), field.grid());
        prop_assert_eq!(encode_snapshot(&back.field, back.time, e), bytes);
    }

    #[test]
    fn truncated_snapshots_are_rejected(cut in 1usize..200) {
        let grid = BoxGrid::new(Dim::Two, 1.0, 16).unwrap();
        let field = VectorFieldGrid::from_fn(grid, |x| [x[0], x[1], 0.0]);
        let bytes = encode_snapshot(&field, 1.0, Endian::Little);
        let cut = cut.min(bytes.len() - 1);
        prop_assert!(decode_snapshot(std::path::Path::new("mem"), &bytes[..bytes.len() - cut]).is_err());
    }
}

#[test]
fn trajectory_directory_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(TINY).unwrap();
    let mut runner = Runner::new(cfg, dir.path().join("out"), None).unwrap();
    let traj = runner.simulate().unwrap();
    let copy = dir.path().join("copy");
    write_trajectory(&copy, &traj).unwrap();
    let back = read_trajectory(&copy).unwrap();
    assert_eq!(back.times, traj.times);
    assert_eq!(back.iteration_log, traj.iteration_log);
    assert_eq!(back.scenario_hash, traj.scenario_hash);
    for (a, b) in back.snapshots.iter().zip(&traj.snapshots) {
        assert_eq!(bits(a), bits(b));
    }
    let manifest = fs::read_to_string(copy.join(MANIFEST)).unwrap();
    assert_eq!(
        manifest.lines().filter(|l| l.starts_with("slice ")).count(),
        traj.times.len()
    );
    assert_eq!(
        fs::read(copy.join(MANIFEST)).unwrap(),
        fs::read(dir.path().join("out/trajectory").join(MANIFEST)).unwrap()
    );

    // a manifest pointing at a snapshot with the wrong time stamp is refused
    let edited = manifest.replacen("slice 1 ", "slice 1 9", 1);
    fs::write(copy.join(MANIFEST), edited).unwrap();
    assert!(read_trajectory(&copy).is_err());
}

#[test]
fn report_names_follow_the_hash() {
    let cfg = parse_config(TINY).unwrap();
    let h = cfg.hash.clone();
    assert_eq!(h.len(), 64);
    assert_eq!(
        csv_name(&h, "sweep", "a0_pinf"),
        format!("{}_sweep-a0_pinf.csv", &h[..16])
    );
    assert_eq!(
        csv_name(&h, "kernel", ""),
        format!("{}_kernel.csv", &h[..16])
    );
    assert_eq!(summary_name(&h), format!("{}_summary.json", &h[..16]));
}

#[test]
fn check_tables_have_the_four_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(&TINY.replace("run = [\"mild\"]", "run = [\"kernel\"]")).unwrap();
    let mut runner = Runner::new(cfg, dir.path().to_path_buf(), None).unwrap();
    runner.kernel_checks().unwrap();
    let csvs: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    assert!(!csvs.is_empty());
    for p in csvs {
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(
            text.lines().next(),
            Some("abscissa,value,prediction,residual"),
            "{}",
            p.display()
        );
    }
}

//! End-to-end runs of the `risim` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use risim::parse_config;
use risim_core::dump::{read_binary, read_csv};

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn indoor_side() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/configs/indoor_side.toml")
}

fn risim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risim"))
        .args(args)
        .env_remove("SIMRIS_SEED")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// The sample config shrunk to 16 elements and 30 realizations, written to
/// `dir`. Flags cannot do this since the file overrides them.
fn small_config(dir: &Path, direct_link: bool) -> String {
    let text = std::fs::read_to_string(indoor_side())
        .unwrap()
        .replace("elements = 256", "elements = 16")
        .replace("realizations = 1000", "realizations = 30")
        .replace("direct_link = true", &format!("direct_link = {direct_link}"));
    let path = dir.join(format!("small_{direct_link}.toml"));
    std::fs::write(&path, text).unwrap();
    path_str(&path).to_owned()
}

#[test]
fn rate_table_matches_golden_file() {
    let out = risim(&["rate", "--config", indoor_side()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let golden = std::fs::read_to_string(manifest_dir().join("tests/golden/indoor_side_rate.csv")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);

    // optimal alignment beats the other profiles at every power
    let rows: Vec<Vec<&str>> = golden
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 21);
    let rate =
        |rule: &str, i: usize| -> f64 { rows.iter().filter(|r| r[0] == rule).nth(i).unwrap()[2].parse().unwrap() };
    for i in 0..7 {
        assert!(rate("optimal", i) > rate("random", i));
        assert!(rate("optimal", i) > rate("off", i));
    }
}

#[test]
fn simulate_is_byte_identical_and_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let small = small_config(dir.path(), true);
    let mut bytes = Vec::new();
    for (name, format) in [("a.bin", "binary"), ("b.bin", "binary"), ("c.csv", "csv")] {
        let path = dir.path().join(name);
        let args = [
            "simulate",
            "--config",
            &small,
            "--format",
            format,
            "--out",
            path_str(&path),
        ];
        let out = risim(&args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        bytes.push(std::fs::read(&path).unwrap());
    }
    // the output path is part of the embedded config, so compare runs that
    // differ only in it by decoded records
    let a = read_binary(bytes[0].as_slice()).unwrap();
    let b = read_binary(bytes[1].as_slice()).unwrap();
    let c = read_csv(bytes[2].as_slice()).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.records, c.records);
    assert_eq!(a.header.realizations, 30);
    assert_eq!(a.header.seed, 2021);
    let embedded = parse_config(&a.header.config).unwrap();
    assert_eq!(embedded.channel.scenario.n_elements, 16);

    let again = dir.path().join("a.bin");
    let args = [
        "simulate",
        "--config",
        &small,
        "--format",
        "binary",
        "--out",
        path_str(&again),
    ];
    assert_eq!(risim(&args).status.code(), Some(0));
    assert_eq!(std::fs::read(&again).unwrap(), bytes[0]);
}

#[test]
fn validate_exit_codes() {
    let ok = risim(&["validate", "--config", indoor_side()]);
    assert_eq!(ok.status.code(), Some(0));

    let bad = risim(&[
        "validate",
        "--env",
        "inh",
        "--wall",
        "side",
        "--tx",
        "0,25,2",
        "--rx",
        "38,48,2.5",
        "--ris",
        "40,50,2",
    ]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("RX_TOO_HIGH"));

    // the config file overrides the bad flag
    let fixed = risim(&["validate", "--rx", "38,48,2.5", "--config", indoor_side()]);
    assert_eq!(fixed.status.code(), Some(0));
}

#[test]
fn missing_key_is_a_config_error() {
    let out = risim(&[
        "validate", "--env", "inh", "--wall", "side", "--rx", "38,48,1", "--ris", "40,50,2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario.tx"));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing/dir/out.bin");
    let small = small_config(dir.path(), true);
    assert_eq!(
        risim(&["simulate", "--config", &small, "--out", path_str(&target)])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn seed_from_environment_when_unset_elsewhere() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_risim"))
        .args([
            "simulate",
            "--env",
            "umi",
            "--wall",
            "side",
            "--tx",
            "0,25,20",
            "--rx",
            "50,70,1",
            "--ris",
            "70,85,10",
            "--elements",
            "4",
            "--realizations",
            "3",
            "--out",
        ])
        .arg(&out)
        .env("SIMRIS_SEED", "99")
        .status()
        .unwrap();
    assert!(status.success());
    let dump = read_csv(std::fs::read(&out).unwrap().as_slice()).unwrap();
    assert_eq!(dump.header.seed, 99);
}

#[test]
fn recommend_output_is_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rec.toml");
    let out = risim(&[
        "recommend",
        "--env",
        "umi",
        "--wall",
        "opposite",
        "--out",
        path_str(&cfg),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(risim(&["validate", "--config", path_str(&cfg)]).status.code(), Some(0));
}

#[test]
fn heatmap_and_scaling_from_flags() {
    let dir = tempfile::tempdir().unwrap();
    let small = small_config(dir.path(), true);
    let out = risim(&[
        "heatmap", "--config", &small, "--xs", "30,34", "--ys", "40,44", "--pt-dbw", "-10",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);
    assert!(text.contains("#   pt_dbw = -10.0"));

    // without the direct path the optimal SNR grows as N²: 12.04 dB per 4×
    let blocked = small_config(dir.path(), false);
    let out = risim(&["scaling", "--config", &blocked, "--n-list", "16,64"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<f64> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!((rows[1] - rows[0] - 12.04).abs() < 0.2, "{rows:?}");
}

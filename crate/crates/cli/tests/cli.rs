use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_xtalk");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_spec(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("spec.toml");
    fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
seed = 11
out = "run"
preps = ["00000", "11111", "10101", "01010"]
shots = 60
configs = ["A123A"]
"#;

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = walk(dir)
        .into_iter()
        .map(|p| {
            (
                p.strip_prefix(dir).unwrap().display().to_string(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn assert_same(a: &[(String, Vec<u8>)], b: &[(String, Vec<u8>)]) {
    let names = |v: &[(String, Vec<u8>)]| v.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    assert_eq!(names(a), names(b));
    let differing: Vec<&String> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| &x.0)
        .collect();
    assert!(differing.is_empty(), "files differ: {differing:?}");
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn simulate_writes_one_file_per_preparation_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    write_spec(dir.path(), SMALL);
    ok(dir.path(), &["--spec", "spec.toml", "simulate"]);
    let first = csvs(&dir.path().join("run"));
    let traces: Vec<_> = first.iter().filter(|(n, _)| n.ends_with(".qrxt")).collect();
    assert_eq!(traces.len(), 4);
    let listing = fs::read_to_string(dir.path().join("run/traces_manifest.csv")).unwrap();
    assert_eq!(listing.lines().count(), 5);
    assert!(listing.starts_with("file,prep,seed,shots\n"));

    ok(
        dir.path(),
        &["--spec", "spec.toml", "--threads", "1", "simulate"],
    );
    assert_same(&csvs(&dir.path().join("run")), &first);
    ok(
        dir.path(),
        &["--spec", "spec.toml", "--threads", "4", "simulate"],
    );
    assert_same(&csvs(&dir.path().join("run")), &first);

    ok(
        dir.path(),
        &["--spec", "spec.toml", "--seed", "12", "simulate"],
    );
    assert_ne!(csvs(&dir.path().join("run")), first);
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("seed = 1\nout = \"r\"\nshots = 0\n", "simulate", "shots"),
        ("out = \"r\"\nshots = 10\n", "simulate", "seed"),
        (
            "seed = 1\nout = \"r\"\nconfigs = [\"B123A\"]\n",
            "attack",
            "'B'",
        ),
        (
            "seed = 1\nout = \"r\"\ndevice = \"missing.toml\"\n",
            "simulate",
            "missing.toml",
        ),
        ("seed = 1\nout = \"r\"\n", "discriminate", "simulate first"),
        (
            "seed = 1\nout = \"r\"\nshots = 10\nbogus = 3\n",
            "simulate",
            "bogus",
        ),
    ];
    for (spec, sub, needle) in cases {
        write_spec(dir.path(), spec);
        let out = run(dir.path(), &["--spec", "spec.toml", sub]);
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{spec}: {err}");
        assert!(err.contains(needle), "{spec}: {err}");
    }
    let out = run(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn full_training_ratio_leaves_no_evaluation_shots() {
    let dir = tempfile::tempdir().unwrap();
    write_spec(dir.path(), &format!("{SMALL}train_fraction = 1.0\n"));
    ok(dir.path(), &["--spec", "spec.toml", "simulate"]);
    let out = run(dir.path(), &["--spec", "spec.toml", "discriminate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("train fraction"));
}

#[test]
fn noiseless_matched_filter_reports_perfect_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let mut device = String::from("noise_sigma = 0.0\n");
    for _ in 0..5 {
        device.push_str("[[qubit]]\nt1_us = inf\np_excitation = 0.0\n");
    }
    fs::write(dir.path().join("quiet.toml"), device).unwrap();
    write_spec(
        dir.path(),
        "seed = 2\nout = \"run\"\ndevice = \"quiet.toml\"\nshots = 20\n",
    );
    ok(dir.path(), &["--spec", "spec.toml", "simulate"]);
    ok(dir.path(), &["--spec", "spec.toml", "discriminate"]);
    let acc = fs::read_to_string(dir.path().join("run/accuracy.csv")).unwrap();
    let rows: Vec<&str> = acc.lines().skip(1).collect();
    assert_eq!(rows.len(), 7);
    for r in rows {
        assert_eq!(r.split(',').nth(1), Some("1"), "{acc}");
    }
    let manifest = fs::read_to_string(dir.path().join("run/discriminate_manifest.csv")).unwrap();
    assert!(manifest.contains("device,quiet.toml\n"));
}

#[test]
fn pipeline_end_to_end_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_spec(
        dir.path(),
        r#"
seed = 5
out = "run"
shots = 400
configs = ["A123A", "A12A4"]

[attack]
window = 16

[defense]
configs = ["A12A4"]
windows_per_victim = 8

[defense.scrambling]
recovery_shots = 500

[defense.mapping]
kind = "random"
size = 1

[defense.sandbox]
requests = [4, 4, 4]
"#,
    );
    let all = ["simulate", "discriminate", "attack", "defend", "report"];
    for sub in all {
        ok(dir.path(), &["--spec", "spec.toml", "--plots", sub]);
    }
    let run_dir = dir.path().join("run");
    let first = csvs(&run_dir);
    for sub in all {
        ok(dir.path(), &["--spec", "spec.toml", "--plots", sub]);
    }
    assert_same(&csvs(&run_dir), &first);
    for sub in all {
        assert!(run_dir.join(format!("{sub}_manifest.csv")).exists());
    }
    for (name, bytes) in &first {
        if name.ends_with("_manifest.csv") {
            let text = String::from_utf8_lossy(bytes);
            assert!(
                !text.contains(dir.path().to_str().unwrap()),
                "{name}: {text}"
            );
        }
    }

    let pflip = fs::read_to_string(run_dir.join("pflip.csv")).unwrap();
    assert_eq!(
        pflip.lines().filter(|l| l.starts_with("A123A,")).count(),
        16
    );
    let svm = fs::read_to_string(run_dir.join("svm_accuracy.csv")).unwrap();
    assert_eq!(svm.lines().count(), 3);
    let svg = fs::read_to_string(run_dir.join("plots/pflip_A123A.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("stroke-dasharray"));

    let defense = fs::read_to_string(run_dir.join("defense.csv")).unwrap();
    let row = |name: &str| -> Vec<String> {
        defense
            .lines()
            .find(|l| l.starts_with(name))
            .unwrap_or_else(|| panic!("{name} missing from {defense}"))
            .split(',')
            .map(String::from)
            .collect()
    };
    let mapping = row("mapping-random");
    assert_eq!(mapping[2], mapping[3]);
    assert_eq!(row("sandbox-sandboxed")[6], (12.0f64 / 54.0).to_string());
    assert!(row("scrambling-fresh-pad")[5].parse::<f64>().is_ok());
    let report = fs::read_to_string(run_dir.join("report.md")).unwrap();
    assert!(report.contains("## Attack accuracy"));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pilotwave::table::Table;

fn pilotwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pilotwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn read_table(path: &Path) -> Table {
    Table::parse(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_RELAX: &str = r#"
[scenario]
name = "small_relax"
module = "relax"
seed = 5

[relax]
modes = 3
birth = "uniform"
particles = 2000
outputs = 5
periods = 0.25
max_dropped_fraction = 0.05
"#;

const BERNOULLI: &str = r#"
[scenario]
name = "b"
module = "bernoulli"

[bernoulli]
steps = 8
"#;

#[test]
fn empty_config_lists_required_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "empty.toml", "");
    let o = pilotwave(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(
        e.contains("missing required fields")
            && e.contains("scenario.name")
            && e.contains("scenario.module"),
        "{e}"
    );
}

#[test]
fn unknown_field_names_field_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo.toml", &format!("{BERNOULLI}stepz = 3\n"));
    let o = pilotwave(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("stepz") && e.contains("line 8"), "{e}");
}

#[test]
fn bad_value_names_field_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        &format!("{BERNOULLI}rate_tolerance = -1.0\n"),
    );
    let o = pilotwave(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("`bernoulli.rate_tolerance` (line 8)"), "{e}");
}

#[test]
fn wrong_type_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "type.toml",
        &BERNOULLI.replace("steps = 8", "steps = \"many\""),
    );
    let o = pilotwave(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("steps"), "{}", stderr(&o));
}

#[test]
fn subcommand_must_match_module() {
    let o = pilotwave(&["relax", "--config", "bernoulli_decay"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scenario.module"));
}

#[test]
fn bernoulli_decay_reports_ln2_and_2ln2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let o = pilotwave(&[
        "bernoulli",
        "--config",
        "bernoulli_decay",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = read_table(&out.join("rates.txt"));
    let ln2 = std::f64::consts::LN_2;
    for (m, expected) in [(1.0, ln2), (2.0, 2.0 * ln2)] {
        let row = t
            .rows()
            .iter()
            .find(|r| r[0] == m)
            .expect("mode row present");
        assert!((row[2] - expected).abs() < 1e-12);
        assert!(
            (row[1] / expected - 1.0).abs() < 0.01,
            "rate {} for m = {m}",
            row[1]
        );
    }
    for f in [
        "manifest.toml",
        "coefficients.txt",
        "iterates.txt",
        "coefficients.svg",
        "iterates.svg",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
}

#[test]
fn relax_2mode_box_writes_series_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = pilotwave(&["relax", "--out", out.to_str().unwrap(), "--seed", "42"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = read_table(&out.join("h_coarse.txt"));
    assert_eq!(t.rows().len(), 41);
    let h = t.column("H_coarse").unwrap();
    assert!(h.iter().all(|v| v.is_finite() && *v >= 0.0));
    let manifest: toml::Table = fs::read_to_string(out.join("manifest.toml"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(manifest["run"]["seed"].as_integer(), Some(42));
    assert_eq!(manifest["run"]["status"].as_str(), Some("pass"));
    assert!(manifest["versions"]["pilotwave"].is_str());
    assert!(manifest["run"]["wall_seconds"].as_float().unwrap() > 0.0);
    // defaults are echoed even when the file does not set them
    assert_eq!(manifest["config"]["relax"]["cells"].as_integer(), Some(32));
    assert!(fs::read_to_string(out.join("h_coarse.svg"))
        .unwrap()
        .contains("<polyline"));
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.toml")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn same_config_and_seed_give_identical_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL_RELAX);
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec![
            "run",
            "--config",
            cfg.as_str(),
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let o = pilotwave(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        data_files(&out)
    };
    let a = run("a", &[]);
    let b = run("b", &["--jobs", "2"]);
    let c = run("c", &["--seed", "6"]);
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn failed_assertion_names_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "tight.toml",
        &format!("{BERNOULLI}rate_tolerance = 1e-13\n"),
    );
    let out = dir.path().join("o");
    let o = pilotwave(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("assertion failed: decay_rates"),
        "{}",
        stderr(&o)
    );
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("status = \"fail\""));
}

#[test]
fn strict_turns_warnings_into_failures() {
    let dir = tempfile::tempdir().unwrap();
    let text = BERNOULLI.replace(
        "module = \"bernoulli\"",
        "module = \"bernoulli\"\nbudget_seconds = 1e-9",
    );
    let cfg = write_config(dir.path(), "slow.toml", &text);
    let out = dir.path().join("o");
    let relaxed = pilotwave(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(relaxed.status.success());
    assert!(
        stderr(&relaxed).contains("over the"),
        "{}",
        stderr(&relaxed)
    );
    let strict = pilotwave(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--strict",
    ]);
    assert_eq!(strict.status.code(), Some(4));
}

#[test]
fn suite_runs_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = pilotwave(&["suite", "--criteria", "4,8", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.contains("criterion  4 PASS") && stdout.contains("criterion  8 PASS"),
        "{stdout}"
    );
    let t = read_table(&out.join("acceptance.txt"));
    assert_eq!(t.rows().len(), 2);
    assert!(pilotwave(&["suite", "--criteria", "11"]).status.code() == Some(2));
}

#[test]
fn lists_bundled_scenarios() {
    let o = pilotwave(&["scenarios"]);
    assert!(o.status.success());
    let s = String::from_utf8_lossy(&o.stdout);
    for name in ["relax_2mode_box", "bernoulli_decay", "suite"] {
        assert!(s.contains(name));
    }
}

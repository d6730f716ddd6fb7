//! End-to-end tests that drive the compiled binary the way a user would:
//! generate a dataset file, detect outliers in it, run the bundled
//! benchmarks, and check exit codes and artifact determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use robust_lasso::dataset::io::{load_dataset, FileFormat};

const BIN: &str = env!("CARGO_BIN_EXE_robust-lasso");

/// Fresh scratch directory per test so runs never collide.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("robust-lasso-cli-{name}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).expect("create scratch dir");
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn binary")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "expected success for {args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: &std::path::Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn generate_writes_preset_dataset_deterministically() {
    let dir = scratch("generate");
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");

    let out = run_ok(&[
        "generate",
        "--paper-fig1",
        "--seed",
        "7",
        "-o",
        path_str(&a),
    ]);
    let msg = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(msg.contains("390 instances"), "stdout: {msg}");
    assert!(msg.contains("90 outliers"), "stdout: {msg}");

    let ds = load_dataset(&a, FileFormat::infer(&a)).expect("load generated file");
    assert_eq!(ds.n(), 390);
    assert_eq!(ds.p(), 2);
    assert_eq!(ds.outlier_count(), 90);
    assert_eq!(ds.seed, Some(7));

    run_ok(&[
        "generate",
        "--paper-fig1",
        "--seed",
        "7",
        "-o",
        path_str(&b),
    ]);
    assert_eq!(read(&a), read(&b), "same seed must give identical bytes");
}

#[test]
fn generate_handles_a_single_class() {
    let dir = scratch("generate-one-class");
    let out_file = dir.join("one.csv");
    run_ok(&[
        "generate",
        "--classes",
        "1",
        "--per-class",
        "5",
        "--outliers-per-class",
        "2",
        "--seed",
        "1",
        "-o",
        path_str(&out_file),
    ]);
    let ds = load_dataset(&out_file, FileFormat::infer(&out_file)).expect("load");
    assert_eq!(ds.n(), 7);
    assert_eq!(ds.outlier_count(), 2);
}

#[test]
fn generate_without_output_is_usage_error() {
    let out = run(&["generate", "--paper-fig1"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
}

#[test]
fn detect_recovers_planted_outliers_across_formats() {
    let dir = scratch("detect");
    let csv = dir.join("ds.csv");
    let json = dir.join("ds.json");
    run_ok(&["generate", "--paper-fig1", "--seed", "7", "-o", path_str(&csv)]);
    run_ok(&["generate", "--paper-fig1", "--seed", "7", "-o", path_str(&json)]);

    let selected_from = |prefix: &std::path::Path, input: &std::path::Path| -> Vec<usize> {
        run_ok(&[
            "detect",
            "-i",
            path_str(input),
            "--select",
            "count=90",
            "-o",
            path_str(prefix),
        ]);
        let doc: serde_json::Value =
            serde_json::from_str(&read(&prefix.with_extension("json"))).expect("valid json");
        assert_eq!(doc["tool"], "detect");
        assert_eq!(doc["config"]["select"], "count=90");
        assert_eq!(doc["config"]["intercept"], "false");
        doc["report"]["selected"]
            .as_array()
            .expect("selected array")
            .iter()
            .map(|v| v.as_u64().expect("index") as usize)
            .collect()
    };

    let first = dir.join("out1");
    let second = dir.join("out2");
    let from_json = dir.join("out3");
    let selected = selected_from(&first, &csv);
    assert_eq!(selected.len(), 90);

    // Recall against the planted truth.
    let ds = load_dataset(&csv, FileFormat::Csv).expect("load");
    let mask = ds.outlier_mask.as_ref().expect("generated mask");
    let truth: Vec<usize> = (0..ds.n()).filter(|&i| mask[i]).collect();
    let hits = selected.iter().filter(|i| truth.contains(i)).count();
    let recall = hits as f64 / truth.len() as f64;
    assert!(recall >= 0.85, "recall {recall:.3} below floor");

    // Rerunning on the same input reproduces both artifacts byte for byte.
    let again = selected_from(&second, &csv);
    assert_eq!(selected, again);
    assert_eq!(
        read(&first.with_extension("json")),
        read(&second.with_extension("json"))
    );
    assert_eq!(
        read(&first.with_extension("csv")),
        read(&second.with_extension("csv"))
    );

    // CSV and JSON encodings of the same dataset give the same selection
    // (the CSV float format round-trips exactly).
    let via_json = selected_from(&from_json, &json);
    assert_eq!(selected, via_json);

    let ranked = read(&first.with_extension("csv"));
    let header = ranked
        .lines()
        .find(|l| !l.starts_with('#'))
        .expect("header line");
    assert_eq!(header, "rank,instance,activation_lambda,selected");
}

#[test]
fn detect_with_zero_count_selects_nothing() {
    let dir = scratch("detect-zero");
    let csv = dir.join("ds.csv");
    run_ok(&["generate", "--paper-fig1", "--seed", "3", "-o", path_str(&csv)]);
    let prefix = dir.join("out");
    run_ok(&[
        "detect",
        "-i",
        path_str(&csv),
        "--select",
        "count=0",
        "-o",
        path_str(&prefix),
    ]);
    let doc: serde_json::Value =
        serde_json::from_str(&read(&prefix.with_extension("json"))).expect("valid json");
    assert!(doc["report"]["selected"].as_array().unwrap().is_empty());
}

#[test]
fn detect_needs_more_instances_than_features() {
    let dir = scratch("detect-wide");
    let csv = dir.join("wide.csv");
    fs::write(&csv, "id,f1,f2,label\n0,0.1,0.2,1\n1,0.3,0.4,2\n").unwrap();
    let prefix = dir.join("out");
    let out = run(&[
        "detect",
        "-i",
        path_str(&csv),
        "--select",
        "count=1",
        "-o",
        path_str(&prefix),
    ]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
    assert!(
        stderr(&out).contains("--features tdca"),
        "stderr should point at the embedding stage: {}",
        stderr(&out)
    );
}

#[test]
fn malformed_flags_are_usage_errors() {
    let dir = scratch("detect-badflags");
    let csv = dir.join("ds.csv");
    run_ok(&["generate", "--seed", "1", "-o", path_str(&csv)]);
    let prefix = dir.join("out");
    let p = path_str(&prefix);
    let i = path_str(&csv);

    for args in [
        vec!["detect", "-i", i, "--select", "frac=3", "-o", p],
        vec!["detect", "-i", i, "--select", "count=x", "-o", p],
        vec!["detect", "-i", i, "-o", p], // --select is required
        vec!["detect", "-i", i, "--select", "count=1", "--method", "bogus", "-o", p],
    ] {
        let out = run(&args);
        assert_eq!(code(&out), 2, "args {args:?}, stderr: {}", stderr(&out));
    }
}

#[test]
fn config_file_layers_between_defaults_and_flags() {
    let dir = scratch("config");
    let cfg = dir.join("run.conf");
    fs::write(&cfg, "# shared experiment settings\nseed = 5\n").unwrap();

    let gen = |extra: &[&str], out_file: &PathBuf| {
        let mut args = vec!["generate", "--paper-fig1"];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["-o", path_str(out_file)]);
        run_ok(&args);
    };

    let from_file = dir.join("a.csv");
    let from_flag = dir.join("b.csv");
    let overridden = dir.join("c.csv");
    let direct = dir.join("d.csv");
    let c = path_str(&cfg).to_owned();
    gen(&["--config", &c], &from_file);
    gen(&["--seed", "5"], &from_flag);
    gen(&["--config", &c, "--seed", "9"], &overridden);
    gen(&["--seed", "9"], &direct);

    assert_eq!(read(&from_file), read(&from_flag), "file seed applies");
    assert_eq!(read(&overridden), read(&direct), "flag beats file");
    assert_ne!(read(&from_file), read(&overridden));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = scratch("config-bad");
    let cfg = dir.join("run.conf");
    fs::write(&cfg, "bogus = 1\n").unwrap();
    let out_file = dir.join("a.csv");
    let out = run(&[
        "generate",
        "--paper-fig1",
        "--config",
        path_str(&cfg),
        "-o",
        path_str(&out_file),
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("bogus"), "stderr: {}", stderr(&out));
}

#[test]
fn bench_fig1_emits_deterministic_artifacts() {
    let dir = scratch("bench-fig1");
    let first = dir.join("run1");
    let second = dir.join("run2");
    for prefix in [&first, &second] {
        run_ok(&[
            "bench",
            "fig1",
            "--seed",
            "3",
            "--repeats",
            "1",
            "-o",
            path_str(prefix),
        ]);
    }
    let suffixed = |prefix: &PathBuf, s: &str| {
        let mut name = prefix.file_name().unwrap().to_os_string();
        name.push(s);
        prefix.with_file_name(name)
    };

    let sweep = read(&suffixed(&first, "_sweep.csv"));
    let mut rows = sweep.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(
        rows.next().unwrap(),
        "group,repeat,seed,detection_accuracy,recall,precision,\
         classifier_accuracy,classifier_accuracy_full"
    );
    assert_eq!(rows.count(), 7, "one record per ratio at repeats=1");

    let doc: serde_json::Value =
        serde_json::from_str(&read(&suffixed(&first, "_summary.json"))).expect("valid json");
    assert_eq!(doc["path_cutoff"], 90);
    let groups = doc["sweep"]["groups"].as_array().expect("groups");
    assert_eq!(groups.len(), 7);
    for g in groups {
        // A single repeat has no spread.
        assert_eq!(g["detection_accuracy"]["std"], 0.0, "group {}", g["group"]);
    }

    assert_eq!(
        read(&suffixed(&first, "_path.csv")),
        read(&suffixed(&second, "_path.csv"))
    );
    assert_eq!(sweep, read(&suffixed(&second, "_sweep.csv")));
    // The summary differs only in wall-clock time.
    let strip = |text: String| -> String {
        text.lines()
            .filter(|l| !l.contains("runtime_ms"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip(read(&suffixed(&first, "_summary.json"))),
        strip(read(&suffixed(&second, "_summary.json")))
    );
}

#[test]
fn bench_pipeline_compares_stage_combinations() {
    let dir = scratch("bench-pipeline");
    let prefix = dir.join("run");
    let out = run_ok(&[
        "bench",
        "pipeline",
        "--seeds",
        "1 2",
        "-o",
        path_str(&prefix),
    ]);
    let msg = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(msg.contains("raw+none+linear"), "stdout: {msg}");

    let csv = read(&dir.join("run_pipeline.csv"));
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), 1 + 6 * 2, "header plus 6 stages x 2 seeds");

    let doc: serde_json::Value =
        serde_json::from_str(&read(&dir.join("run_pipeline.json"))).expect("valid json");
    let results = doc["results"].as_array().expect("results");
    assert_eq!(results.len(), 6);
    for r in results {
        assert_eq!(r["records"].as_array().unwrap().len(), 2);
    }
    let labels: Vec<&str> = results
        .iter()
        .map(|r| r["groups"][0]["group"].as_str().unwrap())
        .collect();
    assert!(labels.contains(&"raw+none+linear"));
    assert!(labels.contains(&"tdca+plasso+linear"));
}

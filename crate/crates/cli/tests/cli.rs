use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lava_core::morphometrics::{save_lavamask, VesselMap};
use serde_json::Value;

fn lava(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lava"))
        .current_dir(dir)
        .env_remove("LAVA_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = lava(dir, args);
    assert!(
        out.status.success(),
        "lava {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn synth(dir: &Path) {
    ok(
        dir,
        &[
            "synth", "--out", "syn", "--seed", "3", "--layers", "2", "--width", "40",
        ],
    );
}

#[test]
fn missing_fold_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lava(tmp.path(), &["probe", "--folds", "nope.csv", "--out", "p"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lava(tmp.path(), &["probe", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_fold_gives_unit_jaccard() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    ok(
        dir,
        &[
            "probe",
            "--folds",
            "syn/activations.csv",
            "--p",
            "4",
            "--out",
            "p",
        ],
    );
    for layer in ["layer0", "layer1"] {
        let doc = read_json(dir.join(format!("p/jaccard/{layer}.json")));
        assert_eq!(doc["matrix"], serde_json::json!([[1.0]]), "{layer}");
        let sel = read_json(dir.join(format!("p/selections/fold0/{layer}.json")));
        assert_eq!(sel["neurons"].as_array().unwrap().len(), 4);
    }
    let run = read_json(dir.join("p/run.json"));
    assert_eq!(run["command"], "probe");
    assert!(run["timestamp"].is_u64());
}

#[test]
fn complete_graph_runs_unconstrained() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    ok(
        dir,
        &[
            "probe",
            "--folds",
            "syn/activations.csv",
            "--p",
            "3",
            "--out",
            "p",
        ],
    );
    let out = ok(
        dir,
        &[
            "cluster",
            "--folds",
            "syn/activations.csv",
            "--selections",
            "p",
            "--k",
            "120",
            "--clusters",
            "2",
            "--out",
            "c",
        ],
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("constraint inactive"));
    let q = read_json(dir.join("c/quality.json"));
    assert_eq!(q["constraint_active"], false);
    assert_eq!(q["n_clusters"], 2);
    assert_eq!(q["cross_component_merges"], 0);
}

#[test]
fn cluster_rejects_k_beyond_sample_count() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    let out = lava(
        dir,
        &[
            "cluster",
            "--input",
            "syn/activations.csv",
            "--k",
            "500",
            "--out",
            "c",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sanity_on_identical_selections_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    ok(
        dir,
        &[
            "probe",
            "--folds",
            "syn/activations.csv",
            "--p",
            "3",
            "--out",
            "p",
        ],
    );
    let out = ok(
        dir,
        &[
            "sanity",
            "--trained",
            "p",
            "--randomized",
            "p",
            "--out",
            "s",
        ],
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    let report = read_json(dir.join("s/sanity.json"));
    assert_eq!(report["mean_jaccard"], 1.0);
}

fn write_mask(dir: &Path, name: &str, f: impl Fn(usize, usize) -> bool) {
    let map = VesselMap::from_fn(128, 128, f).unwrap();
    save_lavamask(&map, &dir.join(name)).unwrap();
}

#[test]
fn morph_skips_corrupt_masks() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let masks = dir.join("masks");
    fs::create_dir(&masks).unwrap();
    write_mask(&masks, "a.lmsk", |x, y| (x + y) % 7 == 0);
    write_mask(&masks, "b.lmsk", |x, _| x < 64);
    fs::write(masks.join("c.lmsk"), b"not a mask").unwrap();
    let mut pgm = b"P5\n64 64\n255\n".to_vec();
    pgm.extend((0..64 * 64).map(|i| if i % 64 == 10 { 255u8 } else { 0 }));
    fs::write(masks.join("d.pgm"), pgm).unwrap();
    ok(dir, &["morph", "--input", "masks", "--out", "m"]);

    let mut rdr = csv::Reader::from_path(dir.join("m/morphometrics.csv")).unwrap();
    let ids: Vec<String> = rdr.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(ids, ["a", "b", "d"]);
    let failures = fs::read_to_string(dir.join("m/failures.csv")).unwrap();
    assert!(failures.contains("c.lmsk"));
    assert_eq!(failures.lines().count(), 2);
}

#[test]
fn morph_on_empty_directory_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir(tmp.path().join("masks")).unwrap();
    let out = lava(tmp.path(), &["morph", "--input", "masks", "--out", "m"]);
    assert_eq!(out.status.code(), Some(1));
}

fn score_inputs(dir: &Path, rows: &[(&str, u8, f64, f64, usize)]) {
    let mut metrics = String::from("sample_id,label,memory,errors\n");
    let mut assign = String::from("sample_id,cluster\n");
    for (id, label, memory, errors, cluster) in rows {
        metrics.push_str(&format!("{id},{label},{memory},{errors}\n"));
        assign.push_str(&format!("{id},{cluster}\n"));
    }
    fs::write(dir.join("metrics.csv"), metrics).unwrap();
    fs::write(dir.join("assignment.csv"), assign).unwrap();
    fs::write(
        dir.join("orientations.json"),
        r#"{"orientations":{"memory":"higher_is_better","errors":"lower_is_better"},
            "score_columns":["memory","errors"]}"#,
    )
    .unwrap();
}

#[test]
fn score_without_sidecar_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    score_inputs(dir, &[("s0", 0, 1.0, 0.0, 0), ("s1", 1, 0.5, 0.2, 1)]);
    fs::remove_file(dir.join("orientations.json")).unwrap();
    let out = lava(
        dir,
        &[
            "score",
            "--input",
            "assignment.csv",
            "--metrics",
            "metrics.csv",
            "--orientations",
            "orientations.json",
            "--out",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn all_healthy_prescaled_table_scores_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let rows: Vec<(String, usize)> = (0..6).map(|i| (format!("s{i}"), i % 2)).collect();
    let rows: Vec<(&str, u8, f64, f64, usize)> = rows
        .iter()
        .map(|(id, c)| (id.as_str(), 0, 1.0, 0.0, *c))
        .collect();
    score_inputs(dir, &rows);
    ok(
        dir,
        &[
            "score",
            "--input",
            "assignment.csv",
            "--metrics",
            "metrics.csv",
            "--orientations",
            "orientations.json",
            "--normalized",
            "--out",
            "o",
        ],
    );
    let report = read_json(dir.join("o/continuum.json"));
    let samples = report["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 6);
    for s in samples {
        assert_eq!(s["ad_score"], 0.0);
    }
}

#[test]
fn score_orders_clusters_by_severity() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    score_inputs(
        dir,
        &[
            ("s0", 1, 2.0, 9.0, 0),
            ("s1", 1, 3.0, 8.0, 0),
            ("s2", 0, 9.0, 1.0, 1),
            ("s3", 0, 8.0, 2.0, 1),
            ("s4", 1, 5.0, 5.0, 2),
            ("s5", 0, 6.0, 4.0, 2),
        ],
    );
    ok(
        dir,
        &[
            "score",
            "--input",
            "assignment.csv",
            "--metrics",
            "metrics.csv",
            "--orientations",
            "orientations.json",
            "--out",
            "o",
        ],
    );
    let report = read_json(dir.join("o/continuum.json"));
    assert_eq!(report["order"], serde_json::json!([1, 2, 0]));
    let tests = fs::read_to_string(dir.join("o/tests.csv")).unwrap();
    assert!(tests.starts_with("cluster,name,variable,test"));
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out_dir = format!("p{threads}");
        let status = Command::new(env!("CARGO_BIN_EXE_lava"))
            .current_dir(dir)
            .env("LAVA_THREADS", threads)
            .args([
                "probe",
                "--folds",
                "syn/activations.csv",
                "--folds",
                "syn/activations.csv",
                "--p",
                "3",
                "--out",
                &out_dir,
            ])
            .status()
            .unwrap();
        assert!(status.success());
        let run = read_json(dir.join(&out_dir).join("run.json"));
        assert_eq!(run["threads"], threads.parse::<u64>().unwrap());
        let mut files = Vec::new();
        for rel in [
            "rfe_rounds.csv",
            "mi.csv",
            "jaccard/layer0.json",
            "selections/fold1/layer1.json",
        ] {
            files.push(fs::read(dir.join(&out_dir).join(rel)).unwrap());
        }
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
}

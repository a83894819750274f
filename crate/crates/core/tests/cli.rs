use std::path::{Path, PathBuf};
use std::process::Command;

use frpc::cli::{execute, render_run_dir, RunConfig, RunKind, SubjectResult, SUMMARY_CSV};
use frpc::epochset::write_epochset;
use frpc::preprocess::carve;
use frpc::filterbank::BandSpec;
use frpc::synth::{generate, PlantedEffect, SynthSpec};

fn mu() -> BandSpec {
    BandSpec::new(8.0, 12.0)
}

fn write_synth(dir: &Path, spec: &SynthSpec) -> PathBuf {
    write_epochset(&generate(spec).unwrap(), &dir.join(&spec.subject_id)).unwrap()
}

fn oracle(id: &str, seed: u64) -> SynthSpec {
    SynthSpec {
        subject_id: id.into(),
        seed,
        trials_per_class: 60,
        ..Default::default()
    }
    .with_effect("left", "C3", mu(), 6.0)
}

fn quick(inputs: Vec<PathBuf>, out: &Path) -> RunConfig {
    let mut cfg = RunConfig {
        inputs,
        output_dir: out.to_path_buf(),
        seed: 11,
        ..Default::default()
    };
    cfg.pipeline.cv.repeats = 2;
    cfg.pipeline.cv.folds = 5;
    cfg.pipeline.adaboost.rounds = 30;
    cfg
}

fn frpc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_frpc")).args(args).output().unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn oracle_subject_selects_c3() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_synth(tmp.path(), &oracle("S01", 3));
    let out = tmp.path().join("run");
    let o = frpc(&["run", "-i", m.to_str().unwrap(), "-o", out.to_str().unwrap(), "--repeats", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join(SUMMARY_CSV)).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "S01");
    assert_eq!(rows[0][3], "C3");
    let acc: f64 = rows[0][1].parse().unwrap();
    assert!(acc >= 90.0, "{acc}");
    // the single-subject average equals the subject row
    assert_eq!(rows[1][0], "Average");
    assert_eq!(rows[1][1], rows[0][1]);
    let md = String::from_utf8(o.stdout).unwrap();
    assert!(md.contains(&format!("(C3,{})", rows[0][4])), "{md}");
    assert!(md.contains(frpc::cli::VERSION));
}

#[test]
fn missing_manifest_names_the_path() {
    let o = frpc(&["run", "-i", "/nowhere/manifest.json", "-o", "/tmp/unused-frpc"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nowhere/manifest.json"));
}

#[test]
fn reruns_and_rerenders_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = vec![
        write_synth(tmp.path(), &oracle("A", 1)),
        write_synth(tmp.path(), &oracle("B", 2)),
    ];
    let (d1, d2) = (tmp.path().join("r1"), tmp.path().join("r2"));
    execute(RunKind::Run, &quick(inputs.clone(), &d1)).unwrap();
    execute(RunKind::Run, &quick(inputs, &d2)).unwrap();
    let a = std::fs::read(d1.join(SUMMARY_CSV)).unwrap();
    assert_eq!(a, std::fs::read(d2.join(SUMMARY_CSV)).unwrap());
    render_run_dir(&d1).unwrap();
    assert_eq!(a, std::fs::read(d1.join(SUMMARY_CSV)).unwrap());

    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# frpc "));
    assert!(text.contains("seed 11"));
    let rows = data_rows(&text);
    let vals: Vec<f64> = rows[..2].iter().map(|r| r[1].parse().unwrap()).collect();
    let avg: f64 = rows[2][1].parse().unwrap();
    assert!((avg - (vals[0] + vals[1]) / 2.0).abs() < 1e-9);
    for f in ["config.json", "run_meta.json", "subjects/A.json", "subjects/A_folds.csv"] {
        assert!(d1.join(f).exists(), "{f}");
    }
}

#[test]
fn sessions_merge_and_failures_are_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let s1 = oracle("A", 1);
    let s2 = SynthSpec { seed: 5, ..s1.clone() };
    let a1 = write_epochset(&generate(&s1).unwrap(), &tmp.path().join("a1")).unwrap();
    let a2 = write_epochset(&generate(&s2).unwrap(), &tmp.path().join("a2")).unwrap();
    let one_class = SynthSpec {
        subject_id: "bad".into(),
        classes: vec!["left".into(), "right".into(), "feet".into()],
        trials_per_class: 4,
        ..Default::default()
    };
    let bad = write_synth(tmp.path(), &one_class);

    let alone = execute(RunKind::Run, &quick(vec![a1.clone(), a2.clone()], &tmp.path().join("alone"))).unwrap();
    let mixed = execute(RunKind::Run, &quick(vec![a1, bad, a2], &tmp.path().join("mixed"))).unwrap();
    assert!(alone.meta.failures.is_empty());
    assert_eq!(mixed.meta.failures.len(), 1);
    assert_eq!(mixed.meta.failures[0].subject, "bad");
    assert!(mixed.markdown.contains("Failed subjects"));

    let (_, r1) = frpc::cli::load_records(&tmp.path().join("alone")).unwrap();
    let (_, r2) = frpc::cli::load_records(&tmp.path().join("mixed")).unwrap();
    assert_eq!(r1["A"].result, r2["A"].result);
    let SubjectResult::Run(a) = &r1["A"].result else { panic!() };
    assert_eq!(a.n_trials, 240);
}

#[test]
fn pairs_need_three_classes() {
    let tmp = tempfile::tempdir().unwrap();
    let four = SynthSpec {
        subject_id: "A01".into(),
        classes: ["left", "right", "feet", "tongue"].iter().map(|s| s.to_string()).collect(),
        trials_per_class: 20,
        ..Default::default()
    }
    .with_effect("right", "C3", mu(), 4.0);
    let m = write_synth(tmp.path(), &four);
    let mut cfg = quick(vec![m], &tmp.path().join("pairs"));
    cfg.pipeline.cv.repeats = 1;
    let out = execute(RunKind::Pairs, &cfg).unwrap();
    assert!(out.meta.failures.is_empty(), "{:?}", out.meta.failures);
    let csv = std::fs::read_to_string(tmp.path().join("pairs").join(SUMMARY_CSV)).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "subject,Left-Right,Left-Feet,Left-Tongue,Right-Feet,Right-Tongue,Tongue-Feet"
    );

    let two = write_synth(tmp.path(), &oracle("B01", 1));
    let out = execute(RunKind::Pairs, &quick(vec![two], &tmp.path().join("p2"))).unwrap();
    assert!(out.meta.failures[0].error.contains("use `run`"));
}

#[test]
fn erd_baseline_on_planted_desync() {
    let tmp = tempfile::tempdir().unwrap();
    // mu power on C3 everywhere before the cue and after it only for "right":
    // "left" desynchronizes
    let mut spec = SynthSpec {
        subject_id: "E01".into(),
        trials_per_class: 60,
        seed: 4,
        ..Default::default()
    };
    spec.effects = vec![
        PlantedEffect {
            class: None,
            channel: "C3".into(),
            band: mu(),
            multiplier: 6.0,
            span: Some((-3.0, 0.0)),
        },
        PlantedEffect {
            class: Some("right".into()),
            channel: "C3".into(),
            band: mu(),
            multiplier: 6.0,
            span: Some((0.0, 4.0)),
        },
    ];
    let m = write_synth(tmp.path(), &spec);
    let out = tmp.path().join("erd");
    let o = frpc(&["baseline-erds", "-i", m.to_str().unwrap(), "-o", out.to_str().unwrap(), "--repeats", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&std::fs::read_to_string(out.join(SUMMARY_CSV)).unwrap());
    assert_eq!(rows.len(), 2);
    let acc: f64 = rows[0][1].parse().unwrap();
    assert!(acc >= 80.0, "{acc}");

    // an already-windowed set has no pre-cue reference
    let windowed = carve(&generate(&spec).unwrap(), 0.5, 2.5).unwrap();
    let w = write_epochset(&windowed, &tmp.path().join("win")).unwrap();
    let out = execute(RunKind::BaselineErds, &quick(vec![w], &tmp.path().join("erd2"))).unwrap();
    assert_eq!(out.meta.failures.len(), 1);
}

#[test]
fn synth_and_validate_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    let o = frpc(&[
        "synth", "-o", dir.to_str().unwrap(), "--seed", "2", "--trials-per-class", "5", "--effect", "left:C3:8-12:6",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = frpc(&["validate", dir.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("ok "));

    std::fs::write(dir.join("data.f32"), [0u8; 16]).unwrap();
    let o = frpc(&["validate", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("invalid "));

    let o = frpc(&["report", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

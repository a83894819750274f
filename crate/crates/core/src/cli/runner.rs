use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use log::{error, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ClassSelection, RunConfig};
use super::render::render_run_dir;
use crate::epochset::{read_epochset, read_manifest, EpochSet, MANIFEST_FILE};
use crate::pipeline::{analyze, analyze_baseline, BaselineAnalysis, SubjectAnalysis};
use crate::rng::derive_seed;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const META_FILE: &str = "run_meta.json";
pub const CONFIG_FILE: &str = "config.json";
pub const SUBJECT_DIR: &str = "subjects";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Run,
    Pairs,
    BaselineErds,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn header_line(&self) -> String {
        format!(
            "frpc {}; config sha256 {}; seed {}",
            self.version, self.config_hash, self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectFailure {
    pub subject: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub kind: RunKind,
    pub provenance: Provenance,
    /// Subjects that succeeded, in input order.
    pub subjects: Vec<String>,
    pub failures: Vec<SubjectFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub label: String,
    pub analysis: SubjectAnalysis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubjectResult {
    Run(SubjectAnalysis),
    Pairs(Vec<PairResult>),
    BaselineErds(BaselineAnalysis),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub provenance: Provenance,
    pub subject_id: String,
    pub subject_seed: u64,
    pub result: SubjectResult,
}

/// Sessions grouped by subject id, in order of first appearance.
pub fn group_inputs(inputs: &[PathBuf]) -> anyhow::Result<Vec<(String, Vec<PathBuf>)>> {
    let mut groups: Vec<(String, Vec<PathBuf>)> = Vec::new();
    for p in inputs {
        let manifest = if p.is_dir() { p.join(MANIFEST_FILE) } else { p.clone() };
        let m = read_manifest(&manifest)
            .with_context(|| format!("reading manifest {}", manifest.display()))?;
        match groups.iter_mut().find(|(id, _)| *id == m.subject_id) {
            Some((_, paths)) => paths.push(p.clone()),
            None => groups.push((m.subject_id, vec![p.clone()])),
        }
    }
    Ok(groups)
}

pub fn load_subject(paths: &[PathBuf]) -> crate::Result<EpochSet> {
    let mut set = read_epochset(&paths[0])?;
    for p in &paths[1..] {
        set = set.concat(&read_epochset(p)?)?;
    }
    Ok(set)
}

fn class_rank(c: &str) -> (usize, &str) {
    let order = ["left", "right", "feet", "tongue"];
    (order.iter().position(|o| *o == c).unwrap_or(order.len()), c)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Unordered class pairs in table order: left, right, feet, tongue first,
/// then anything else alphabetically. The feet/tongue pair is labelled
/// "Tongue-Feet" to match the usual table layout.
pub fn class_pairs(classes: &[String]) -> Vec<(String, [String; 2])> {
    let mut sorted: Vec<&String> = classes.iter().collect();
    sorted.sort_by(|a, b| class_rank(a).cmp(&class_rank(b)));
    sorted.dedup();
    let mut out = Vec::new();
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            let (a, b) = (sorted[i].clone(), sorted[j].clone());
            let label = if a == "feet" && b == "tongue" {
                "Tongue-Feet".to_string()
            } else {
                format!("{}-{}", capitalize(&a), capitalize(&b))
            };
            out.push((label, [a, b]));
        }
    }
    out
}

fn two_class_set(set: &EpochSet, classes: Option<&ClassSelection>) -> anyhow::Result<EpochSet> {
    match classes {
        Some(ClassSelection::Pair(p)) => Ok(set.select_classes(p)?),
        Some(_) => bail!("\"all-pairs\" is handled by the `pairs` command"),
        None => {
            let found = set.classes();
            if found.len() != 2 {
                bail!(
                    "subject {} has {} classes ({}); pick two with --classes or use `pairs`",
                    set.subject_id,
                    found.len(),
                    found.join(", ")
                );
            }
            Ok(set.clone())
        }
    }
}

fn analyze_subject(
    kind: RunKind,
    paths: &[PathBuf],
    cfg: &RunConfig,
    seed: u64,
) -> anyhow::Result<SubjectResult> {
    let set = load_subject(paths)?;
    let p = &cfg.pipeline;
    Ok(match kind {
        RunKind::Run => SubjectResult::Run(analyze(&two_class_set(&set, cfg.classes.as_ref())?, p, seed)?),
        RunKind::BaselineErds => SubjectResult::BaselineErds(analyze_baseline(
            &two_class_set(&set, cfg.classes.as_ref())?,
            p,
            seed,
        )?),
        RunKind::Pairs => {
            let classes = set.classes();
            if classes.len() < 3 {
                bail!(
                    "subject {} has only {} classes; use `run` for two-class data",
                    set.subject_id,
                    classes.len()
                );
            }
            let mut results = Vec::new();
            for (label, pair) in class_pairs(&classes) {
                let sub = set.select_classes(&pair)?;
                let analysis =
                    analyze(&sub, p, seed).with_context(|| format!("pair {label}"))?;
                results.push(PairResult { label, analysis });
            }
            SubjectResult::Pairs(results)
        }
    })
}

/// Replace anything but `[A-Za-z0-9._-]` so ids are safe file names.
pub fn file_stem(subject: &str) -> String {
    subject
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

fn folds_csv(record: &SubjectRecord) -> String {
    let mut s = format!("# {}\n", record.provenance.header_line());
    let rows = |s: &mut String, prefix: &str, folds: &[f64], n_folds: usize| {
        for (k, a) in folds.iter().enumerate() {
            let _ = writeln!(s, "{prefix}{},{},{a}", k / n_folds, k % n_folds);
        }
    };
    match &record.result {
        SubjectResult::Run(a) => {
            s.push_str("n,repeat,fold,accuracy\n");
            for r in &a.cv.per_n {
                rows(&mut s, &format!("{},", r.n), &r.folds, a.cv.folds);
            }
        }
        SubjectResult::Pairs(pairs) => {
            s.push_str("pair,n,repeat,fold,accuracy\n");
            for p in pairs {
                for r in &p.analysis.cv.per_n {
                    rows(&mut s, &format!("{},{},", p.label, r.n), &r.folds, p.analysis.cv.folds);
                }
            }
        }
        SubjectResult::BaselineErds(b) => {
            s.push_str("repeat,fold,accuracy\n");
            rows(&mut s, "", &b.folds, b.n_folds.max(1));
        }
    }
    s
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Outcome of a batch command; `failures` non-empty means a non-zero exit.
#[derive(Debug)]
pub struct BatchOutcome {
    pub meta: RunMeta,
    pub markdown: String,
}

pub fn execute(kind: RunKind, cfg: &RunConfig) -> anyhow::Result<BatchOutcome> {
    cfg.validate()?;
    let groups = group_inputs(&cfg.inputs)?;
    let provenance = Provenance {
        version: VERSION.to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
    };
    info!("{} subject(s), {}", groups.len(), provenance.header_line());

    let results: Vec<(String, u64, anyhow::Result<SubjectResult>)> = groups
        .par_iter()
        .map(|(id, paths)| {
            let seed = derive_seed(cfg.seed, id);
            (id.clone(), seed, analyze_subject(kind, paths, cfg, seed))
        })
        .collect();

    let out = &cfg.output_dir;
    let subj_dir = out.join(SUBJECT_DIR);
    fs::create_dir_all(&subj_dir).with_context(|| format!("creating {}", subj_dir.display()))?;
    write_json(&out.join(CONFIG_FILE), cfg)?;

    let mut subjects = Vec::new();
    let mut failures = Vec::new();
    for (id, seed, result) in results {
        match result {
            Ok(result) => {
                let record = SubjectRecord {
                    provenance: provenance.clone(),
                    subject_id: id.clone(),
                    subject_seed: seed,
                    result,
                };
                let stem = file_stem(&id);
                write_json(&subj_dir.join(format!("{stem}.json")), &record)?;
                let folds = subj_dir.join(format!("{stem}_folds.csv"));
                fs::write(&folds, folds_csv(&record))
                    .with_context(|| format!("writing {}", folds.display()))?;
                subjects.push(id);
            }
            Err(e) => {
                error!("subject {id} failed: {e:#}");
                failures.push(SubjectFailure {
                    subject: id,
                    error: format!("{e:#}"),
                });
            }
        }
    }
    let meta = RunMeta {
        kind,
        provenance,
        subjects,
        failures,
    };
    write_json(&out.join(META_FILE), &meta)?;
    let markdown = render_run_dir(out)?;
    Ok(BatchOutcome { meta, markdown })
}

/// Load every subject record listed in a run directory's metadata.
pub fn load_records(dir: &Path) -> anyhow::Result<(RunMeta, BTreeMap<String, SubjectRecord>)> {
    let meta_path = dir.join(META_FILE);
    if !meta_path.exists() {
        bail!("{} is not a run directory (no {META_FILE})", dir.display());
    }
    let meta: RunMeta = serde_json::from_str(
        &fs::read_to_string(&meta_path).with_context(|| format!("reading {}", meta_path.display()))?,
    )
    .with_context(|| format!("parsing {}", meta_path.display()))?;
    let mut records = BTreeMap::new();
    for id in &meta.subjects {
        let p = dir.join(SUBJECT_DIR).join(format!("{}.json", file_stem(id)));
        let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        let r: SubjectRecord =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        records.insert(id.clone(), r);
    }
    Ok((meta, records))
}

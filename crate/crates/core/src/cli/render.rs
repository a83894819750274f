use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};

use super::runner::{load_records, RunKind, RunMeta, SubjectRecord, SubjectResult};
use crate::classify::OPTIMISM_NOTE;

pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_MD: &str = "summary.md";

/// One table: a label column plus numeric columns, optional text after each
/// number for the Markdown form.
struct Table {
    columns: Vec<String>,
    rows: Vec<(String, Vec<Option<f64>>, Vec<String>)>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl Table {
    fn averages(&self) -> Vec<Option<f64>> {
        (0..self.columns.len())
            .map(|j| mean_of(self.rows.iter().map(|r| r.1[j])))
            .collect()
    }

    fn csv(&self, header: &str, extra: &[&str], extra_cells: impl Fn(usize) -> Vec<String>) -> String {
        let mut s = format!("# {header}\nsubject");
        for c in &self.columns {
            let _ = write!(s, ",{c}");
        }
        for e in extra {
            let _ = write!(s, ",{e}");
        }
        s.push('\n');
        let cell = |v: &Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for (i, (name, vals, _)) in self.rows.iter().enumerate() {
            let cells: Vec<String> = vals.iter().map(cell).chain(extra_cells(i)).collect();
            let _ = writeln!(s, "{name},{}", cells.join(","));
        }
        let avg: Vec<String> = self
            .averages()
            .iter()
            .map(cell)
            .chain(extra.iter().map(|_| String::new()))
            .collect();
        let _ = writeln!(s, "Average,{}", avg.join(","));
        s
    }

    fn markdown(&self) -> String {
        let mut s = String::from("| Subject |");
        for c in &self.columns {
            let shown = if c == "accuracy" { "Accuracy (%)" } else { c.as_str() };
            let _ = write!(s, " {shown} |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---:|".repeat(self.columns.len()));
        s.push('\n');
        let fmt = |v: &Option<f64>, note: &str| match v {
            Some(x) if note.is_empty() => format!("{x:.2}"),
            Some(x) => format!("{x:.2} {note}"),
            None => "-".into(),
        };
        for (name, vals, notes) in &self.rows {
            let _ = write!(s, "| {name} |");
            for (j, v) in vals.iter().enumerate() {
                let _ = write!(s, " {} |", fmt(v, notes.get(j).map_or("", |n| n.as_str())));
            }
            s.push('\n');
        }
        s.push_str("| Average |");
        for v in self.averages() {
            let _ = write!(s, " {} |", fmt(&v, ""));
        }
        s.push('\n');
        s
    }
}

fn ch_n(channel: &str, n: usize) -> String {
    format!("({channel},{n})")
}

fn run_table(meta: &RunMeta, records: &std::collections::BTreeMap<String, SubjectRecord>) -> anyhow::Result<(Table, Vec<Vec<String>>)> {
    let mut rows = Vec::new();
    let mut extra = Vec::new();
    let mut pair_labels: Vec<String> = Vec::new();
    for id in &meta.subjects {
        let r = &records[id];
        match (&r.result, meta.kind) {
            (SubjectResult::Run(a), RunKind::Run) => {
                let best = a.cv.best();
                rows.push((id.clone(), vec![Some(best.mean)], vec![ch_n(&a.cv.selected_channel, a.cv.best_n)]));
                extra.push(vec![
                    format!("{}", best.std),
                    a.cv.selected_channel.clone(),
                    a.cv.best_n.to_string(),
                ]);
            }
            (SubjectResult::Pairs(pairs), RunKind::Pairs) => {
                for p in pairs {
                    if !pair_labels.contains(&p.label) {
                        pair_labels.push(p.label.clone());
                    }
                }
                rows.push((id.clone(), Vec::new(), Vec::new()));
                extra.push(Vec::new());
            }
            (SubjectResult::BaselineErds(b), RunKind::BaselineErds) => {
                rows.push((id.clone(), vec![Some(b.mean)], vec![String::new()]));
                extra.push(vec![format!("{}", b.std)]);
            }
            _ => bail!("subject {id} record does not match run kind {:?}", meta.kind),
        }
    }
    let columns = match meta.kind {
        RunKind::Run => vec!["accuracy".to_string()],
        RunKind::BaselineErds => vec!["accuracy".to_string()],
        RunKind::Pairs => {
            for (row, id) in rows.iter_mut().zip(&meta.subjects) {
                let SubjectResult::Pairs(pairs) = &records[id].result else { unreachable!() };
                for label in &pair_labels {
                    match pairs.iter().find(|p| p.label == *label) {
                        Some(p) => {
                            row.1.push(Some(p.analysis.cv.best().mean));
                            row.2.push(ch_n(&p.analysis.cv.selected_channel, p.analysis.cv.best_n));
                        }
                        None => {
                            row.1.push(None);
                            row.2.push(String::new());
                        }
                    }
                }
            }
            pair_labels
        }
    };
    Ok((Table { columns, rows }, extra))
}

/// Render `summary.csv` and `summary.md` from the subject records in `dir`
/// and return the Markdown. Rendering reads only the stored records, so
/// repeating it gives identical bytes.
pub fn render_run_dir(dir: &Path) -> anyhow::Result<String> {
    let (meta, records) = load_records(dir)?;
    if meta.subjects.is_empty() && meta.failures.is_empty() {
        bail!("run directory {} has no subjects", dir.display());
    }
    let header = meta.provenance.header_line();
    let (table, extra) = run_table(&meta, &records)?;
    let extra_names: &[&str] = match meta.kind {
        RunKind::Run => &["std", "channel", "n"],
        RunKind::BaselineErds => &["std"],
        RunKind::Pairs => &[],
    };
    let csv = table.csv(&header, extra_names, |i| extra[i].clone());

    let title = match meta.kind {
        RunKind::Run => "FRPC accuracy (%) with selected channel and number of bands (ch,n)",
        RunKind::Pairs => "FRPC accuracy (%) per class pair, (ch,n) per cell",
        RunKind::BaselineErds => "ERD/S + AdaBoost baseline accuracy (%)",
    };
    let mut md = format!("# {title}\n\n{header}\n\n");
    if meta.subjects.is_empty() {
        md.push_str("No subject finished.\n");
    } else {
        md.push_str(&table.markdown());
    }
    if !meta.failures.is_empty() {
        md.push_str("\n## Failed subjects\n\n");
        for f in &meta.failures {
            let _ = writeln!(md, "- {}: {}", f.subject, f.error.replace('\n', " "));
        }
    }
    if meta.kind != RunKind::BaselineErds {
        let _ = write!(md, "\nNote: {OPTIMISM_NOTE}.\n");
    }
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    };
    write(SUMMARY_CSV, &csv)?;
    write(SUMMARY_MD, &md)?;
    Ok(md)
}

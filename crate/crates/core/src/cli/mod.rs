//! Command-line front end: batch runs over subjects, class-pair sweeps, the
//! ERD/S baseline, synthetic data, report rendering and file validation.

mod config;
mod render;
mod runner;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgAction, Args, Parser, Subcommand};

pub use config::{ClassSelection, RunConfig};
pub use render::{render_run_dir, SUMMARY_CSV, SUMMARY_MD};
pub use runner::{
    class_pairs, execute, file_stem, group_inputs, load_records, load_subject, BatchOutcome,
    PairResult, Provenance, RunKind, RunMeta, SubjectFailure, SubjectRecord, SubjectResult,
    CONFIG_FILE, META_FILE, SUBJECT_DIR, VERSION,
};

use crate::epochset::{read_epochset, write_epochset};
use crate::filterbank::{Backend, BandSpec};
use crate::synth::{generate, PlantedEffect, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "frpc", version, about = "Single-channel motor-imagery EEG classification")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full pipeline per subject on one class pair.
    Run(RunArgs),
    /// Every class pair of multi-class subjects.
    Pairs(RunArgs),
    /// ERD/S features with the same classifier and cross-validation.
    BaselineErds(RunArgs),
    /// Write a synthetic EpochSet.
    Synth(SynthArgs),
    /// Re-render summary tables of a finished run directory.
    Report {
        run_dir: PathBuf,
    },
    /// Check EpochSet files and print any violations.
    Validate {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration; flags below override its fields.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// EpochSet manifest or directory (repeatable). Replaces config inputs.
    #[arg(short, long = "input")]
    pub inputs: Vec<PathBuf>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Two class names separated by a comma, or "all-pairs".
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    #[arg(long)]
    pub backend: Option<Backend>,
    /// Channels kept after preprocessing.
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<String>>,
    /// Channels scored for selection (default: the kept channels).
    #[arg(long, value_delimiter = ',')]
    pub candidates: Option<Vec<String>>,
    /// Analysis window in seconds after the cue.
    #[arg(long, num_args = 2, value_names = ["START", "END"])]
    pub window: Option<Vec<f64>>,
    /// Line-noise notch frequencies in Hz.
    #[arg(long, value_delimiter = ',')]
    pub notch: Option<Vec<f64>>,
    #[arg(long)]
    pub ica: bool,
    /// Score channels and bands by class separation.
    #[arg(long)]
    pub class_aware: bool,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Boosting rounds.
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
}

impl RunArgs {
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_toml_file(p)?,
            None => RunConfig::default(),
        };
        if !self.inputs.is_empty() {
            cfg.inputs = self.inputs.clone();
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(c) = &self.classes {
            cfg.classes = Some(match c.as_slice() {
                [k] => ClassSelection::Keyword(k.clone()),
                [a, b] => ClassSelection::Pair([a.clone(), b.clone()]),
                _ => bail!("--classes takes two names or \"all-pairs\""),
            });
        }
        let p = &mut cfg.pipeline;
        if let Some(b) = self.backend {
            p.backend = b;
        }
        if let Some(c) = &self.channels {
            p.preprocess.channel_subset = c.clone();
        }
        if let Some(c) = &self.candidates {
            p.candidates = Some(c.clone());
        }
        if let Some(w) = &self.window {
            p.preprocess.analysis_window = (w[0], w[1]);
        }
        if let Some(n) = &self.notch {
            p.preprocess.notch_hz = n.clone();
        }
        p.preprocess.ica_enabled |= self.ica;
        p.class_aware |= self.class_aware;
        if let Some(n) = self.n_max {
            p.n_max = n;
        }
        if let Some(r) = self.rounds {
            p.adaboost.rounds = r;
        }
        if let Some(r) = self.repeats {
            p.cv.repeats = r;
        }
        if let Some(f) = self.folds {
            p.cv.folds = f;
        }
        p.cv.seed = cfg.seed;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SynthArgs {
    /// Output directory for the EpochSet.
    #[arg(short, long)]
    pub out: PathBuf,
    /// TOML synth spec; flags below override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub subject_id: Option<String>,
    #[arg(long)]
    pub trials_per_class: Option<usize>,
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<String>>,
    /// CLASS:CHANNEL:LO-HI:MULT[@START..END], class "*" for all classes,
    /// span in seconds from the cue (repeatable).
    #[arg(long = "effect", value_parser = parse_effect)]
    pub effects: Vec<PlantedEffect>,
}

impl SynthArgs {
    pub fn resolve(&self) -> anyhow::Result<SynthSpec> {
        let mut spec = match &self.spec {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading spec {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing spec {}", p.display()))?
            }
            None => SynthSpec::default(),
        };
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(s) = &self.subject_id {
            spec.subject_id = s.clone();
        }
        if let Some(n) = self.trials_per_class {
            spec.trials_per_class = n;
        }
        if let Some(f) = self.fs {
            spec.fs_hz = f;
        }
        if let Some(c) = &self.classes {
            spec.classes = c.clone();
        }
        if let Some(c) = &self.channels {
            spec.channels = c.clone();
        }
        spec.effects.extend(self.effects.iter().cloned());
        Ok(spec)
    }
}

/// Parse `CLASS:CHANNEL:LO-HI:MULT[@START..END]`.
pub fn parse_effect(s: &str) -> Result<PlantedEffect, String> {
    let (body, span) = match s.split_once('@') {
        Some((b, sp)) => {
            let (a, b2) = sp
                .split_once("..")
                .ok_or_else(|| format!("span {sp:?} must look like START..END"))?;
            let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
            (b, Some((num(a)?, num(b2)?)))
        }
        None => (s, None),
    };
    let parts: Vec<&str> = body.split(':').collect();
    let [class, channel, band, mult] = parts.as_slice() else {
        return Err(format!("{s:?}: expected CLASS:CHANNEL:LO-HI:MULT"));
    };
    let (lo, hi) = band
        .split_once('-')
        .ok_or_else(|| format!("band {band:?} must look like LO-HI"))?;
    let f = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok(PlantedEffect {
        class: (*class != "*").then(|| class.to_string()),
        channel: channel.to_string(),
        band: BandSpec::new(f(lo)?, f(hi)?),
        multiplier: f(mult)?,
        span,
    })
}

/// Run a parsed command. Returns whether everything succeeded.
pub fn dispatch(cli: &Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Run(a) | Command::Pairs(a) | Command::BaselineErds(a) => {
            let kind = match cli.command {
                Command::Run(_) => RunKind::Run,
                Command::Pairs(_) => RunKind::Pairs,
                _ => RunKind::BaselineErds,
            };
            let out = execute(kind, &a.resolve()?)?;
            print!("{}", out.markdown);
            Ok(out.meta.failures.is_empty())
        }
        Command::Synth(a) => {
            let set = generate(&a.resolve()?)?;
            let path = write_epochset(&set, &a.out)?;
            println!("{}", path.display());
            Ok(true)
        }
        Command::Report { run_dir } => {
            print!("{}", render_run_dir(run_dir)?);
            Ok(true)
        }
        Command::Validate { manifests } => {
            let mut ok = true;
            for m in manifests {
                match read_epochset(m) {
                    Ok(s) => println!(
                        "ok {}: subject {}, {} trials x {} channels x {} samples",
                        m.display(),
                        s.subject_id,
                        s.n_trials,
                        s.n_channels(),
                        s.n_samples
                    ),
                    Err(e) => {
                        ok = false;
                        println!("invalid {}: {e}", m.display());
                    }
                }
            }
            Ok(ok)
        }
    }
}

/// Entry point for the binary: exit 0 only on full success.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Command-line front end: `build`, `eval`, `inspect` and `gen-corpus`.
//!
//! Exit codes: 0 on success, 1 for domain failures (unknown node, metric
//! outside its domain), 2 for usage and input errors.

pub mod args;
pub mod build;
pub mod config;
pub mod eval;
pub mod inspect;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pkgraph::synth::{generate, SynthConfig, TYPE_NAMES};
use serde::Serialize;

pub use args::{Cli, Command, GlobalArgs};
pub use build::{cmd_build, BuildResult};
pub use config::Settings;

pub const EXIT_DOMAIN: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_DOMAIN,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::domain(format!("cannot write {}: {e}", path.display())))
}

pub struct GenOutputs {
    pub corpus: PathBuf,
    pub truth: PathBuf,
}

/// Write `corpus.jsonl` and the matching reference facts `truth.jsonl`.
pub fn cmd_gen_corpus(cfg: &SynthConfig, out: &Path) -> Result<GenOutputs, Failure> {
    if !(1..=TYPE_NAMES.len()).contains(&cfg.types) {
        return Err(Failure::usage(format!("types must be between 1 and {}", TYPE_NAMES.len())));
    }
    let synth = generate(cfg);
    fs::create_dir_all(out).map_err(|e| Failure::domain(format!("cannot create {}: {e}", out.display())))?;
    let outputs = GenOutputs {
        corpus: out.join("corpus.jsonl"),
        truth: out.join("truth.jsonl"),
    };
    let mut corpus = Vec::new();
    for l in &synth.listings {
        serde_json::to_writer(&mut corpus, l).expect("listing serializes");
        corpus.push(b'\n');
    }
    let mut truth = Vec::new();
    pkgraph::eval::io::write_edge_set(&synth.edge_set(), &mut truth).expect("in-memory write");
    for (path, data) in [(&outputs.corpus, corpus), (&outputs.truth, truth)] {
        fs::write(path, data).map_err(|e| Failure::domain(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(outputs)
}

/// Run a parsed command line, writing user-facing output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let settings = Settings::from_process(&cli.global)?;
    let print = |out: &mut dyn Write, text: &str| {
        out.write_all(text.as_bytes())
            .map_err(|e| Failure::domain(format!("cannot write output: {e}")))
    };
    match &cli.command {
        Command::Build(a) => {
            let r = cmd_build(&a.corpus, &settings)?;
            let rep = &r.report;
            let compression = rep
                .type_compression
                .map_or_else(|| "n/a".to_string(), |c| format!("{c:.3}"));
            print(
                out,
                &format!(
                    "listings {}  assigned {}  types {}  compression {compression}  assertions {}\nwrote {}\n",
                    rep.listings,
                    rep.assigned,
                    rep.canonical_types,
                    rep.assertions,
                    settings.out.display()
                ),
            )
        }
        Command::Eval(a) => {
            let report = eval::compute(&a.metric)?;
            if let Some(dir) = &cli.global.out {
                fs::create_dir_all(dir).map_err(|e| Failure::domain(format!("cannot create {}: {e}", dir.display())))?;
                write_json(&dir.join(format!("eval_{}.json", report.metric)), &report)?;
            }
            let text = if a.json {
                serde_json::to_string_pretty(&report).expect("serializable") + "\n"
            } else {
                eval::summary(&report)
            };
            print(out, &text)
        }
        Command::Inspect(a) => {
            let path = a.graph.clone().unwrap_or_else(|| settings.out.join(build::GRAPH_FILE));
            let graph = inspect::load_graph(&path)?;
            let id = inspect::find(&graph, &a.node, a.kind.map(Into::into))?;
            print(out, &inspect::render(&graph, id, a.limit))
        }
        Command::GenCorpus(a) => {
            let cfg = SynthConfig {
                listings: a.listings,
                types: a.types,
                seed: settings.seed,
                noise: !a.no_noise,
                images: a.images,
            };
            let o = cmd_gen_corpus(&cfg, &settings.out)?;
            print(out, &format!("wrote {} and {}\n", o.corpus.display(), o.truth.display()))
        }
    }
}

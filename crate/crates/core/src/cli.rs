//! Command-line grammar: single-dash flags, each followed by one value.
//!
//! ```text
//! -model LDA|DMM -corpus <file> [-ntopics <int>] [-alpha <double>] [-beta <double>]
//!     [-niters <int>] [-twords <int>] [-name <string>] [-sstep <int>] [-seed <int>]
//! -model LDAinf|DMMinf -paras <file> -corpus <file> [-niters <int>] [-twords <int>]
//!     [-name <string>] [-sstep <int>] [-seed <int>]
//! -model Eval -label <file> -dir <dir> -prob <file name or suffix>
//! ```

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use crate::corpus::{load_corpus, read_labels};
use crate::dmm::train_dmm;
use crate::error::{Error, Result};
use crate::evaluation::evaluate_files;
use crate::inference::{infer, load_pretrained, InferenceSettings};
use crate::lda::train_lda;
use crate::model::{seeded_rng, ChainOptions, Hyperparams, ModelKind};
use crate::persistence::OutputTarget;

pub const USAGE: &str = "\
usage:
  topicgibbs -model <LDA|DMM> -corpus <file> [-ntopics <int>] [-alpha <double>]
             [-beta <double>] [-niters <int>] [-twords <int>] [-name <string>]
             [-sstep <int>] [-seed <int>]
  topicgibbs -model <LDAinf|DMMinf> -paras <file> -corpus <file> [-niters <int>]
             [-twords <int>] [-name <string>] [-sstep <int>] [-seed <int>]
  topicgibbs -model Eval -label <file> -dir <dir> -prob <file name or suffix>

defaults: -ntopics 20 -alpha 0.1 -beta 0.01 -niters 2000 -twords 20 -name model -sstep 0
-seed is an extension for reproducible runs; without it a random seed is drawn
and recorded in the .paras file. A -beta of 0.1 is a common choice for short texts.
Eval reports the sample standard deviation (n-1 divisor) over matched files.";

const FLAGS: [&str; 14] = [
    "model", "corpus", "ntopics", "alpha", "beta", "niters", "twords", "name", "sstep", "paras",
    "label", "dir", "prob", "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Train {
        corpus: String,
        hp: Hyperparams,
    },
    Infer {
        kind: ModelKind,
        paras: PathBuf,
        corpus: String,
        settings: InferenceSettings,
    },
    Eval {
        label: PathBuf,
        dir: PathBuf,
        prob: String,
    },
    Help,
}

fn usage(message: impl Into<String>) -> Error {
    Error::Usage(message.into())
}

struct Flags(HashMap<&'static str, String>);

impl Flags {
    fn take(&mut self, flag: &str) -> Option<String> {
        self.0.remove(flag)
    }

    fn required(&mut self, flag: &str, mode: &str) -> Result<String> {
        self.take(flag)
            .ok_or_else(|| usage(format!("-model {mode} requires -{flag}")))
    }

    fn number<T: FromStr>(&mut self, flag: &str) -> Result<Option<T>> {
        self.take(flag)
            .map(|v| {
                v.parse()
                    .map_err(|_| usage(format!("-{flag} expects a number, got {v:?}")))
            })
            .transpose()
    }

    fn reject_rest(self, mode: &str) -> Result<()> {
        let mut rest: Vec<&str> = self.0.keys().copied().collect();
        rest.sort_unstable();
        match rest.first() {
            Some(flag) => Err(usage(format!("-{flag} is not accepted by -model {mode}"))),
            None => Ok(()),
        }
    }
}

pub fn parse_args<S: AsRef<str>>(args: &[S]) -> Result<Command> {
    let mut flags = HashMap::new();
    let mut iter = args.iter().map(AsRef::as_ref);
    while let Some(arg) = iter.next() {
        if matches!(arg, "-h" | "-help" | "--help") {
            return Ok(Command::Help);
        }
        let name = arg
            .strip_prefix('-')
            .and_then(|n| FLAGS.iter().find(|f| **f == n))
            .ok_or_else(|| usage(format!("unknown argument {arg:?}")))?;
        let value = iter
            .next()
            .ok_or_else(|| usage(format!("-{name} expects a value")))?;
        if flags.insert(*name, value.to_owned()).is_some() {
            return Err(usage(format!("-{name} given more than once")));
        }
    }
    let mut flags = Flags(flags);
    let mode = flags.take("model").ok_or_else(|| usage("missing -model"))?;

    match mode.as_str() {
        "Eval" => {
            let label = flags.required("label", &mode)?;
            let dir = flags.required("dir", &mode)?;
            let prob = flags.required("prob", &mode)?;
            flags.reject_rest(&mode)?;
            Ok(Command::Eval {
                label: label.into(),
                dir: dir.into(),
                prob,
            })
        }
        "LDA" | "DMM" => {
            let kind: ModelKind = mode.parse()?;
            let corpus = flags.required("corpus", &mode)?;
            let mut hp = Hyperparams::new(kind);
            if let Some(k) = flags.number("ntopics")? {
                hp.num_topics = k;
            }
            if let Some(a) = flags.number("alpha")? {
                hp.alpha = a;
            }
            if let Some(b) = flags.number("beta")? {
                hp.beta = b;
            }
            if let Some(n) = flags.number("niters")? {
                hp.niters = n;
            }
            if let Some(t) = flags.number("twords")? {
                hp.twords = t;
            }
            if let Some(name) = flags.take("name") {
                hp.name = name;
            }
            if let Some(s) = flags.number("sstep")? {
                hp.sstep = s;
            }
            hp.seed = flags.number("seed")?;
            flags.reject_rest(&mode)?;
            hp.validate().map_err(|e| usage(e.to_string()))?;
            Ok(Command::Train { corpus, hp })
        }
        "LDAinf" | "DMMinf" => {
            let kind: ModelKind = mode.parse()?;
            let paras = flags.required("paras", &mode)?;
            let corpus = flags.required("corpus", &mode)?;
            let mut settings = InferenceSettings::default();
            if let Some(n) = flags.number("niters")? {
                settings.niters = n;
            }
            if let Some(t) = flags.number("twords")? {
                settings.twords = t;
            }
            if let Some(name) = flags.take("name") {
                settings.name = name;
            }
            if let Some(s) = flags.number("sstep")? {
                settings.sstep = s;
            }
            settings.seed = flags.number("seed")?;
            flags.reject_rest(&mode)?;
            if settings.niters < 1 {
                return Err(usage("-niters must be at least 1"));
            }
            if settings.name.is_empty() {
                return Err(usage("-name must not be empty"));
            }
            Ok(Command::Infer {
                kind,
                paras: paras.into(),
                corpus,
                settings,
            })
        }
        other => Err(usage(format!(
            "unknown -model {other:?}; expected LDA, DMM, LDAinf, DMMinf or Eval"
        ))),
    }
}

/// Runs a parsed command, writing progress and scores to `out` and
/// warnings to `err`.
pub fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let stdout_err = |e: std::io::Error| Error::io("<stdout>", e);
    match cmd {
        Command::Help => {
            writeln!(out, "{USAGE}").map_err(stdout_err)?;
        }
        Command::Train { corpus, mut hp } => {
            let seed = *hp.seed.get_or_insert_with(rand::random);
            let data = load_corpus(&corpus)?;
            let target = OutputTarget::beside_corpus(&corpus)?;
            writeln!(
                out,
                "{} on {corpus}: {} documents, {} word types, {} tokens, K={}, alpha={}, beta={}, {} iterations, seed {seed}",
                hp.model_kind,
                data.num_docs(),
                data.vocab_size(),
                data.num_tokens(),
                hp.num_topics,
                hp.alpha,
                hp.beta,
                hp.niters,
            )
            .map_err(stdout_err)?;
            let mut rng = seeded_rng(seed);
            let opts = ChainOptions::default();
            if hp.model_kind.is_dmm() {
                train_dmm(&data, &hp, &mut rng, Some(&target), opts)?;
            } else {
                train_lda(&data, &hp, &mut rng, Some(&target), opts)?;
            }
            writeln!(out, "wrote {}.* to {}", hp.name, target.dir.display()).map_err(stdout_err)?;
        }
        Command::Infer {
            kind,
            paras,
            corpus,
            mut settings,
        } => {
            let seed = *settings.seed.get_or_insert_with(rand::random);
            let model = load_pretrained(&paras)?;
            let expected = if model.kind().is_dmm() {
                ModelKind::DmmInf
            } else {
                ModelKind::LdaInf
            };
            if expected != kind {
                return Err(usage(format!(
                    "{} was produced by a {} model; use -model {expected}",
                    paras.display(),
                    model.kind()
                )));
            }
            let target = OutputTarget::beside_corpus(&corpus)?;
            writeln!(
                out,
                "{kind} on {corpus} with {}: K={}, {} iterations, seed {seed}",
                paras.display(),
                model.hp.num_topics,
                settings.niters
            )
            .map_err(stdout_err)?;
            let mut rng = seeded_rng(seed);
            let result = infer(
                &model,
                &corpus,
                &settings,
                &mut rng,
                Some(&target),
                ChainOptions::default(),
            )?;
            if result.corpus.oov_tokens > 0 {
                let msg = if result.all_out_of_vocabulary() {
                    format!("warning: every token of {corpus} is out of vocabulary")
                } else {
                    format!(
                        "warning: dropped {} out-of-vocabulary tokens",
                        result.corpus.oov_tokens
                    )
                };
                writeln!(err, "{msg}").map_err(|e| Error::io("<stderr>", e))?;
            }
            writeln!(out, "wrote {}.* to {}", settings.name, target.dir.display())
                .map_err(stdout_err)?;
        }
        Command::Eval { label, dir, prob } => {
            let labels = read_labels(&label)?;
            let report = evaluate_files(&dir, &prob, &labels)?;
            for r in &report.results {
                writeln!(
                    out,
                    "{}\tpurity={}\tnmi={}",
                    r.file.display(),
                    r.purity,
                    r.nmi
                )
                .map_err(stdout_err)?;
            }
            if report.results.len() > 1 {
                writeln!(
                    out,
                    "mean\tpurity={}\tnmi={}",
                    report.purity.mean, report.nmi.mean
                )
                .map_err(stdout_err)?;
                writeln!(
                    out,
                    "std (sample, n-1)\tpurity={}\tnmi={}",
                    report.purity.std, report.nmi.std
                )
                .map_err(stdout_err)?;
            }
        }
    }
    Ok(())
}

/// Parses and runs `args` (without the program name), returning the
/// process exit status.
pub fn run<S: AsRef<str>>(args: &[S], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = parse_args(args).and_then(|cmd| dispatch(cmd, out, err));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, Error::Usage(_)) {
                let _ = writeln!(err, "{USAGE}");
            }
            1
        }
    }
}

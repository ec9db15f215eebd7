//! The five model artifacts and their on-disk formats.
//!
//! | suffix              | content                                              |
//! |---------------------|------------------------------------------------------|
//! | `.theta`            | one row per document, K probabilities                 |
//! | `.phi`              | one row per topic, V probabilities                    |
//! | `.topWords`         | `Topic k: w1 w2 ...` per topic                        |
//! | `.topicAssignments` | per-token topics (LDA) or one topic per line (DMM)    |
//! | `.paras`            | `key=value` hyperparameters                           |
//!
//! Numbers use the shortest decimal form that parses back to the same
//! `f64`, so seeded runs are byte-reproducible. Every file is written to a
//! temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{top_words, Assignments, GibbsChain, Hyperparams, ModelKind};

pub const THETA: &str = "theta";
pub const PHI: &str = "phi";
pub const TOP_WORDS: &str = "topWords";
pub const ASSIGNMENTS: &str = "topicAssignments";
pub const PARAS: &str = "paras";

/// Written for a DMM document that has no topic (no in-vocabulary tokens).
pub const UNASSIGNED: &str = "-1";

/// Where a run's artifacts go and how it refers to its input corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputTarget {
    pub dir: PathBuf,
    /// Corpus path exactly as given on the command line.
    pub corpus: String,
    pub corpus_abs: PathBuf,
}

impl OutputTarget {
    /// Outputs go next to the corpus file.
    pub fn beside_corpus(corpus: &str) -> Result<Self> {
        let path = Path::new(corpus);
        let corpus_abs = fs::canonicalize(path).map_err(|e| Error::io(path, e))?;
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
            _ => PathBuf::from("."),
        };
        Ok(OutputTarget {
            dir,
            corpus: corpus.to_owned(),
            corpus_abs,
        })
    }
}

pub fn artifact_path(dir: &Path, name: &str, suffix: &str, iteration: Option<usize>) -> PathBuf {
    match iteration {
        Some(it) => dir.join(format!("{name}.{suffix}.{it}")),
        None => dir.join(format!("{name}.{suffix}")),
    }
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn format_matrix(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_theta(theta: &[Vec<f64>], path: &Path) -> Result<()> {
    write_atomic(path, format_matrix(theta).as_bytes())
}

pub fn write_phi(phi: &[Vec<f64>], path: &Path) -> Result<()> {
    write_atomic(path, format_matrix(phi).as_bytes())
}

/// Parses a whitespace-separated matrix such as a `.theta` file. Rows must
/// all have the same length.
pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let format_err = |message: String| Error::Format {
            path: path.to_owned(),
            line: i + 1,
            message,
        };
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| format_err(format!("not a number: {tok:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.is_empty() {
            return Err(format_err("empty row".into()));
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(format_err(format!(
                    "{} columns, expected {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn format_top_words(phi: &[Vec<f64>], vocab: &Vocabulary, twords: usize) -> String {
    let mut out = String::new();
    for (k, row) in phi.iter().enumerate() {
        out.push_str(&format!("Topic {k}:"));
        for (word, _) in top_words(row, vocab, twords) {
            out.push(' ');
            out.push_str(word);
        }
        out.push('\n');
    }
    out
}

pub fn write_top_words(
    phi: &[Vec<f64>],
    vocab: &Vocabulary,
    twords: usize,
    path: &Path,
) -> Result<()> {
    write_atomic(path, format_top_words(phi, vocab, twords).as_bytes())
}

pub fn format_assignments(z: &Assignments) -> String {
    let mut out = String::new();
    match z {
        Assignments::PerToken(rows) => {
            for row in rows {
                let line: Vec<String> = row.iter().map(usize::to_string).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        Assignments::PerDocument(topics) => {
            for t in topics {
                match t {
                    Some(t) => out.push_str(&t.to_string()),
                    None => out.push_str(UNASSIGNED),
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn write_assignments(z: &Assignments, path: &Path) -> Result<()> {
    write_atomic(path, format_assignments(z).as_bytes())
}

/// Reads a `.topicAssignments` file written by a training run. Every topic
/// id must be below `num_topics`.
pub fn read_assignments(path: &Path, per_document: bool, num_topics: usize) -> Result<Assignments> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = line
            .split_whitespace()
            .map(|tok| match tok.parse::<usize>() {
                Ok(t) if t < num_topics => Ok(t),
                _ => Err(Error::Format {
                    path: path.to_owned(),
                    line: i + 1,
                    message: format!("invalid topic id {tok:?} for {num_topics} topics"),
                }),
            })
            .collect::<Result<Vec<usize>>>()?;
        rows.push(row);
    }
    if !per_document {
        return Ok(Assignments::PerToken(rows));
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, row)| match row.as_slice() {
            [t] => Ok(Some(*t)),
            _ => Err(Error::Format {
                path: path.to_owned(),
                line: i + 1,
                message: format!("expected one topic id, found {}", row.len()),
            }),
        })
        .collect::<Result<Vec<_>>>()
        .map(Assignments::PerDocument)
}

/// Contents of a `.paras` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParasRecord {
    pub hp: Hyperparams,
    pub corpus: String,
    pub corpus_abs: String,
}

const PARAS_KEYS: [&str; 11] = [
    "model",
    "corpus",
    "corpus_abs",
    "ntopics",
    "alpha",
    "beta",
    "niters",
    "twords",
    "name",
    "sstep",
    "seed",
];

impl ParasRecord {
    pub fn to_text(&self) -> String {
        let hp = &self.hp;
        let seed = hp.seed.map_or_else(|| "none".to_owned(), |s| s.to_string());
        let values = [
            hp.model_kind.to_string(),
            self.corpus.clone(),
            self.corpus_abs.clone(),
            hp.num_topics.to_string(),
            hp.alpha.to_string(),
            hp.beta.to_string(),
            hp.niters.to_string(),
            hp.twords.to_string(),
            hp.name.clone(),
            hp.sstep.to_string(),
            seed,
        ];
        PARAS_KEYS
            .iter()
            .zip(values)
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |message: String| Error::Paras {
            path: path.to_owned(),
            message,
        };
        let mut values: [Option<&str>; PARAS_KEYS.len()] = [None; PARAS_KEYS.len()];
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected key=value", i + 1)))?;
            let slot = PARAS_KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| err(format!("unknown key {key}")))?;
            if values[slot].replace(value).is_some() {
                return Err(err(format!("duplicate key {key}")));
            }
        }
        let get = |key: &str| -> Result<&str> {
            let slot = PARAS_KEYS.iter().position(|k| *k == key).unwrap();
            values[slot].ok_or_else(|| err(format!("missing key {key}")))
        };
        fn num<T: std::str::FromStr>(
            key: &str,
            value: &str,
            err: &impl Fn(String) -> Error,
        ) -> Result<T> {
            value
                .parse()
                .map_err(|_| err(format!("invalid value {value:?} for key {key}")))
        }

        let model_kind: ModelKind = get("model")?
            .parse()
            .map_err(|e: Error| err(e.to_string()))?;
        let seed = match get("seed")? {
            "none" => None,
            v => Some(num("seed", v, &err)?),
        };
        let hp = Hyperparams {
            model_kind,
            num_topics: num("ntopics", get("ntopics")?, &err)?,
            alpha: num("alpha", get("alpha")?, &err)?,
            beta: num("beta", get("beta")?, &err)?,
            niters: num("niters", get("niters")?, &err)?,
            twords: num("twords", get("twords")?, &err)?,
            name: get("name")?.to_owned(),
            sstep: num("sstep", get("sstep")?, &err)?,
            seed,
        };
        hp.validate().map_err(|e| err(e.to_string()))?;
        Ok(ParasRecord {
            hp,
            corpus: get("corpus")?.to_owned(),
            corpus_abs: get("corpus_abs")?.to_owned(),
        })
    }
}

pub fn write_paras(record: &ParasRecord, path: &Path) -> Result<()> {
    write_atomic(path, record.to_text().as_bytes())
}

pub fn read_paras(path: &Path) -> Result<ParasRecord> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ParasRecord::parse(&text, path)
}

/// Writes the five artifacts for the chain's current state and returns
/// their paths.
pub fn write_outputs<C: GibbsChain>(
    target: &OutputTarget,
    hp: &Hyperparams,
    vocab: &Vocabulary,
    chain: &C,
    iteration: Option<usize>,
) -> Result<Vec<PathBuf>> {
    let dists = chain.distributions()?;
    let path = |suffix| artifact_path(&target.dir, &hp.name, suffix, iteration);
    let paths = [
        path(THETA),
        path(PHI),
        path(TOP_WORDS),
        path(ASSIGNMENTS),
        path(PARAS),
    ];
    write_theta(&dists.theta, &paths[0])?;
    write_phi(&dists.phi, &paths[1])?;
    write_top_words(&dists.phi, vocab, hp.twords, &paths[2])?;
    write_assignments(&chain.state().z, &paths[3])?;
    let record = ParasRecord {
        hp: hp.clone(),
        corpus: target.corpus.clone(),
        corpus_abs: target.corpus_abs.display().to_string(),
    };
    write_paras(&record, &paths[4])?;
    Ok(paths.to_vec())
}

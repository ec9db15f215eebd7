//! Plain-text corpus and gold-label loading.
//!
//! A corpus file holds one document per line with tokens separated by
//! whitespace. Tokens are used verbatim; any normalization (case folding,
//! stop-word removal, frequency cut-offs) has to happen before the file is
//! handed to the toolkit.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Word strings and their integer ids, assigned in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `word`, inserting it if it has not been seen.
    pub fn intern(&mut self, word: &str) -> usize {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = self.words.len();
        self.words.push(word.to_owned());
        self.index.insert(word.to_owned(), id);
        id
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<S> for Vocabulary {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut vocab = Vocabulary::new();
        for w in iter {
            vocab.intern(w.as_ref());
        }
        vocab
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub docs: Vec<Vec<usize>>,
    pub vocab: Vocabulary,
    pub source_path: PathBuf,
}

impl Corpus {
    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    /// Builds a corpus from in-memory text, one document per line.
    pub fn parse(text: &str, source_path: impl Into<PathBuf>) -> Result<Self> {
        let source_path = source_path.into();
        let mut vocab = Vocabulary::new();
        let mut docs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let doc: Vec<usize> = line.split_whitespace().map(|t| vocab.intern(t)).collect();
            if doc.is_empty() {
                return Err(Error::BlankDocument {
                    path: source_path,
                    line: i + 1,
                });
            }
            docs.push(doc);
        }
        if docs.is_empty() {
            return Err(Error::EmptyCorpus { path: source_path });
        }
        Ok(Corpus {
            docs,
            vocab,
            source_path,
        })
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Corpus::parse(&text, path)
}

/// Documents of an unseen corpus mapped through an existing vocabulary.
///
/// Out-of-vocabulary tokens are dropped, so documents may end up empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappedCorpus {
    pub docs: Vec<Vec<usize>>,
    pub oov_tokens: usize,
    pub source_path: PathBuf,
}

impl MappedCorpus {
    pub fn num_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }
}

/// Loads a corpus against a fixed vocabulary. Blank lines are rejected just
/// as in [`load_corpus`]; lines whose tokens are all unknown are kept as
/// empty documents.
pub fn load_mapped_corpus(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<MappedCorpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    let mut oov_tokens = 0;
    for (i, line) in text.lines().enumerate() {
        let mut doc = Vec::new();
        let mut seen = 0;
        for tok in line.split_whitespace() {
            seen += 1;
            match vocab.id(tok) {
                Some(id) => doc.push(id),
                None => oov_tokens += 1,
            }
        }
        if seen == 0 {
            return Err(Error::BlankDocument {
                path: path.to_owned(),
                line: i + 1,
            });
        }
        docs.push(doc);
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus {
            path: path.to_owned(),
        });
    }
    Ok(MappedCorpus {
        docs,
        oov_tokens,
        source_path: path.to_owned(),
    })
}

/// Gold labels, one per document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub labels: Vec<String>,
}

impl LabelSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for LabelSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        LabelSet {
            labels: iter.into_iter().map(Into::into).collect(),
        }
    }
}

/// Reads one label per line, checking the count against the corpus size.
pub fn load_labels(path: impl AsRef<Path>, expected_count: usize) -> Result<LabelSet> {
    let labels = read_labels(path)?;
    if labels.len() != expected_count {
        return Err(Error::LabelCount {
            labels: labels.len(),
            documents: expected_count,
        });
    }
    Ok(labels)
}

/// Reads one label per line without a count check.
pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let label = line.trim();
        if label.is_empty() {
            return Err(Error::BlankLabel {
                path: path.to_owned(),
                line: i + 1,
            });
        }
        labels.push(label.to_owned());
    }
    Ok(LabelSet { labels })
}

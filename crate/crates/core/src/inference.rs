//! Folding unseen documents into a trained model.
//!
//! The trained model's topic-word counts are rebuilt from its corpus and
//! `.topicAssignments` file and then held fixed. New documents are sampled
//! against those frozen counts plus their own live counts; document-level
//! terms (`n_{d,k}` for LDA, `m_k` for DMM) use the new corpus only.

use std::path::{Path, PathBuf};

use rand::Rng;

use crate::corpus::{load_corpus, load_mapped_corpus, MappedCorpus, Vocabulary};
use crate::dmm::DmmSampler;
use crate::error::{Error, Result};
use crate::lda::LdaSampler;
use crate::model::{
    run_chain, Assignments, ChainOptions, CountState, GibbsChain, Hyperparams, ModelKind,
    TopicDistributions, TopicWordCounts,
};
use crate::persistence::{self, read_assignments, read_paras, OutputTarget, ASSIGNMENTS};

#[derive(Debug, Clone)]
pub struct PretrainedModel {
    pub hp: Hyperparams,
    pub train_counts: TopicWordCounts,
    pub vocab: Vocabulary,
    pub corpus_path: PathBuf,
}

impl PretrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.hp.model_kind
    }
}

fn locate_corpus(paras_path: &Path, given: &str, absolute: &str) -> Result<PathBuf> {
    let paras_dir = paras_path.parent().unwrap_or(Path::new("."));
    let candidates = [
        PathBuf::from(absolute),
        PathBuf::from(given),
        paras_dir.join(given),
    ];
    candidates
        .into_iter()
        .find(|p| p.is_file())
        .ok_or_else(|| Error::Paras {
            path: paras_path.to_owned(),
            message: format!("training corpus not found: {given} (resolved {absolute})"),
        })
}

/// Loads a trained model from its `.paras` file, replaying the saved
/// assignments against the training corpus.
pub fn load_pretrained(paras_path: impl AsRef<Path>) -> Result<PretrainedModel> {
    let paras_path = paras_path.as_ref();
    let record = read_paras(paras_path)?;
    let hp = record.hp;
    if hp.model_kind.is_inference() {
        return Err(Error::Paras {
            path: paras_path.to_owned(),
            message: format!(
                "{} parameters do not describe a trained model",
                hp.model_kind
            ),
        });
    }
    let corpus_path = locate_corpus(paras_path, &record.corpus, &record.corpus_abs)?;
    let corpus = load_corpus(&corpus_path)?;

    let paras_dir = paras_path.parent().unwrap_or(Path::new("."));
    let z_path = persistence::artifact_path(paras_dir, &hp.name, ASSIGNMENTS, None);
    let z = read_assignments(&z_path, hp.model_kind.is_dmm(), hp.num_topics)?;

    let mismatch = |message: String| Error::Paras {
        path: z_path.clone(),
        message,
    };
    let mut counts = TopicWordCounts::new(hp.num_topics, corpus.vocab_size());
    match &z {
        Assignments::PerToken(rows) => {
            if rows.len() != corpus.num_docs() {
                return Err(mismatch(format!(
                    "{} assignment lines for {} documents",
                    rows.len(),
                    corpus.num_docs()
                )));
            }
            for (d, (doc, row)) in corpus.docs.iter().zip(rows).enumerate() {
                if doc.len() != row.len() {
                    return Err(mismatch(format!(
                        "line {}: {} assignments for {} tokens",
                        d + 1,
                        row.len(),
                        doc.len()
                    )));
                }
                for (&w, &t) in doc.iter().zip(row) {
                    counts.add(t, w);
                }
            }
        }
        Assignments::PerDocument(topics) => {
            if topics.len() != corpus.num_docs() {
                return Err(mismatch(format!(
                    "{} assignment lines for {} documents",
                    topics.len(),
                    corpus.num_docs()
                )));
            }
            for (doc, t) in corpus.docs.iter().zip(topics) {
                let t = t.expect("training assignments are always present");
                for &w in doc {
                    counts.add(t, w);
                }
            }
        }
    }

    Ok(PretrainedModel {
        hp,
        train_counts: counts,
        vocab: corpus.vocab,
        corpus_path,
    })
}

/// Per-run settings; K, α and β always come from the trained model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceSettings {
    pub niters: usize,
    pub twords: usize,
    pub name: String,
    pub sstep: usize,
    pub seed: Option<u64>,
}

impl Default for InferenceSettings {
    fn default() -> Self {
        InferenceSettings {
            niters: Hyperparams::DEFAULT_NITERS,
            twords: Hyperparams::DEFAULT_TWORDS,
            name: Hyperparams::DEFAULT_NAME.to_owned(),
            sstep: 0,
            seed: None,
        }
    }
}

impl InferenceSettings {
    pub fn hyperparams(&self, model: &PretrainedModel) -> Hyperparams {
        let model_kind = if model.kind().is_dmm() {
            ModelKind::DmmInf
        } else {
            ModelKind::LdaInf
        };
        Hyperparams {
            model_kind,
            num_topics: model.hp.num_topics,
            alpha: model.hp.alpha,
            beta: model.hp.beta,
            niters: self.niters,
            twords: self.twords,
            name: self.name.clone(),
            sstep: self.sstep,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InferenceResult {
    pub corpus: MappedCorpus,
    pub state: CountState,
    pub distributions: TopicDistributions,
}

impl InferenceResult {
    /// True when no token of the unseen corpus is in the training vocabulary.
    pub fn all_out_of_vocabulary(&self) -> bool {
        self.corpus.num_tokens() == 0
    }
}

fn run<C: GibbsChain, R: Rng + ?Sized>(
    chain: &mut C,
    hp: &Hyperparams,
    vocab: &Vocabulary,
    output: Option<&OutputTarget>,
    opts: ChainOptions,
    rng: &mut R,
) -> Result<TopicDistributions> {
    run_chain(
        chain,
        hp.niters,
        hp.sstep,
        opts,
        rng,
        |iteration, chain| match output {
            Some(target) => {
                persistence::write_outputs(target, hp, vocab, chain, iteration).map(|_| ())
            }
            None => Ok(()),
        },
    )?;
    chain.distributions()
}

/// Samples topics for the documents of `corpus_path` against `model`.
/// Out-of-vocabulary tokens are dropped before sampling.
pub fn infer<R: Rng + ?Sized>(
    model: &PretrainedModel,
    corpus_path: impl AsRef<Path>,
    settings: &InferenceSettings,
    rng: &mut R,
    output: Option<&OutputTarget>,
    opts: ChainOptions,
) -> Result<InferenceResult> {
    let hp = settings.hyperparams(model);
    hp.validate()?;
    let corpus = load_mapped_corpus(corpus_path, &model.vocab)?;
    let v = model.vocab.len();
    let frozen = Some(&model.train_counts);
    let (state, distributions) = if hp.model_kind.is_dmm() {
        let mut chain = DmmSampler::new(&corpus.docs, v, &hp, frozen, rng);
        let dists = run(&mut chain, &hp, &model.vocab, output, opts, rng)?;
        (chain.into_state(), dists)
    } else {
        let mut chain = LdaSampler::new(&corpus.docs, v, &hp, frozen, rng);
        let dists = run(&mut chain, &hp, &model.vocab, output, opts, rng)?;
        (chain.into_state(), dists)
    };
    Ok(InferenceResult {
        corpus,
        state,
        distributions,
    })
}

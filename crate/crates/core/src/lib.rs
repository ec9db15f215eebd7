//! Topic models over plain-text corpora trained by collapsed Gibbs sampling.
//!
//! Two models are provided: latent Dirichlet allocation ([`lda`]), where
//! every token carries its own topic, and the Dirichlet multinomial mixture
//! ([`dmm`]), where each document has a single topic, which suits short
//! texts. Trained models can be folded onto unseen corpora ([`inference`])
//! and document-topic outputs scored against gold labels with Purity and
//! NMI ([`evaluation`]).

pub mod cli;
pub mod corpus;
pub mod dmm;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod lda;
pub mod model;
pub mod persistence;

pub use corpus::{load_corpus, load_labels, Corpus, LabelSet, Vocabulary};
pub use error::{Error, Result};
pub use model::{CountState, Hyperparams, ModelKind, TopicDistributions};

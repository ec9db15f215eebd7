//! State shared by the LDA and DMM samplers: hyperparameters, count tables,
//! categorical draws and the θ/φ point estimates.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Generator used by every sampler chain: xoshiro256++ seeded through
/// SplitMix64, so a given seed yields the same stream on every platform.
pub type SamplerRng = Xoshiro256PlusPlus;

pub fn seeded_rng(seed: u64) -> SamplerRng {
    SamplerRng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Lda,
    Dmm,
    LdaInf,
    DmmInf,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lda => "LDA",
            ModelKind::Dmm => "DMM",
            ModelKind::LdaInf => "LDAinf",
            ModelKind::DmmInf => "DMMinf",
        }
    }

    /// True for the one-topic-per-document variants.
    pub fn is_dmm(self) -> bool {
        matches!(self, ModelKind::Dmm | ModelKind::DmmInf)
    }

    pub fn is_inference(self) -> bool {
        matches!(self, ModelKind::LdaInf | ModelKind::DmmInf)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LDA" => Ok(ModelKind::Lda),
            "DMM" => Ok(ModelKind::Dmm),
            "LDAinf" => Ok(ModelKind::LdaInf),
            "DMMinf" => Ok(ModelKind::DmmInf),
            other => Err(Error::Hyperparams(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub model_kind: ModelKind,
    pub num_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub niters: usize,
    pub twords: usize,
    pub name: String,
    pub sstep: usize,
    pub seed: Option<u64>,
}

impl Hyperparams {
    pub const DEFAULT_TOPICS: usize = 20;
    pub const DEFAULT_ALPHA: f64 = 0.1;
    pub const DEFAULT_BETA: f64 = 0.01;
    pub const DEFAULT_NITERS: usize = 2000;
    pub const DEFAULT_TWORDS: usize = 20;
    pub const DEFAULT_NAME: &'static str = "model";

    pub fn new(model_kind: ModelKind) -> Self {
        Hyperparams {
            model_kind,
            num_topics: Self::DEFAULT_TOPICS,
            alpha: Self::DEFAULT_ALPHA,
            beta: Self::DEFAULT_BETA,
            niters: Self::DEFAULT_NITERS,
            twords: Self::DEFAULT_TWORDS,
            name: Self::DEFAULT_NAME.to_owned(),
            sstep: 0,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_topics < 1 {
            return Err(Error::Hyperparams("ntopics must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Hyperparams(format!(
                "alpha must be a positive number, got {}",
                self.alpha
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::Hyperparams(format!(
                "beta must be a positive number, got {}",
                self.beta
            )));
        }
        if self.niters < 1 {
            return Err(Error::Hyperparams("niters must be at least 1".into()));
        }
        if self.name.is_empty() {
            return Err(Error::Hyperparams("name must not be empty".into()));
        }
        Ok(())
    }

    pub fn rng(&self) -> SamplerRng {
        match self.seed {
            Some(seed) => seeded_rng(seed),
            None => SamplerRng::from_entropy(),
        }
    }
}

/// Iterations after which intermediate outputs are written. The final
/// iteration is excluded: it is always written under the unsuffixed names.
pub fn save_points(niters: usize, sstep: usize) -> Vec<usize> {
    if sstep == 0 {
        return Vec::new();
    }
    (1..niters).filter(|it| it % sstep == 0).collect()
}

/// A Gibbs chain with its own count state.
pub trait GibbsChain {
    /// One full pass over every latent assignment.
    fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()>;

    fn state(&self) -> &CountState;

    /// Documents the chain samples over, in corpus order.
    fn docs(&self) -> &[Vec<usize>];

    fn distributions(&self) -> Result<TopicDistributions>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ChainOptions {
    /// Recompute the count tables from the assignments after every sweep.
    pub validate: bool,
}

/// Runs `niters` sweeps, calling `save` with `Some(iteration)` at each
/// intermediate save point and once with `None` after the last sweep.
pub fn run_chain<C, R, F>(
    chain: &mut C,
    niters: usize,
    sstep: usize,
    opts: ChainOptions,
    rng: &mut R,
    mut save: F,
) -> Result<()>
where
    C: GibbsChain,
    R: Rng + ?Sized,
    F: FnMut(Option<usize>, &C) -> Result<()>,
{
    if opts.validate {
        chain.state().check_invariants(chain.docs())?;
    }
    let points = save_points(niters, sstep);
    let mut next = points.iter().copied().peekable();
    for it in 1..=niters {
        chain.sweep(rng)?;
        if opts.validate {
            chain.state().check_invariants(chain.docs())?;
        }
        if next.peek() == Some(&it) {
            next.next();
            save(Some(it), chain)?;
        }
    }
    save(None, chain)
}

/// Topic-word counts `n_{k,w}` (row-major K×V) and topic totals `n_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicWordCounts {
    num_topics: usize,
    vocab_size: usize,
    nkw: Vec<u32>,
    nk: Vec<u32>,
}

impl TopicWordCounts {
    pub fn new(num_topics: usize, vocab_size: usize) -> Self {
        TopicWordCounts {
            num_topics,
            vocab_size,
            nkw: vec![0; num_topics * vocab_size],
            nk: vec![0; num_topics],
        }
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    #[inline]
    pub fn get(&self, topic: usize, word: usize) -> u32 {
        self.nkw[topic * self.vocab_size + word]
    }

    pub fn row(&self, topic: usize) -> &[u32] {
        &self.nkw[topic * self.vocab_size..(topic + 1) * self.vocab_size]
    }

    #[inline]
    pub fn total(&self, topic: usize) -> u32 {
        self.nk[topic]
    }

    pub fn totals(&self) -> &[u32] {
        &self.nk
    }

    #[inline]
    pub fn add(&mut self, topic: usize, word: usize) {
        self.nkw[topic * self.vocab_size + word] += 1;
        self.nk[topic] += 1;
    }

    #[inline]
    pub fn remove(&mut self, topic: usize, word: usize) -> Result<()> {
        let cell = &mut self.nkw[topic * self.vocab_size + word];
        let total = &mut self.nk[topic];
        if *cell == 0 || *total == 0 {
            return Err(Error::CountUnderflow(format!(
                "n[topic={topic}][word={word}] would become negative"
            )));
        }
        *cell -= 1;
        *total -= 1;
        Ok(())
    }
}

/// Current topic assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Assignments {
    /// One topic per token (LDA).
    PerToken(Vec<Vec<usize>>),
    /// One topic per document (DMM). `None` marks a document with no
    /// in-vocabulary tokens during inference; it takes no part in sampling.
    PerDocument(Vec<Option<usize>>),
}

/// Gibbs count tables plus the assignments they were built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountState {
    /// Row per document: tokens of that document assigned to each topic.
    pub ndk: Vec<Vec<u32>>,
    pub words: TopicWordCounts,
    pub z: Assignments,
    /// Documents per topic; maintained for DMM only, empty for LDA.
    pub mk: Vec<u32>,
}

impl CountState {
    pub fn num_topics(&self) -> usize {
        self.words.num_topics()
    }

    pub fn num_docs(&self) -> usize {
        self.ndk.len()
    }

    /// Rebuilds every table from `z` and `docs` and compares it with the
    /// stored tables.
    pub fn check_invariants(&self, docs: &[Vec<usize>]) -> Result<()> {
        let k = self.num_topics();
        let v = self.words.vocab_size();
        if self.ndk.len() != docs.len() {
            return Err(Error::Invariant(format!(
                "{} document rows for {} documents",
                self.ndk.len(),
                docs.len()
            )));
        }
        let mut ndk = vec![vec![0u32; k]; docs.len()];
        let mut words = TopicWordCounts::new(k, v);
        let mut mk = Vec::new();
        match &self.z {
            Assignments::PerToken(z) => {
                if z.len() != docs.len() {
                    return Err(Error::Invariant("assignment rows != documents".into()));
                }
                for (d, (doc, zd)) in docs.iter().zip(z).enumerate() {
                    if doc.len() != zd.len() {
                        return Err(Error::Invariant(format!(
                            "document {d}: {} assignments for {} tokens",
                            zd.len(),
                            doc.len()
                        )));
                    }
                    for (&w, &t) in doc.iter().zip(zd) {
                        if t >= k {
                            return Err(Error::Invariant(format!("topic {t} out of range")));
                        }
                        ndk[d][t] += 1;
                        words.add(t, w);
                    }
                }
            }
            Assignments::PerDocument(z) => {
                if z.len() != docs.len() {
                    return Err(Error::Invariant("assignment rows != documents".into()));
                }
                mk = vec![0u32; k];
                for (d, (doc, zd)) in docs.iter().zip(z).enumerate() {
                    let Some(t) = *zd else {
                        if !doc.is_empty() {
                            return Err(Error::Invariant(format!(
                                "document {d} has tokens but no topic"
                            )));
                        }
                        continue;
                    };
                    if t >= k {
                        return Err(Error::Invariant(format!("topic {t} out of range")));
                    }
                    mk[t] += 1;
                    ndk[d][t] = doc.len() as u32;
                    for &w in doc {
                        words.add(t, w);
                    }
                }
            }
        }
        if ndk != self.ndk {
            return Err(Error::Invariant("document-topic table mismatch".into()));
        }
        if words != self.words {
            return Err(Error::Invariant("topic-word table mismatch".into()));
        }
        if mk != self.mk {
            return Err(Error::Invariant(
                "documents-per-topic table mismatch".into(),
            ));
        }
        let total: usize = docs.iter().map(Vec::len).sum();
        let nk_sum: u64 = self.words.totals().iter().map(|&x| x as u64).sum();
        if nk_sum != total as u64 {
            return Err(Error::Invariant(format!(
                "topic totals sum to {nk_sum}, corpus has {total} tokens"
            )));
        }
        Ok(())
    }
}

/// Draws an index with probability proportional to `weights`, consuming
/// exactly one uniform variate from `rng`.
pub fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let mut total = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidWeights(format!("weight {i} is {w}")));
        }
        total += w;
    }
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::InvalidWeights(format!(
            "weights sum to {total} over {} entries",
            weights.len()
        )));
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return Ok(i);
            }
        }
    }
    // Rounding can leave `target` marginally above the running sum.
    Ok(last_positive)
}

/// Document-topic and topic-word distributions, both row-stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDistributions {
    pub theta: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
}

/// θ_{d,k} = (n_{d,k} + α) / (N_d + Kα).
pub fn estimate_theta_lda(state: &CountState, alpha: f64) -> Vec<Vec<f64>> {
    let k = state.num_topics() as f64;
    state
        .ndk
        .iter()
        .map(|row| {
            let n_d: u32 = row.iter().sum();
            let denom = n_d as f64 + k * alpha;
            row.iter().map(|&c| (c as f64 + alpha) / denom).collect()
        })
        .collect()
}

/// φ_{k,w} = (n_{k,w} + β) / (n_k + Vβ), with `frozen` counts from a
/// trained model added to the live counts when present.
pub fn estimate_phi(
    words: &TopicWordCounts,
    frozen: Option<&TopicWordCounts>,
    beta: f64,
) -> Vec<Vec<f64>> {
    let v = words.vocab_size();
    (0..words.num_topics())
        .map(|k| {
            let base_total = frozen.map_or(0, |f| f.total(k));
            let denom = (words.total(k) + base_total) as f64 + v as f64 * beta;
            (0..v)
                .map(|w| {
                    let base = frozen.map_or(0, |f| f.get(k, w));
                    (words.get(k, w) + base) as f64 + beta
                })
                .map(|num| num / denom)
                .collect()
        })
        .collect()
}

/// The `t` most probable words of one topic, ties broken by lower word id.
pub fn top_words<'v>(phi_row: &[f64], vocab: &'v Vocabulary, t: usize) -> Vec<(&'v str, f64)> {
    let mut ids: Vec<usize> = (0..phi_row.len()).collect();
    ids.sort_by(|&a, &b| phi_row[b].total_cmp(&phi_row[a]).then(a.cmp(&b)));
    ids.into_iter()
        .take(t)
        .map(|w| (vocab.word(w), phi_row[w]))
        .collect()
}

//! Collapsed Gibbs sampling for the Dirichlet multinomial mixture: every
//! document carries exactly one topic.

use rand::Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::model::{
    estimate_phi, run_chain, sample_categorical, Assignments, ChainOptions, CountState, GibbsChain,
    Hyperparams, TopicDistributions, TopicWordCounts,
};
use crate::persistence::{self, OutputTarget};

/// Distinct words of a document with their multiplicities, in ascending
/// word order.
pub fn word_counts(doc: &[usize]) -> Vec<(usize, u32)> {
    let mut sorted = doc.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<(usize, u32)> = Vec::new();
    for w in sorted {
        match out.last_mut() {
            Some((last, c)) if *last == w => *c += 1,
            _ => out.push((w, 1)),
        }
    }
    out
}

/// Assigns every non-empty document a uniformly drawn topic.
pub fn init_dmm<R: Rng + ?Sized>(
    docs: &[Vec<usize>],
    vocab_size: usize,
    num_topics: usize,
    rng: &mut R,
) -> CountState {
    let mut state = CountState {
        ndk: vec![vec![0u32; num_topics]; docs.len()],
        words: TopicWordCounts::new(num_topics, vocab_size),
        z: Assignments::PerDocument(vec![None; docs.len()]),
        mk: vec![0; num_topics],
    };
    for (d, doc) in docs.iter().enumerate() {
        if doc.is_empty() {
            continue;
        }
        let t = rng.gen_range(0..num_topics);
        add_document(&mut state, d, doc, t);
    }
    state
}

fn doc_topic(state: &CountState, d: usize) -> Option<usize> {
    match &state.z {
        Assignments::PerDocument(z) => z[d],
        Assignments::PerToken(_) => None,
    }
}

fn add_document(state: &mut CountState, d: usize, doc: &[usize], topic: usize) {
    if let Assignments::PerDocument(z) = &mut state.z {
        z[d] = Some(topic);
    }
    state.mk[topic] += 1;
    state.ndk[d][topic] = doc.len() as u32;
    for &w in doc {
        state.words.add(topic, w);
    }
}

/// Takes document `d` out of the tables, returning its former topic.
fn remove_document(state: &mut CountState, d: usize, doc: &[usize]) -> Result<Option<usize>> {
    let Some(topic) = doc_topic(state, d) else {
        return Ok(None);
    };
    if state.mk[topic] == 0 {
        return Err(Error::CountUnderflow(format!(
            "m[topic={topic}] would become negative"
        )));
    }
    state.mk[topic] -= 1;
    state.ndk[d][topic] = 0;
    for &w in doc {
        state.words.remove(topic, w)?;
    }
    if let Assignments::PerDocument(z) = &mut state.z {
        z[d] = None;
    }
    Ok(Some(topic))
}

/// Log of the full conditional of one document whose counts have already
/// been removed:
///
/// `ln(m_k + α) − ln(D − 1 + Kα)
///   + Σ_w Σ_{j<c_w} ln(n_{k,w} + β + j) − Σ_{i<N_d} ln(n_k + Vβ + i)`
///
/// `num_docs` is D, the number of documents taking part in sampling.
#[allow(clippy::too_many_arguments)]
pub fn dmm_log_conditional(
    state: &CountState,
    doc_words: &[(usize, u32)],
    doc_len: usize,
    num_docs: usize,
    alpha: f64,
    beta: f64,
    frozen: Option<&TopicWordCounts>,
    log_weights: &mut Vec<f64>,
) -> Result<()> {
    let k = state.num_topics();
    let v_beta = state.words.vocab_size() as f64 * beta;
    let log_norm = (num_docs as f64 - 1.0 + k as f64 * alpha).ln();
    log_weights.clear();
    for t in 0..k {
        let mut lw = (state.mk[t] as f64 + alpha).ln() - log_norm;
        for &(w, c) in doc_words {
            let n = (state.words.get(t, w) + frozen.map_or(0, |f| f.get(t, w))) as f64 + beta;
            for j in 0..c {
                lw += (n + j as f64).ln();
            }
        }
        let n_k = (state.words.total(t) + frozen.map_or(0, |f| f.total(t))) as f64 + v_beta;
        for i in 0..doc_len {
            lw -= (n_k + i as f64).ln();
        }
        if !lw.is_finite() {
            return Err(Error::InvalidWeights(format!(
                "log-weight of topic {t} is {lw}"
            )));
        }
        log_weights.push(lw);
    }
    Ok(())
}

/// Exponentiates log-weights after subtracting their maximum.
pub fn exp_normalized(log_weights: &[f64], weights: &mut Vec<f64>) {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    weights.clear();
    weights.extend(log_weights.iter().map(|&lw| (lw - max).exp()));
}

pub struct DmmSampler<'a> {
    docs: &'a [Vec<usize>],
    doc_words: Vec<Vec<(usize, u32)>>,
    num_active: usize,
    alpha: f64,
    beta: f64,
    frozen: Option<&'a TopicWordCounts>,
    state: CountState,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a> DmmSampler<'a> {
    pub fn new<R: Rng + ?Sized>(
        docs: &'a [Vec<usize>],
        vocab_size: usize,
        hp: &Hyperparams,
        frozen: Option<&'a TopicWordCounts>,
        rng: &mut R,
    ) -> Self {
        let state = init_dmm(docs, vocab_size, hp.num_topics, rng);
        Self::from_state(docs, state, hp, frozen)
    }

    pub fn from_state(
        docs: &'a [Vec<usize>],
        state: CountState,
        hp: &Hyperparams,
        frozen: Option<&'a TopicWordCounts>,
    ) -> Self {
        let k = state.num_topics();
        DmmSampler {
            docs,
            doc_words: docs.iter().map(|d| word_counts(d)).collect(),
            num_active: docs.iter().filter(|d| !d.is_empty()).count(),
            alpha: hp.alpha,
            beta: hp.beta,
            frozen,
            state,
            log_weights: Vec::with_capacity(k),
            weights: Vec::with_capacity(k),
        }
    }

    pub fn into_state(self) -> CountState {
        self.state
    }

    /// θ_d as the normalized conditional of document `d` with its own
    /// counts removed, evaluated at the current state. Documents without
    /// tokens get the uniform row.
    pub fn theta(&self) -> Result<Vec<Vec<f64>>> {
        let k = self.state.num_topics();
        let mut scratch = self.state.clone();
        let mut log_weights = Vec::with_capacity(k);
        let mut weights = Vec::with_capacity(k);
        let mut theta = Vec::with_capacity(self.docs.len());
        for (d, doc) in self.docs.iter().enumerate() {
            let Some(topic) = remove_document(&mut scratch, d, doc)? else {
                theta.push(vec![1.0 / k as f64; k]);
                continue;
            };
            dmm_log_conditional(
                &scratch,
                &self.doc_words[d],
                doc.len(),
                self.num_active,
                self.alpha,
                self.beta,
                self.frozen,
                &mut log_weights,
            )?;
            exp_normalized(&log_weights, &mut weights);
            let total: f64 = weights.iter().sum();
            theta.push(weights.iter().map(|w| w / total).collect());
            add_document(&mut scratch, d, doc, topic);
        }
        Ok(theta)
    }
}

impl GibbsChain for DmmSampler<'_> {
    fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        for (d, doc) in self.docs.iter().enumerate() {
            if remove_document(&mut self.state, d, doc)?.is_none() {
                continue;
            }
            dmm_log_conditional(
                &self.state,
                &self.doc_words[d],
                doc.len(),
                self.num_active,
                self.alpha,
                self.beta,
                self.frozen,
                &mut self.log_weights,
            )?;
            exp_normalized(&self.log_weights, &mut self.weights);
            let topic = sample_categorical(&self.weights, rng)?;
            add_document(&mut self.state, d, doc, topic);
        }
        Ok(())
    }

    fn state(&self) -> &CountState {
        &self.state
    }

    fn docs(&self) -> &[Vec<usize>] {
        self.docs
    }

    fn distributions(&self) -> Result<TopicDistributions> {
        Ok(TopicDistributions {
            theta: self.theta()?,
            phi: estimate_phi(&self.state.words, self.frozen, self.beta),
        })
    }
}

pub fn train_dmm<R: Rng + ?Sized>(
    corpus: &Corpus,
    hp: &Hyperparams,
    rng: &mut R,
    output: Option<&OutputTarget>,
    opts: ChainOptions,
) -> Result<CountState> {
    hp.validate()?;
    let mut sampler = DmmSampler::new(&corpus.docs, corpus.vocab_size(), hp, None, rng);
    run_chain(
        &mut sampler,
        hp.niters,
        hp.sstep,
        opts,
        rng,
        |iteration, chain| match output {
            Some(target) => {
                persistence::write_outputs(target, hp, &corpus.vocab, chain, iteration).map(|_| ())
            }
            None => Ok(()),
        },
    )?;
    Ok(sampler.into_state())
}

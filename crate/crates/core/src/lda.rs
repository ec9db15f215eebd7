//! Collapsed Gibbs sampling for latent Dirichlet allocation.

use rand::Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::model::{
    estimate_phi, estimate_theta_lda, run_chain, sample_categorical, Assignments, ChainOptions,
    CountState, GibbsChain, Hyperparams, TopicDistributions, TopicWordCounts,
};
use crate::persistence::{self, OutputTarget};

/// Assigns every token a uniformly drawn topic and builds the count tables.
pub fn init_lda<R: Rng + ?Sized>(
    docs: &[Vec<usize>],
    vocab_size: usize,
    num_topics: usize,
    rng: &mut R,
) -> CountState {
    let mut ndk = vec![vec![0u32; num_topics]; docs.len()];
    let mut words = TopicWordCounts::new(num_topics, vocab_size);
    let z = docs
        .iter()
        .zip(ndk.iter_mut())
        .map(|(doc, row)| {
            doc.iter()
                .map(|&w| {
                    let t = rng.gen_range(0..num_topics);
                    row[t] += 1;
                    words.add(t, w);
                    t
                })
                .collect()
        })
        .collect();
    CountState {
        ndk,
        words,
        z: Assignments::PerToken(z),
        mk: Vec::new(),
    }
}

/// Unnormalized full conditional of one token whose assignment has already
/// been removed from the tables:
///
/// `(n_{d,k} + α) · (n_{k,w} + β) / (n_k + Vβ)`
///
/// `frozen` holds topic-word counts of a trained model when folding in new
/// documents; they are added to the live topic-word terms only.
pub fn lda_conditional(
    state: &CountState,
    d: usize,
    word: usize,
    alpha: f64,
    beta: f64,
    frozen: Option<&TopicWordCounts>,
    weights: &mut Vec<f64>,
) {
    let k = state.num_topics();
    let v_beta = state.words.vocab_size() as f64 * beta;
    let row = &state.ndk[d];
    weights.clear();
    match frozen {
        None => weights.extend((0..k).map(|t| {
            (row[t] as f64 + alpha) * (state.words.get(t, word) as f64 + beta)
                / (state.words.total(t) as f64 + v_beta)
        })),
        Some(f) => weights.extend((0..k).map(|t| {
            let nkw = state.words.get(t, word) + f.get(t, word);
            let nk = state.words.total(t) + f.total(t);
            (row[t] as f64 + alpha) * (nkw as f64 + beta) / (nk as f64 + v_beta)
        })),
    }
}

/// LDA chain over a set of documents, optionally folded into frozen
/// topic-word counts.
pub struct LdaSampler<'a> {
    docs: &'a [Vec<usize>],
    alpha: f64,
    beta: f64,
    frozen: Option<&'a TopicWordCounts>,
    state: CountState,
    weights: Vec<f64>,
}

impl<'a> LdaSampler<'a> {
    pub fn new<R: Rng + ?Sized>(
        docs: &'a [Vec<usize>],
        vocab_size: usize,
        hp: &Hyperparams,
        frozen: Option<&'a TopicWordCounts>,
        rng: &mut R,
    ) -> Self {
        let state = init_lda(docs, vocab_size, hp.num_topics, rng);
        Self::from_state(docs, state, hp, frozen)
    }

    pub fn from_state(
        docs: &'a [Vec<usize>],
        state: CountState,
        hp: &Hyperparams,
        frozen: Option<&'a TopicWordCounts>,
    ) -> Self {
        LdaSampler {
            docs,
            alpha: hp.alpha,
            beta: hp.beta,
            frozen,
            weights: Vec::with_capacity(state.num_topics()),
            state,
        }
    }

    pub fn into_state(self) -> CountState {
        self.state
    }
}

impl GibbsChain for LdaSampler<'_> {
    fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        lda_sweep(
            self.docs,
            &mut self.state,
            self.alpha,
            self.beta,
            self.frozen,
            &mut self.weights,
            rng,
        )
    }

    fn state(&self) -> &CountState {
        &self.state
    }

    fn docs(&self) -> &[Vec<usize>] {
        self.docs
    }

    fn distributions(&self) -> Result<TopicDistributions> {
        Ok(TopicDistributions {
            theta: estimate_theta_lda(&self.state, self.alpha),
            phi: estimate_phi(&self.state.words, self.frozen, self.beta),
        })
    }
}

/// Visits every token in document order: remove, resample, restore.
pub fn lda_sweep<R: Rng + ?Sized>(
    docs: &[Vec<usize>],
    state: &mut CountState,
    alpha: f64,
    beta: f64,
    frozen: Option<&TopicWordCounts>,
    weights: &mut Vec<f64>,
    rng: &mut R,
) -> Result<()> {
    let mut z = match std::mem::replace(&mut state.z, Assignments::PerToken(Vec::new())) {
        Assignments::PerToken(z) => z,
        other => {
            state.z = other;
            return Err(Error::Invariant(
                "LDA sweep over per-document assignments".into(),
            ));
        }
    };
    let result = (|| {
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = z[d][i];
                let cell = &mut state.ndk[d][old];
                if *cell == 0 {
                    return Err(Error::CountUnderflow(format!(
                        "n[doc={d}][topic={old}] would become negative"
                    )));
                }
                *cell -= 1;
                state.words.remove(old, w)?;

                lda_conditional(state, d, w, alpha, beta, frozen, weights);
                let new = sample_categorical(weights, rng)?;

                z[d][i] = new;
                state.ndk[d][new] += 1;
                state.words.add(new, w);
            }
        }
        Ok(())
    })();
    state.z = Assignments::PerToken(z);
    result
}

/// Trains LDA on `corpus`. Outputs are written to `output` when given,
/// following the save schedule of `hp`.
pub fn train_lda<R: Rng + ?Sized>(
    corpus: &Corpus,
    hp: &Hyperparams,
    rng: &mut R,
    output: Option<&OutputTarget>,
    opts: ChainOptions,
) -> Result<CountState> {
    hp.validate()?;
    let mut sampler = LdaSampler::new(&corpus.docs, corpus.vocab_size(), hp, None, rng);
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

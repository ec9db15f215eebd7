#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::Rng;
use statrs::function::gamma::ln_gamma;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("data")
}

/// Copies the fixture corpus into `<root>/test/` the way the examples in
/// the README lay it out.
pub fn fixture_workspace() -> tempfile::TempDir {
    let root = tempfile::tempdir().unwrap();
    let test = root.path().join("test");
    fs::create_dir(&test).unwrap();
    for f in ["corpus.txt", "corpus.LABEL", "unseenTest.txt"] {
        fs::copy(data_dir().join(f), test.join(f)).unwrap();
    }
    root
}

pub fn run_cli(cwd: &Path, args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topicgibbs"))
        .args(args.split_whitespace())
        .current_dir(cwd)
        .output()
        .expect("failed to launch binary")
}

/// Documents drawn from `topics` disjoint word blocks of `block` words each.
/// Document `d` is drawn from block `d % topics`; a `noise` fraction of its
/// tokens come from anywhere in the vocabulary.
pub fn block_corpus<R: Rng>(
    rng: &mut R,
    docs: usize,
    topics: usize,
    block: usize,
    len: std::ops::RangeInclusive<usize>,
    noise: f64,
) -> (Vec<Vec<usize>>, Vec<usize>) {
    let v = topics * block;
    let mut out = Vec::with_capacity(docs);
    let mut gold = Vec::with_capacity(docs);
    for d in 0..docs {
        let t = d % topics;
        let n = rng.gen_range(len.clone());
        let doc = (0..n)
            .map(|_| {
                if rng.gen::<f64>() < noise {
                    rng.gen_range(0..v)
                } else {
                    t * block + rng.gen_range(0..block)
                }
            })
            .collect();
        out.push(doc);
        gold.push(t);
    }
    (out, gold)
}

pub fn word(id: usize) -> String {
    format!("w{id}")
}

pub fn corpus_text(docs: &[Vec<usize>]) -> String {
    docs.iter()
        .map(|d| d.iter().map(|&w| word(w)).collect::<Vec<_>>().join(" ") + "\n")
        .collect()
}

/// Decodes `index` into `len` binary topic assignments (bit i = slot i).
pub fn binary_assignment(index: usize, len: usize) -> Vec<usize> {
    (0..len).map(|i| (index >> i) & 1).collect()
}

pub fn encode_binary(z: impl IntoIterator<Item = usize>) -> usize {
    z.into_iter().enumerate().map(|(i, t)| t << i).sum()
}

fn normalize_log(log_p: Vec<f64>) -> Vec<f64> {
    let max = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_p.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn ln_dirichlet_multinomial(counts: &[usize], conc: f64) -> f64 {
    let n: usize = counts.iter().sum();
    let total = conc * counts.len() as f64;
    ln_gamma(total) - ln_gamma(n as f64 + total)
        + counts
            .iter()
            .map(|&c| ln_gamma(c as f64 + conc) - ln_gamma(conc))
            .sum::<f64>()
}

/// Exact collapsed LDA posterior over every per-token assignment of a
/// two-topic model, indexed by [`encode_binary`] over tokens in corpus order.
pub fn exact_lda_posterior(docs: &[Vec<usize>], v: usize, alpha: f64, beta: f64) -> Vec<f64> {
    let k = 2;
    let n: usize = docs.iter().map(Vec::len).sum();
    let log_p = (0..1usize << n)
        .map(|idx| {
            let z = binary_assignment(idx, n);
            let mut nkw = vec![vec![0usize; v]; k];
            let mut ndk = vec![vec![0usize; k]; docs.len()];
            let mut pos = 0;
            for (d, doc) in docs.iter().enumerate() {
                for &w in doc {
                    nkw[z[pos]][w] += 1;
                    ndk[d][z[pos]] += 1;
                    pos += 1;
                }
            }
            nkw.iter()
                .map(|row| ln_dirichlet_multinomial(row, beta))
                .sum::<f64>()
                + ndk
                    .iter()
                    .map(|row| ln_dirichlet_multinomial(row, alpha))
                    .sum::<f64>()
        })
        .collect();
    normalize_log(log_p)
}

/// Exact collapsed DMM posterior over every per-document assignment of a
/// two-topic model, indexed by [`encode_binary`] over documents.
pub fn exact_dmm_posterior(docs: &[Vec<usize>], v: usize, alpha: f64, beta: f64) -> Vec<f64> {
    let k = 2;
    let log_p = (0..1usize << docs.len())
        .map(|idx| {
            let z = binary_assignment(idx, docs.len());
            let mut mk = vec![0usize; k];
            let mut nkw = vec![vec![0usize; v]; k];
            for (doc, &t) in docs.iter().zip(&z) {
                mk[t] += 1;
                for &w in doc {
                    nkw[t][w] += 1;
                }
            }
            ln_dirichlet_multinomial(&mk, alpha)
                + nkw
                    .iter()
                    .map(|row| ln_dirichlet_multinomial(row, beta))
                    .sum::<f64>()
        })
        .collect();
    normalize_log(log_p)
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Purity by scanning every (cluster, label) pair.
pub fn brute_purity(clusters: &[usize], labels: &[String]) -> f64 {
    let cs: BTreeSet<usize> = clusters.iter().copied().collect();
    let ls: BTreeSet<&String> = labels.iter().collect();
    let mut total = 0;
    for &c in &cs {
        let mut best = 0;
        for &l in &ls {
            let count = (0..clusters.len())
                .filter(|&i| clusters[i] == c && &labels[i] == l)
                .count();
            best = best.max(count);
        }
        total += best;
    }
    total as f64 / clusters.len() as f64
}

/// NMI in bits by scanning every (cluster, label) pair.
pub fn brute_nmi(clusters: &[usize], labels: &[String]) -> f64 {
    let n = clusters.len() as f64;
    let cs: BTreeSet<usize> = clusters.iter().copied().collect();
    let ls: BTreeSet<&String> = labels.iter().collect();
    let pc = |c: usize| clusters.iter().filter(|&&x| x == c).count() as f64 / n;
    let pl = |l: &String| labels.iter().filter(|x| *x == l).count() as f64 / n;
    let mut mi = 0.0;
    for &c in &cs {
        for &l in &ls {
            let joint = (0..clusters.len())
                .filter(|&i| clusters[i] == c && &labels[i] == l)
                .count() as f64
                / n;
            if joint > 0.0 {
                mi += joint * (joint / (pc(c) * pl(l))).log2();
            }
        }
    }
    let hc: f64 = cs.iter().map(|&c| -pc(c) * pc(c).log2()).sum();
    let hl: f64 = ls.iter().map(|&l| -pl(l) * pl(l).log2()).sum();
    if hc + hl == 0.0 {
        return 1.0;
    }
    mi / ((hc + hl) / 2.0)
}

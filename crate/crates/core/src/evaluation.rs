//! Clustering evaluation of document-topic distributions against gold
//! labels. Each topic is a cluster and each document joins its most
//! probable topic.

use std::collections::HashMap;
use std::fs;
use std::hash::Hash;
use std::path::{Path, PathBuf};

use crate::corpus::LabelSet;
use crate::error::{Error, Result};
use crate::persistence::read_matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub file: PathBuf,
    pub purity: f64,
    pub nmi: f64,
}

/// Mean and sample standard deviation (n − 1 divisor; 0 for a single value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        };
        Summary { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub results: Vec<ClusteringResult>,
    pub purity: Summary,
    pub nmi: Summary,
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax_cluster(row: &[f64]) -> Result<usize> {
    if row.is_empty() {
        return Err(Error::EmptyRow);
    }
    let mut best = 0;
    for (i, &p) in row.iter().enumerate().skip(1) {
        if p > row[best] {
            best = i;
        }
    }
    Ok(best)
}

fn check_lengths(clusters: &[usize], labels: &LabelSet) -> Result<()> {
    if clusters.len() != labels.len() || clusters.is_empty() {
        return Err(Error::LengthMismatch {
            clusters: clusters.len(),
            labels: labels.len(),
        });
    }
    Ok(())
}

/// Joint and marginal counts over (cluster, label) pairs.
struct Contingency {
    joint: HashMap<(usize, usize), usize>,
    clusters: HashMap<usize, usize>,
    classes: HashMap<usize, usize>,
    n: usize,
}

fn dense_ids<T: Eq + Hash>(items: impl IntoIterator<Item = T>) -> Vec<usize> {
    let mut ids = HashMap::new();
    items
        .into_iter()
        .map(|item| {
            let next = ids.len();
            *ids.entry(item).or_insert(next)
        })
        .collect()
}

impl Contingency {
    fn new(clusters: &[usize], labels: &LabelSet) -> Self {
        let classes = dense_ids(labels.labels.iter());
        let mut c = Contingency {
            joint: HashMap::new(),
            clusters: HashMap::new(),
            classes: HashMap::new(),
            n: clusters.len(),
        };
        for (&k, &j) in clusters.iter().zip(&classes) {
            *c.joint.entry((k, j)).or_default() += 1;
            *c.clusters.entry(k).or_default() += 1;
            *c.classes.entry(j).or_default() += 1;
        }
        c
    }
}

/// `(1/N) Σ_k max_j |ω_k ∩ c_j|`
pub fn purity(clusters: &[usize], labels: &LabelSet) -> Result<f64> {
    check_lengths(clusters, labels)?;
    let table = Contingency::new(clusters, labels);
    let mut best: HashMap<usize, usize> = HashMap::new();
    for (&(k, _), &count) in &table.joint {
        let b = best.entry(k).or_default();
        *b = (*b).max(count);
    }
    Ok(best.values().sum::<usize>() as f64 / table.n as f64)
}

fn entropy(counts: &HashMap<usize, usize>, n: f64, log: fn(f64) -> f64) -> f64 {
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * log(p)
        })
        .sum()
}

pub(crate) fn nmi_with_log(
    clusters: &[usize],
    labels: &LabelSet,
    log: fn(f64) -> f64,
) -> Result<f64> {
    check_lengths(clusters, labels)?;
    let table = Contingency::new(clusters, labels);
    let n = table.n as f64;
    let mut mi = 0.0;
    for (&(k, j), &count) in &table.joint {
        let pkj = count as f64 / n;
        let pk = table.clusters[&k] as f64 / n;
        let pj = table.classes[&j] as f64 / n;
        mi += pkj * log(pkj / (pk * pj));
    }
    let h_clusters = entropy(&table.clusters, n, log);
    let h_classes = entropy(&table.classes, n, log);
    let denom = (h_clusters + h_classes) / 2.0;
    if denom == 0.0 {
        // Both partitions consist of a single block.
        return Ok(1.0);
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// `I(Ω; C) / ((H(Ω) + H(C)) / 2)` over empirical frequencies.
pub fn nmi(clusters: &[usize], labels: &LabelSet) -> Result<f64> {
    nmi_with_log(clusters, labels, f64::ln)
}

/// Scores one document-topic matrix.
pub fn evaluate_theta(file: &Path, labels: &LabelSet) -> Result<ClusteringResult> {
    let theta = read_matrix(file)?;
    if theta.len() != labels.len() {
        return Err(Error::RowCount {
            file: file.to_owned(),
            rows: theta.len(),
            labels: labels.len(),
        });
    }
    let clusters = theta
        .iter()
        .map(|row| argmax_cluster(row))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusteringResult {
        file: file.to_owned(),
        purity: purity(&clusters, labels)?,
        nmi: nmi(&clusters, labels)?,
    })
}

/// Regular files in `dir` whose names end with `pattern`, sorted by name.
pub fn matching_files(dir: &Path, pattern: &str) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let name_matches = entry
            .file_name()
            .to_str()
            .is_some_and(|name| name.ends_with(pattern));
        if name_matches && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::NoMatchingFiles {
            dir: dir.to_owned(),
            pattern: pattern.to_owned(),
        });
    }
    Ok(files)
}

pub fn evaluate_files(dir: &Path, pattern: &str, labels: &LabelSet) -> Result<EvaluationReport> {
    let results = matching_files(dir, pattern)?
        .iter()
        .map(|f| evaluate_theta(f, labels))
        .collect::<Result<Vec<_>>>()?;
    let purities: Vec<f64> = results.iter().map(|r| r.purity).collect();
    let nmis: Vec<f64> = results.iter().map(|r| r.nmi).collect();
    Ok(EvaluationReport {
        purity: Summary::of(&purities),
        nmi: Summary::of(&nmis),
        results,
    })
}

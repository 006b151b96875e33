//! Nearest-centroid classification over output vectors.
//!
//! Training outputs are averaged per label into a [`CentroidBank`]; test
//! outputs are ranked by ascending Euclidean distance to the centroids.
//! "Highest vector similarity" is realized as smallest distance: any strictly
//! decreasing map from distance to similarity produces the same ranking, so
//! no similarity score is materialized.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{Array1, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabelSet, NUM_CLASSES};
use crate::error::{Error, Result};

const BANK_VERSION: u32 = 1;

/// 10x10 count matrix indexed `[true label][predicted label]`, rank-1 only.
pub type ConfusionMatrix = [[u64; NUM_CLASSES]; NUM_CLASSES];

/// One averaged output vector attributed to a label. `count` is the number
/// of samples folded into the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidEntry {
    pub label: u8,
    pub count: usize,
    pub vector: Array1<f32>,
}

/// Per-label mean output vectors. [`compute_centroids`] produces exactly one
/// entry per label; [`adapt_centroids`] may attach additional entries, in
/// which case a label's distance is the minimum over its entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidBank {
    width: usize,
    entries: Vec<CentroidEntry>,
}

impl CentroidBank {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn entries(&self) -> &[CentroidEntry] {
        &self.entries
    }

    /// Primary centroid of a label (the mean computed by
    /// [`compute_centroids`]).
    pub fn centroid(&self, label: u8) -> Option<ArrayView1<f32>> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .map(|e| e.vector.view())
    }

    /// Total samples folded into a label's entries.
    pub fn count(&self, label: u8) -> usize {
        self.entries
            .iter()
            .filter(|e| e.label == label)
            .map(|e| e.count)
            .sum()
    }

    /// Distance from `output` to the nearest of `label`'s entries.
    fn label_distance(&self, output: ArrayView1<f32>, label: u8) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.label == label)
            .map(|e| squared_distance(output, e.vector.view()))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Writes the bank as a versioned JSON document.
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        #[derive(Serialize)]
        struct Doc<'a> {
            version: u32,
            width: usize,
            entries: &'a [CentroidEntry],
        }
        let doc = Doc {
            version: BANK_VERSION,
            width: self.width,
            entries: &self.entries,
        };
        fs::write(path, serde_json::to_vec(&doc)?)?;
        Ok(())
    }

    /// Reads a bank written by [`CentroidBank::save_json`].
    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            version: u32,
            width: usize,
            entries: Vec<CentroidEntry>,
        }
        let doc: Doc = serde_json::from_slice(&fs::read(path)?)?;
        if doc.version != BANK_VERSION {
            return Err(Error::UnsupportedVersion {
                what: "centroid bank",
                found: doc.version,
                supported: BANK_VERSION,
            });
        }
        for entry in &doc.entries {
            if entry.label > 9 {
                return Err(Error::UnknownLabel { label: entry.label });
            }
            if entry.vector.len() != doc.width {
                return Err(Error::DimensionMismatch {
                    expected: doc.width,
                    found: entry.vector.len(),
                });
            }
        }
        Ok(Self {
            width: doc.width,
            entries: doc.entries,
        })
    }
}

/// Distance ranking of all labels for one output vector, nearest first.
/// Ties are broken by ascending label so results are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub ordered_labels: Vec<u8>,
    pub distances: Vec<f64>,
}

/// Top-k accuracy figures plus a rank-1 confusion matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_samples: usize,
    pub topk_hits: BTreeMap<usize, u64>,
    pub topk_accuracy: BTreeMap<usize, f64>,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    pub fn top1(&self) -> Option<f64> {
        self.topk_accuracy.get(&1).copied()
    }

    pub fn top3(&self) -> Option<f64> {
        self.topk_accuracy.get(&3).copied()
    }
}

fn squared_distance(a: ArrayView1<f32>, b: ArrayView1<f32>) -> f64 {
    let mut acc = 0.0f64;
    for (&x, &y) in a.iter().zip(b.iter()) {
        let d = f64::from(x) - f64::from(y);
        acc += d * d;
    }
    acc
}

/// Euclidean distance `sqrt(sum_i (a_i - b_i)^2)`, accumulated in f64.
pub fn euclidean_distance(a: ArrayView1<f32>, b: ArrayView1<f32>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(squared_distance(a, b).sqrt())
}

/// Componentwise mean of the output rows of each label 0-9.
///
/// Accumulates in f64 so 60000-summand means do not drift, then stores the
/// centroids in f32. Every label must occur at least once.
pub fn compute_centroids(outputs: ArrayView2<f32>, labels: &LabelSet) -> Result<CentroidBank> {
    if outputs.nrows() != labels.len() {
        return Err(Error::CountMismatch {
            left: outputs.nrows(),
            right: labels.len(),
        });
    }
    let width = outputs.ncols();
    let mut sums = vec![vec![0.0f64; width]; NUM_CLASSES];
    let mut counts = [0usize; NUM_CLASSES];
    for (row, &label) in outputs.rows().into_iter().zip(labels.labels()) {
        let sum = &mut sums[label as usize];
        match row.as_slice() {
            Some(row) => {
                for (s, &v) in sum.iter_mut().zip(row) {
                    *s += f64::from(v);
                }
            }
            None => {
                for (s, &v) in sum.iter_mut().zip(row.iter()) {
                    *s += f64::from(v);
                }
            }
        }
        counts[label as usize] += 1;
    }
    let mut entries = Vec::with_capacity(NUM_CLASSES);
    for label in 0..NUM_CLASSES {
        if counts[label] == 0 {
            return Err(Error::EmptyClass { label: label as u8 });
        }
        let n = counts[label] as f64;
        let vector: Array1<f32> = sums[label].iter().map(|&s| (s / n) as f32).collect();
        entries.push(CentroidEntry {
            label: label as u8,
            count: counts[label],
            vector,
        });
    }
    Ok(CentroidBank { width, entries })
}

/// Ranks all labels for one output by ascending distance, ties by label.
pub fn rank_labels(output: ArrayView1<f32>, bank: &CentroidBank) -> Result<Ranking> {
    if output.len() != bank.width {
        return Err(Error::DimensionMismatch {
            expected: bank.width,
            found: output.len(),
        });
    }
    let mut ranked: Vec<(u8, f64)> = (0..NUM_CLASSES as u8)
        .map(|label| (label, bank.label_distance(output, label)))
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(Ranking {
        ordered_labels: ranked.iter().map(|&(l, _)| l).collect(),
        distances: ranked.iter().map(|&(_, d)| d).collect(),
    })
}

/// Scores test outputs against a bank: a sample counts as a top-k hit when
/// its true label appears among the k nearest centroids. The confusion
/// matrix uses rank-1 predictions only.
pub fn evaluate(
    outputs: ArrayView2<f32>,
    labels: &LabelSet,
    bank: &CentroidBank,
    ks: &[usize],
) -> Result<EvalReport> {
    if outputs.nrows() != labels.len() {
        return Err(Error::CountMismatch {
            left: outputs.nrows(),
            right: labels.len(),
        });
    }
    let n_samples = outputs.nrows();
    if n_samples == 0 {
        return Err(Error::EmptyInput);
    }
    for &k in ks {
        if k == 0 || k > NUM_CLASSES {
            return Err(Error::InvalidTopK { k });
        }
    }

    // rank_histogram[r] counts samples whose true label sits at rank r
    let (rank_histogram, confusion) = outputs
        .rows()
        .into_iter()
        .zip(labels.labels())
        .par_bridge()
        .map(|(row, &label)| {
            let ranking = rank_labels(row, bank).expect("widths already validated");
            let rank = ranking
                .ordered_labels
                .iter()
                .position(|&l| l == label)
                .expect("ranking is a permutation of all labels");
            (rank, label, ranking.ordered_labels[0])
        })
        .fold(
            || ([0u64; NUM_CLASSES], [[0u64; NUM_CLASSES]; NUM_CLASSES]),
            |(mut hist, mut conf), (rank, label, pred)| {
                hist[rank] += 1;
                conf[label as usize][pred as usize] += 1;
                (hist, conf)
            },
        )
        .reduce(
            || ([0u64; NUM_CLASSES], [[0u64; NUM_CLASSES]; NUM_CLASSES]),
            |(mut hist, mut conf), (h, c)| {
                for (a, b) in hist.iter_mut().zip(h) {
                    *a += b;
                }
                for (row_a, row_b) in conf.iter_mut().zip(c) {
                    for (a, b) in row_a.iter_mut().zip(row_b) {
                        *a += b;
                    }
                }
                (hist, conf)
            },
        );

    let mut topk_hits = BTreeMap::new();
    let mut topk_accuracy = BTreeMap::new();
    for &k in ks {
        let hits: u64 = rank_histogram[..k].iter().sum();
        topk_hits.insert(k, hits);
        topk_accuracy.insert(k, hits as f64 / n_samples as f64);
    }
    Ok(EvalReport {
        n_samples,
        topk_hits,
        topk_accuracy,
        confusion,
    })
}

/// Folds one output into a bank, or registers it as an additional centroid
/// when it deviates strongly from its label's nearest entry.
///
/// The deviation threshold is `deviation_factor` times the mean pairwise
/// distance between all existing entries. Below it, the output is folded
/// into the label's nearest entry as a count-weighted running mean; above
/// it, the output becomes a new entry for that label.
pub fn adapt_centroids(
    bank: &CentroidBank,
    output: ArrayView1<f32>,
    label: u8,
    deviation_factor: f64,
) -> Result<CentroidBank> {
    assert!(
        deviation_factor > 0.0 && deviation_factor.is_finite(),
        "deviation_factor must be a positive finite real"
    );
    if output.len() != bank.width {
        return Err(Error::DimensionMismatch {
            expected: bank.width,
            found: output.len(),
        });
    }
    if label > 9 || bank.centroid(label).is_none() {
        return Err(Error::UnknownLabel { label });
    }

    let mut pair_sum = 0.0f64;
    let mut pair_count = 0u64;
    for (i, a) in bank.entries.iter().enumerate() {
        for b in &bank.entries[i + 1..] {
            pair_sum += squared_distance(a.vector.view(), b.vector.view()).sqrt();
            pair_count += 1;
        }
    }
    let threshold = deviation_factor * pair_sum / pair_count as f64;

    let (nearest_idx, nearest_distance) = bank
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.label == label)
        .map(|(i, e)| (i, squared_distance(output, e.vector.view()).sqrt()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("label verified present");

    let mut adapted = bank.clone();
    if nearest_distance > threshold {
        adapted.entries.push(CentroidEntry {
            label,
            count: 1,
            vector: output.to_owned(),
        });
    } else {
        let entry = &mut adapted.entries[nearest_idx];
        let old_count = entry.count as f64;
        let new_count = old_count + 1.0;
        for (c, &o) in entry.vector.iter_mut().zip(output.iter()) {
            *c = ((f64::from(*c) * old_count + f64::from(o)) / new_count) as f32;
        }
        entry.count += 1;
    }
    Ok(adapted)
}

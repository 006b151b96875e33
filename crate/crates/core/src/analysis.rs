//! Output-smoothing diagnostics: variance statistics over output vectors.
//!
//! Two readings of "variance of the output vectors" are computed and
//! reported side by side:
//!
//! - within-vector: the population variance across the 784 components of a
//!   single output vector, averaged over vectors ([`vector_variance`],
//!   the `mean/min/max_variance` report fields);
//! - per-dimension: the population variance of each output dimension across
//!   all vectors, averaged over dimensions
//!   ([`per_dimension_variance_mean`], the `per_dimension_mean_variance`
//!   report field).
//!
//! The depth-sweep behavior of the two differs sharply: the within-vector
//! statistic is nearly depth-independent for one or more hidden layers
//! (about half the binary hidden units fire, fixing the output spread),
//! while the per-dimension statistic decreases with depth to a plateau as
//! outputs for different samples smooth toward each other. Reports carry
//! both so either reading can be reproduced.

use ndarray::{ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which outputs a variance report was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceSource {
    TestOutputs,
    TrainOutputs,
}

impl std::fmt::Display for VarianceSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VarianceSource::TestOutputs => write!(f, "test_outputs"),
            VarianceSource::TrainOutputs => write!(f, "train_outputs"),
        }
    }
}

/// Variance statistics over a set of output vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub n_vectors: usize,
    /// Mean over vectors of the within-vector variance.
    pub mean_variance: f64,
    pub min_variance: f64,
    pub max_variance: f64,
    /// Mean over dimensions of the across-vector variance (the alternative
    /// reading; see module docs).
    pub per_dimension_mean_variance: f64,
    pub source: VarianceSource,
}

/// Population variance across a vector's own components:
/// `(1/width) * sum_i (v_i - mean(v))^2`, accumulated in f64.
pub fn vector_variance(v: ArrayView1<f32>) -> f64 {
    let n = v.len();
    assert!(n >= 1, "vector_variance needs at least one component");
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for &x in v.iter() {
        let x = f64::from(x);
        sum += x;
        sum_sq += x * x;
    }
    let n = n as f64;
    let mean = sum / n;
    (sum_sq / n - mean * mean).max(0.0)
}

/// Mean over dimensions of each dimension's population variance across rows.
pub fn per_dimension_variance_mean(outputs: ArrayView2<f32>) -> Result<f64> {
    let n = outputs.nrows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let width = outputs.ncols();
    if width == 0 {
        return Err(Error::EmptyInput);
    }
    let mut sums = vec![0.0f64; width];
    let mut sum_sqs = vec![0.0f64; width];
    for row in outputs.rows() {
        match row.as_slice() {
            Some(row) => {
                for ((s, q), &x) in sums.iter_mut().zip(&mut sum_sqs).zip(row) {
                    let x = f64::from(x);
                    *s += x;
                    *q += x * x;
                }
            }
            None => {
                for ((s, q), &x) in sums.iter_mut().zip(&mut sum_sqs).zip(row.iter()) {
                    let x = f64::from(x);
                    *s += x;
                    *q += x * x;
                }
            }
        }
    }
    let n = n as f64;
    let total: f64 = sums
        .iter()
        .zip(&sum_sqs)
        .map(|(&s, &q)| {
            let mean = s / n;
            (q / n - mean * mean).max(0.0)
        })
        .sum();
    Ok(total / width as f64)
}

/// Within-vector variance statistics (mean/min/max over rows), plus the
/// per-dimension alternative, for one output matrix.
pub fn mean_output_variance(
    outputs: ArrayView2<f32>,
    source: VarianceSource,
) -> Result<VarianceReport> {
    let n = outputs.nrows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let variances: Vec<f64> = outputs
        .rows()
        .into_iter()
        .par_bridge()
        .map(vector_variance)
        .collect();
    // par_bridge does not preserve order; mean/min/max do not care
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0f64;
    for &v in &variances {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    Ok(VarianceReport {
        n_vectors: n,
        mean_variance: sum / n as f64,
        min_variance: min,
        max_variance: max,
        per_dimension_mean_variance: per_dimension_variance_mean(outputs)?,
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    /// Two-pass reference: explicit mean, then squared deviations.
    fn two_pass_variance(v: &[f32]) -> f64 {
        let n = v.len() as f64;
        let mean = v.iter().map(|&x| f64::from(x)).sum::<f64>() / n;
        v.iter()
            .map(|&x| {
                let d = f64::from(x) - mean;
                d * d
            })
            .sum::<f64>()
            / n
    }

    #[test]
    fn vector_variance_examples() {
        assert_eq!(vector_variance(array![0.0f32, 0.0, 1.0, 1.0].view()), 0.25);
        assert_eq!(vector_variance(array![3.5f32, 3.5, 3.5].view()), 0.0);
        let v = vector_variance(array![1.0f32, 2.0, 3.0].view());
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_two_pass_oracle() {
        let v: Vec<f32> = (0..97).map(|i| ((i * 37 % 19) as f32).sin() * 2.0).collect();
        let got = vector_variance(ndarray::aview1(&v));
        let want = two_pass_variance(&v);
        assert!((got - want).abs() < 1e-6);
    }

    #[test]
    fn report_over_single_row() {
        let outputs = array![[0.0f32, 0.0, 1.0, 1.0]];
        let report = mean_output_variance(outputs.view(), VarianceSource::TestOutputs).unwrap();
        assert_eq!(report.n_vectors, 1);
        assert_eq!(report.mean_variance, 0.25);
        assert_eq!(report.min_variance, 0.25);
        assert_eq!(report.max_variance, 0.25);
    }

    #[test]
    fn report_averages_row_variances() {
        // rows with variances 0.25 and 0.0
        let outputs = array![[0.0f32, 0.0, 1.0, 1.0], [2.0f32, 2.0, 2.0, 2.0]];
        let report = mean_output_variance(outputs.view(), VarianceSource::TrainOutputs).unwrap();
        assert_eq!(report.mean_variance, 0.125);
        assert_eq!(report.min_variance, 0.0);
        assert_eq!(report.max_variance, 0.25);
        assert!(report.min_variance <= report.mean_variance);
        assert!(report.mean_variance <= report.max_variance);
        assert_eq!(report.source, VarianceSource::TrainOutputs);
    }

    #[test]
    fn empty_input_is_rejected() {
        let outputs = Array2::<f32>::zeros((0, 4));
        assert!(matches!(
            mean_output_variance(outputs.view(), VarianceSource::TestOutputs),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            per_dimension_variance_mean(outputs.view()),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn per_dimension_differs_from_within_vector() {
        // within-vector: row variances 0.25 and 2.25, mean 1.25
        // per-dimension: column variances 0.0 and 1.0, mean 0.5
        let outputs = array![[0.0f32, 1.0], [0.0f32, 3.0]];
        let report = mean_output_variance(outputs.view(), VarianceSource::TestOutputs).unwrap();
        assert_eq!(report.mean_variance, 1.25);
        assert_eq!(report.per_dimension_mean_variance, 0.5);
    }

    #[test]
    fn variance_is_translation_invariant_and_scales_quadratically() {
        let v: Vec<f32> = (0..64).map(|i| ((i * 13 % 31) as f32) * 0.1).collect();
        let base = vector_variance(ndarray::aview1(&v));

        let shifted: Vec<f32> = v.iter().map(|&x| x + 5.25).collect();
        let shifted_var = vector_variance(ndarray::aview1(&shifted));
        assert!((base - shifted_var).abs() < 1e-6);

        let alpha = 1.75f32;
        let scaled: Vec<f32> = v.iter().map(|&x| alpha * x).collect();
        let scaled_var = vector_variance(ndarray::aview1(&scaled));
        let expected = f64::from(alpha) * f64::from(alpha) * base;
        assert!((scaled_var - expected).abs() / expected < 1e-5);
    }

    #[test]
    fn mean_variance_is_permutation_invariant() {
        let outputs = Array2::from_shape_fn((12, 6), |(i, j)| ((i * 7 + j * 3) % 13) as f32);
        let report = mean_output_variance(outputs.view(), VarianceSource::TestOutputs).unwrap();

        let mut reversed = Array2::zeros((12, 6));
        for i in 0..12 {
            reversed.row_mut(i).assign(&outputs.row(11 - i));
        }
        let rev_report =
            mean_output_variance(reversed.view(), VarianceSource::TestOutputs).unwrap();
        assert!((report.mean_variance - rev_report.mean_variance).abs() < 1e-12);
        assert_eq!(report.min_variance, rev_report.min_variance);
        assert_eq!(report.max_variance, rev_report.max_variance);
        assert_eq!(
            report.per_dimension_mean_variance,
            rev_report.per_dimension_mean_variance
        );
    }
}

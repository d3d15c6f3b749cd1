//! Confusion matrices and the scores derived from them.
//!
//! `C[j][k]` counts samples of actual class `j` predicted as class `k`.
//! Per class, two marginal ratios exist: `C_jj` over the row sum (actual
//! class) and `C_jj` over the column sum (predicted class). Naming these
//! "precision" and "recall" is convention dependent, so both are reported
//! under neutral names; F1 is their harmonic mean and does not depend on
//! which is which.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    m: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(m: usize) -> Self {
        ConfusionMatrix {
            m,
            counts: vec![0; m * m],
        }
    }

    /// Row-major `m × m` counts.
    pub fn from_counts(m: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != m * m {
            return Err(Error::LengthMismatch {
                left: counts.len(),
                right: m * m,
            });
        }
        Ok(ConfusionMatrix { m, counts })
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let m = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::LengthMismatch {
                left: r.len(),
                right: m,
            });
        }
        Ok(ConfusionMatrix {
            m,
            counts: rows.concat(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.m
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.m + predicted]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.m.max(1))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.m).map(|j| self.get(j, j)).sum()
    }

    pub fn row_sum(&self, j: usize) -> u64 {
        (0..self.m).map(|k| self.get(j, k)).sum()
    }

    pub fn col_sum(&self, k: usize) -> u64 {
        (0..self.m).map(|j| self.get(j, k)).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = ConfusionMatrix::zeros(self.m);
        for j in 0..self.m {
            for k in 0..self.m {
                t.counts[k * self.m + j] = self.get(j, k);
            }
        }
        t
    }

    /// Off-diagonal counts with both actual and predicted class in `block`.
    pub fn block_off_diagonal(&self, block: Range<usize>) -> u64 {
        let mut s = 0;
        for j in block.clone() {
            for k in block.clone() {
                if j != k {
                    s += self.get(j, k);
                }
            }
        }
        s
    }
}

pub fn confusion(preds: &[usize], truth: &[usize], m: usize) -> Result<ConfusionMatrix> {
    if preds.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: truth.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let mut c = ConfusionMatrix::zeros(m);
    for (&p, &t) in preds.iter().zip(truth) {
        for label in [p, t] {
            if label >= m {
                return Err(Error::LabelOutOfRange { label, classes: m });
            }
        }
        c.counts[t * m + p] += 1;
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    /// `C_jj / Σ_k C_jk`: fraction of actual class `j` recognized.
    pub row_ratio: Vec<f64>,
    /// `C_jj / Σ_i C_ij`: fraction of predictions of class `j` that were right.
    pub col_ratio: Vec<f64>,
    pub f1: Vec<f64>,
    pub macro_f1: f64,
    /// Classes with an empty row or column; their undefined ratios are 0.
    pub degenerate_classes: Vec<usize>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn harmonic(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

pub fn scores(c: &ConfusionMatrix) -> Result<Scores> {
    let n = c.total();
    if n == 0 {
        return Err(Error::Empty("confusion matrix"));
    }
    let m = c.n_classes();
    let mut row_ratio = Vec::with_capacity(m);
    let mut col_ratio = Vec::with_capacity(m);
    let mut f1 = Vec::with_capacity(m);
    let mut degenerate_classes = Vec::new();
    for j in 0..m {
        let (rs, cs) = (c.row_sum(j), c.col_sum(j));
        if rs == 0 || cs == 0 {
            degenerate_classes.push(j);
        }
        let r = ratio(c.get(j, j), rs);
        let p = ratio(c.get(j, j), cs);
        row_ratio.push(r);
        col_ratio.push(p);
        f1.push(harmonic(r, p));
    }
    let macro_f1 = f1.iter().sum::<f64>() / m as f64;
    Ok(Scores {
        accuracy: c.trace() as f64 / n as f64,
        row_ratio,
        col_ratio,
        f1,
        macro_f1,
        degenerate_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_count() {
        let c = confusion(&[0, 1, 1, 1], &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(
            c,
            ConfusionMatrix::from_rows(&[vec![1, 1], vec![0, 2]]).unwrap()
        );
        let d = confusion(&[2, 0, 1], &[2, 0, 1], 3).unwrap();
        assert_eq!(d.trace(), 3);
        assert_eq!(d.total(), 3);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(confusion(&[], &[], 2), Err(Error::Empty(_))));
        assert!(matches!(
            confusion(&[0], &[0, 1], 2),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            confusion(&[2], &[0], 2),
            Err(Error::LabelOutOfRange { .. })
        ));
        assert!(scores(&ConfusionMatrix::zeros(3)).is_err());
    }

    #[test]
    fn two_by_two_by_hand() {
        let c = ConfusionMatrix::from_rows(&[vec![3, 1], vec![2, 4]]).unwrap();
        let s = scores(&c).unwrap();
        assert_eq!(s.accuracy, 0.7);
        // rows: 3/4, 4/6; columns: 3/5, 4/5
        let expect_row = [0.75, 4.0 / 6.0];
        let expect_col = [0.6, 0.8];
        for j in 0..2 {
            assert!((s.row_ratio[j] - expect_row[j]).abs() < 1e-15);
            assert!((s.col_ratio[j] - expect_col[j]).abs() < 1e-15);
        }
        // F1_0 = 2·0.75·0.6/1.35 = 2/3, F1_1 = 2·(2/3)·0.8/(22/15) = 8/11
        assert!((s.f1[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.f1[1] - 8.0 / 11.0).abs() < 1e-15);
        assert!((s.macro_f1 - (2.0 / 3.0 + 8.0 / 11.0) / 2.0).abs() < 1e-15);
        assert!(s.degenerate_classes.is_empty());
    }

    #[test]
    fn identity_is_perfect() {
        let preds: Vec<usize> = (0..16).flat_map(|k| [k, k]).collect();
        let s = scores(&confusion(&preds, &preds, 16).unwrap()).unwrap();
        assert_eq!(s.accuracy, 1.0);
        assert_eq!(s.macro_f1, 1.0);
    }

    #[test]
    fn single_predicted_class() {
        // balanced truth, everything predicted as class 5
        let truth: Vec<usize> = (0..16).flat_map(|k| [k; 10]).collect();
        let preds = vec![5; truth.len()];
        let s = scores(&confusion(&preds, &truth, 16).unwrap()).unwrap();
        assert!((s.accuracy - 1.0 / 16.0).abs() < 1e-15);
        // class 5: row ratio 1, column ratio 1/16
        let f1_5 = harmonic(1.0, 1.0 / 16.0);
        assert!((s.f1[5] - f1_5).abs() < 1e-15);
        assert!((s.macro_f1 - f1_5 / 16.0).abs() < 1e-15);
        assert_eq!(s.degenerate_classes.len(), 15);
    }

    #[test]
    fn block_mass() {
        let c = ConfusionMatrix::from_rows(&[
            vec![5, 1, 0, 0],
            vec![2, 5, 0, 9],
            vec![0, 0, 5, 3],
            vec![0, 0, 4, 5],
        ])
        .unwrap();
        assert_eq!(c.block_off_diagonal(0..2), 3);
        assert_eq!(c.block_off_diagonal(2..4), 7);
        assert_eq!(c.transpose().get(1, 3), 0);
        assert_eq!(c.transpose().get(3, 1), 9);
    }
}

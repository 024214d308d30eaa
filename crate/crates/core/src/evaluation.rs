//! Error, confusion and classification rate of a label map.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rbf::Prediction;

/// Label of a rejected pixel.
pub const UNKNOWN: u16 = u16::MAX;
/// Ground-truth label of a pixel that carries no class.
pub const UNLABELED: u16 = 0;

/// Per-pixel labels, row-major. Classes are `1..=K`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u16>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u16>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::Shape { expected: width * height, found: labels.len() });
        }
        Ok(LabelMap { width, height, labels })
    }

    pub fn filled(width: usize, height: usize, label: u16) -> Self {
        LabelMap { width, height, labels: vec![label; width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.labels[y * self.width + x]
    }

    pub fn unknown_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == UNKNOWN).count()
    }

    /// Largest class label present, ignoring unlabeled and unknown pixels.
    pub fn max_class(&self) -> u16 {
        self.labels.iter().copied().filter(|&l| l != UNKNOWN).max().unwrap_or(0)
    }

    /// Mask of pixels that carry a class label.
    pub fn labeled_mask(&self) -> Vec<bool> {
        self.labels.iter().map(|&l| l != UNLABELED && l != UNKNOWN).collect()
    }
}

impl From<Prediction> for u16 {
    fn from(p: Prediction) -> u16 {
        match p {
            Prediction::Class(c) => c,
            Prediction::Unknown => UNKNOWN,
        }
    }
}

/// Counts by (truth, prediction). Rows are true classes `1..=K`; columns are
/// predicted classes `1..=K` followed by an unknown column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    class_count: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(class_count: usize) -> Self {
        ConfusionMatrix { class_count, counts: vec![0; class_count * (class_count + 1)] }
    }

    /// Builds the matrix from `(truth, prediction)` label pairs.
    pub fn from_pairs(class_count: usize, pairs: impl IntoIterator<Item = (u16, u16)>) -> Result<Self> {
        let mut m = ConfusionMatrix::new(class_count);
        for (t, p) in pairs {
            m.record(t, p)?;
        }
        Ok(m)
    }

    /// Rebuilds a matrix from its row-major `K × (K+1)` counts.
    pub fn from_counts(class_count: usize, counts: Vec<u64>) -> Result<Self> {
        let expected = class_count * (class_count + 1);
        if counts.len() != expected {
            return Err(Error::Shape { expected, found: counts.len() });
        }
        Ok(ConfusionMatrix { class_count, counts })
    }

    /// Row-major `K × (K+1)` counts.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn record(&mut self, truth: u16, pred: u16) -> Result<()> {
        let k = self.class_count;
        let row = match (truth as usize).checked_sub(1) {
            Some(r) if r < k && truth != UNKNOWN => r,
            _ => return Err(Error::Input(alloc::format!("true label {truth} is outside 1..={k}"))),
        };
        let col = if pred == UNKNOWN {
            k
        } else {
            match (pred as usize).checked_sub(1) {
                Some(c) if c < k => c,
                _ => return Err(Error::Input(alloc::format!("predicted label {pred} is outside 1..={k}"))),
            }
        };
        self.counts[row * (k + 1) + col] += 1;
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Count for true class `truth` predicted as `pred` (both 1-based;
    /// `pred` may be [`UNKNOWN`]).
    pub fn count(&self, truth: u16, pred: u16) -> u64 {
        let k = self.class_count;
        let col = if pred == UNKNOWN { k } else { pred as usize - 1 };
        self.counts[(truth as usize - 1) * (k + 1) + col]
    }

    /// Row `truth` including the unknown column.
    pub fn row(&self, truth: u16) -> &[u64] {
        let k = self.class_count;
        let r = truth as usize - 1;
        &self.counts[r * (k + 1)..(r + 1) * (k + 1)]
    }

    pub fn row_total(&self, truth: u16) -> u64 {
        self.row(truth).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (1..=self.class_count as u16).map(|c| self.count(c, c)).sum()
    }

    pub fn unknown(&self) -> u64 {
        (1..=self.class_count as u16).map(|c| self.count(c, UNKNOWN)).sum()
    }

    /// Percentage of pixels assigned their true class.
    pub fn classification_rate(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => 100.0 * self.correct() as f64 / t as f64,
        }
    }

    /// `100 - classification_rate`.
    pub fn error_rate(&self) -> f64 {
        100.0 - self.classification_rate()
    }

    /// Percentage of class `truth` pixels predicted as `pred`.
    pub fn confusion_rate(&self, truth: u16, pred: u16) -> f64 {
        match self.row_total(truth) {
            0 => 0.0,
            t => 100.0 * self.count(truth, pred) as f64 / t as f64,
        }
    }
}

fn check_maps(pred: &LabelMap, truth: &LabelMap, mask: &[bool]) -> Result<usize> {
    if pred.width != truth.width || pred.height != truth.height {
        return Err(Error::Input(alloc::format!(
            "label maps differ in size: {}x{} vs {}x{}",
            pred.width, pred.height, truth.width, truth.height
        )));
    }
    if mask.len() != truth.labels.len() {
        return Err(Error::Shape { expected: truth.labels.len(), found: mask.len() });
    }
    let evaluated = mask.iter().filter(|&&m| m).count();
    if evaluated == 0 {
        return Err(Error::Input("the evaluation mask selects no pixel".into()));
    }
    Ok(evaluated)
}

/// Percentage of masked pixels whose prediction equals the truth. Unknown
/// predictions count as errors.
pub fn classification_rate(pred: &LabelMap, truth: &LabelMap, mask: &[bool]) -> Result<f64> {
    let evaluated = check_maps(pred, truth, mask)?;
    let correct = pred
        .labels
        .iter()
        .zip(&truth.labels)
        .zip(mask)
        .filter(|((p, t), m)| **m && p == t && **p != UNKNOWN)
        .count();
    Ok(100.0 * correct as f64 / evaluated as f64)
}

/// Confusion matrix over the masked pixels.
pub fn confusion(pred: &LabelMap, truth: &LabelMap, mask: &[bool], class_count: usize) -> Result<ConfusionMatrix> {
    check_maps(pred, truth, mask)?;
    ConfusionMatrix::from_pairs(
        class_count,
        pred.labels.iter().zip(&truth.labels).zip(mask).filter(|(_, m)| **m).map(|((p, t), _)| (*t, *p)),
    )
}

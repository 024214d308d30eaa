//! Gaussian RBF classifier with a linear output layer.
//!
//! Hidden unit `j` responds `exp(-‖x - c_j‖² / (2 σ_j²))`. Class scores are
//! `W · φ(x) + b`, trained against one-hot targets, so a confident score is
//! close to 1. The predicted class is the arg-max score; when the best
//! score stays below the rejection threshold the pixel is reported as
//! unknown.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::linalg::cholesky_solve;
use crate::math::{self, squared_distance};

/// Default rejection threshold on one-hot-scaled scores.
pub const DEFAULT_REJECT_THRESHOLD: f64 = 0.2;
/// Default ridge factor for the output layer.
pub const DEFAULT_RIDGE: f64 = 1e-6;
/// Neighbouring centers averaged by the width heuristic.
pub const WIDTH_NEIGHBOURS: usize = 2;

/// Result of classifying one feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prediction {
    /// Class label in `1..=K`.
    Class(u16),
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RbfModel {
    centers: Vec<Vec<f64>>,
    widths: Vec<f64>,
    /// `K` rows of `H` weights.
    weights: Option<Vec<f64>>,
    biases: Option<Vec<f64>>,
    reject_threshold: f64,
    class_count: usize,
}

impl RbfModel {
    /// An untrained model: centers and widths only.
    pub fn new(centers: Vec<Vec<f64>>, widths: Vec<f64>, class_count: usize, reject_threshold: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Input("an RBF model needs at least one center".into()));
        }
        if widths.len() != centers.len() {
            return Err(Error::Shape { expected: centers.len(), found: widths.len() });
        }
        let dim = centers[0].len();
        if let Some(c) = centers.iter().find(|c| c.len() != dim) {
            return Err(Error::Shape { expected: dim, found: c.len() });
        }
        if widths.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Config("RBF widths must be positive and finite".into()));
        }
        if class_count == 0 || class_count > u16::MAX as usize - 1 {
            return Err(Error::Config(alloc::format!("class count {class_count} is out of range")));
        }
        if !(reject_threshold >= 0.0) || !reject_threshold.is_finite() {
            return Err(Error::Config("rejection threshold must be a non-negative number".into()));
        }
        Ok(RbfModel { centers, widths, weights: None, biases: None, reject_threshold, class_count })
    }

    /// A model with a given output layer (`weights` is `K`×`H`, row-major).
    pub fn with_output(mut self, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        self.set_output(weights, biases)?;
        Ok(self)
    }

    pub fn set_output(&mut self, weights: Vec<f64>, biases: Vec<f64>) -> Result<()> {
        let expected = self.class_count * self.hidden_count();
        if weights.len() != expected {
            return Err(Error::Shape { expected, found: weights.len() });
        }
        if biases.len() != self.class_count {
            return Err(Error::Shape { expected: self.class_count, found: biases.len() });
        }
        if weights.iter().chain(&biases).any(|w| !w.is_finite()) {
            return Err(Error::Config("output weights must be finite".into()));
        }
        self.weights = Some(weights);
        self.biases = Some(biases);
        Ok(())
    }

    pub fn set_widths(&mut self, widths: Vec<f64>) -> Result<()> {
        if widths.len() != self.hidden_count() {
            return Err(Error::Shape { expected: self.hidden_count(), found: widths.len() });
        }
        if widths.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Config("RBF widths must be positive and finite".into()));
        }
        self.widths = widths;
        Ok(())
    }

    pub fn set_reject_threshold(&mut self, theta: f64) -> Result<()> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::Config("rejection threshold must be a non-negative number".into()));
        }
        self.reject_threshold = theta;
        Ok(())
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn biases(&self) -> Option<&[f64]> {
        self.biases.as_deref()
    }

    pub fn reject_threshold(&self) -> f64 {
        self.reject_threshold
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn hidden_count(&self) -> usize {
        self.centers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn is_trained(&self) -> bool {
        self.weights.is_some()
    }

    pub fn hidden_activations(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.hidden_count()];
        self.activations_into(x, &mut out)?;
        Ok(out)
    }

    fn activations_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape { expected: self.input_dim(), found: x.len() });
        }
        for ((o, c), s) in out.iter_mut().zip(&self.centers).zip(&self.widths) {
            *o = math::exp(-squared_distance(x, c) / (2.0 * s * s));
        }
        Ok(())
    }

    /// Class scores `W·φ(x) + b`.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (Some(w), Some(b)) = (&self.weights, &self.biases) else {
            return Err(Error::State("the output layer has not been trained"));
        };
        let phi = self.hidden_activations(x)?;
        let h = self.hidden_count();
        Ok(b.iter().enumerate().map(|(k, bk)| bk + w[k * h..(k + 1) * h].iter().zip(&phi).map(|(a, p)| a * p).sum::<f64>()).collect())
    }

    /// Arg-max class, or [`Prediction::Unknown`] when the threshold is
    /// positive and the best score falls below it.
    pub fn classify(&self, x: &[f64]) -> Result<Prediction> {
        let scores = self.scores(x)?;
        let (best, score) = scores
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &s)| if s > acc.1 { (k, s) } else { acc });
        if self.reject_threshold > 0.0 && !(score >= self.reject_threshold) {
            return Ok(Prediction::Unknown);
        }
        Ok(Prediction::Class(best as u16 + 1))
    }

    /// Fraction of `samples` classified as their label (unknown counts as wrong).
    pub fn rate(&self, samples: &[(FeatureVector, u16)]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::Input("no samples to score".into()));
        }
        let mut correct = 0usize;
        for (x, label) in samples {
            if self.classify(x.as_slice())? == Prediction::Class(*label) {
                correct += 1;
            }
        }
        Ok(correct as f64 / samples.len() as f64)
    }

    /// Ridge least squares from hidden activations to one-hot targets. The
    /// biases are not penalized. Returns the training classification rate
    /// as a fraction.
    pub fn fit_output_weights(&mut self, samples: &[(FeatureVector, u16)], ridge: f64) -> Result<f64> {
        if !(ridge >= 0.0) || !ridge.is_finite() {
            return Err(Error::Config("ridge factor must be a non-negative number".into()));
        }
        let k = self.class_count;
        let h = self.hidden_count();
        let mut per_class = vec![0usize; k];
        for (_, label) in samples {
            match (*label as usize).checked_sub(1) {
                Some(c) if c < k => per_class[c] += 1,
                _ => return Err(Error::Input(alloc::format!("label {label} is outside 1..={k}"))),
            }
        }
        if let Some(c) = per_class.iter().position(|&n| n == 0) {
            return Err(Error::Input(alloc::format!("class {} has no training samples", c + 1)));
        }

        let n = samples.len() as f64;
        let mut phi = vec![0.0; samples.len() * h];
        for (row, (x, _)) in phi.chunks_mut(h).zip(samples) {
            self.activations_into(x.as_slice(), row)?;
        }
        let mut phi_mean = vec![0.0; h];
        for row in phi.chunks(h) {
            phi_mean.iter_mut().zip(row).for_each(|(m, v)| *m += v / n);
        }
        let t_mean: Vec<f64> = per_class.iter().map(|&c| c as f64 / n).collect();

        // gram = Φcᵀ Φc + λ I, rhs = Φcᵀ Tc
        let mut gram = vec![0.0; h * h];
        let mut rhs = vec![0.0; h * k];
        let mut centered = vec![0.0; h];
        for (row, (_, label)) in phi.chunks(h).zip(samples) {
            centered.iter_mut().zip(row.iter().zip(&phi_mean)).for_each(|(c, (v, m))| *c = v - m);
            for i in 0..h {
                for j in 0..=i {
                    gram[i * h + j] += centered[i] * centered[j];
                }
                for (c, tm) in t_mean.iter().enumerate() {
                    let t = if c + 1 == *label as usize { 1.0 } else { 0.0 };
                    rhs[i * k + c] += centered[i] * (t - tm);
                }
            }
        }
        for i in 0..h {
            for j in 0..i {
                gram[j * h + i] = gram[i * h + j];
            }
            gram[i * h + i] += ridge;
        }
        let solved = cholesky_solve(&gram, h, &rhs, k)?;

        let mut weights = vec![0.0; k * h];
        let mut biases = t_mean.clone();
        for c in 0..k {
            for j in 0..h {
                weights[c * h + j] = solved[j * k + c];
                biases[c] -= phi_mean[j] * solved[j * k + c];
            }
        }
        self.set_output(weights, biases)?;
        self.rate(samples)
    }
}

/// Width of each center: mean distance to its `neighbours` nearest other
/// centers. Coincident centers fall back to the mean positive width (or 1).
pub fn initial_widths(centers: &[Vec<f64>], neighbours: usize) -> Vec<f64> {
    let mut widths: Vec<f64> = centers
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut d: Vec<f64> = centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, o)| math::sqrt(squared_distance(c, o)))
                .collect();
            d.sort_unstable_by(f64::total_cmp);
            let q = neighbours.min(d.len());
            if q == 0 { 0.0 } else { d[..q].iter().sum::<f64>() / q as f64 }
        })
        .collect();
    let positive: Vec<f64> = widths.iter().copied().filter(|w| *w > 0.0).collect();
    let fallback = if positive.is_empty() { 1.0 } else { positive.iter().sum::<f64>() / positive.len() as f64 };
    for w in &mut widths {
        if !(*w > 0.0) {
            *w = fallback;
        }
    }
    widths
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector(v.to_vec())
    }

    fn one_hot_model(theta: f64) -> RbfModel {
        let centers = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let mut w = vec![0.0; 9];
        for k in 0..3 {
            w[k * 3 + k] = 1.0;
        }
        RbfModel::new(centers, vec![0.1; 3], 3, theta).unwrap().with_output(w, vec![0.0; 3]).unwrap()
    }

    #[test]
    fn activation_values() {
        let m = RbfModel::new(vec![vec![0.0, 0.0]], vec![2.0], 1, 0.0).unwrap();
        assert_eq!(m.hidden_activations(&[0.0, 0.0]).unwrap(), vec![1.0]);
        let at_sigma = m.hidden_activations(&[2.0, 0.0]).unwrap()[0];
        assert!((at_sigma - libm::exp(-0.5)).abs() < 1e-15);
        let wide = RbfModel::new(vec![vec![0.0]], vec![1e12], 1, 0.0).unwrap();
        assert!((wide.hidden_activations(&[100.0]).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!(matches!(m.hidden_activations(&[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn one_hot_construction_classifies_centers() {
        let m = one_hot_model(0.0);
        assert_eq!(m.classify(&[0.0, 0.0]).unwrap(), Prediction::Class(1));
        assert_eq!(m.classify(&[1.0, 0.0]).unwrap(), Prediction::Class(2));
        assert_eq!(m.classify(&[0.0, 1.0]).unwrap(), Prediction::Class(3));
    }

    #[test]
    fn rejection_threshold() {
        let m = one_hot_model(1.5);
        assert_eq!(m.classify(&[0.0, 0.0]).unwrap(), Prediction::Unknown);
        assert_eq!(m.classify(&[0.4, 0.4]).unwrap(), Prediction::Unknown);
        // far from every center: scores ~0 are rejected at 0.2 but kept at 0
        assert_eq!(one_hot_model(0.2).classify(&[5.0, 5.0]).unwrap(), Prediction::Unknown);
        assert_eq!(one_hot_model(0.0).classify(&[5.0, 5.0]).unwrap(), Prediction::Class(1));
    }

    #[test]
    fn bias_shift_changes_rejection_only() {
        let base = one_hot_model(0.0);
        let shifted = base.clone().with_output(base.weights().unwrap().to_vec(), vec![-3.0; 3]).unwrap();
        for x in [[0.0, 0.0], [0.9, 0.1], [0.2, 0.8], [0.5, 0.5]] {
            assert_eq!(base.classify(&x).unwrap(), shifted.classify(&x).unwrap());
        }
        let mut rejecting = shifted.clone();
        rejecting.set_reject_threshold(0.2).unwrap();
        assert_eq!(rejecting.classify(&[0.0, 0.0]).unwrap(), Prediction::Unknown);
        let mut r0 = base.clone();
        r0.set_reject_threshold(0.2).unwrap();
        assert_eq!(r0.classify(&[0.0, 0.0]).unwrap(), Prediction::Class(1));
    }

    #[test]
    fn ties_go_to_lowest_class() {
        let m = RbfModel::new(vec![vec![0.0]], vec![1.0], 3, 0.0).unwrap().with_output(vec![1.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(m.classify(&[0.0]).unwrap(), Prediction::Class(1));
    }

    #[test]
    fn untrained_model_refuses() {
        let m = RbfModel::new(vec![vec![0.0]], vec![1.0], 2, 0.2).unwrap();
        assert!(matches!(m.classify(&[0.0]), Err(Error::State(_))));
    }

    #[test]
    fn construction_validation() {
        assert!(RbfModel::new(vec![], vec![], 1, 0.0).is_err());
        assert!(RbfModel::new(vec![vec![0.0]], vec![0.0], 1, 0.0).is_err());
        assert!(RbfModel::new(vec![vec![0.0]], vec![1.0], 0, 0.0).is_err());
        assert!(RbfModel::new(vec![vec![0.0]], vec![1.0], 1, -0.1).is_err());
        assert!(RbfModel::new(vec![vec![0.0], vec![0.0, 1.0]], vec![1.0, 1.0], 1, 0.0).is_err());
        let m = RbfModel::new(vec![vec![0.0]], vec![1.0], 2, 0.0).unwrap();
        assert!(m.clone().with_output(vec![1.0], vec![0.0, 0.0]).is_err());
        assert!(m.with_output(vec![1.0, f64::NAN], vec![0.0, 0.0]).is_err());
    }

    fn separable_toy() -> Vec<(FeatureVector, u16)> {
        let mut s = Vec::new();
        for i in 0..10 {
            let t = i as f64 * 0.01;
            s.push((fv(&[0.1 + t, 0.2]), 1));
            s.push((fv(&[0.8 - t, 0.7]), 2));
        }
        s
    }

    #[test]
    fn least_squares_separates_toy() {
        // The 2-class toy is symmetric about (0.45, 0.45); one center per
        // class yields activations that a least-squares oracle separates.
        let mut m = RbfModel::new(vec![vec![0.15, 0.2], vec![0.75, 0.7]], vec![0.3, 0.3], 2, 0.2).unwrap();
        let rate = m.fit_output_weights(&separable_toy(), 1e-10).unwrap();
        assert_eq!(rate, 1.0);
        assert_eq!(m.classify(&[0.15, 0.2]).unwrap(), Prediction::Class(1));
        assert_eq!(m.classify(&[0.75, 0.7]).unwrap(), Prediction::Class(2));
    }

    #[test]
    fn conflicting_labels_cannot_be_fit() {
        let samples = vec![(fv(&[0.5]), 1), (fv(&[0.5]), 2), (fv(&[0.1]), 1)];
        let mut m = RbfModel::new(vec![vec![0.1], vec![0.5]], vec![0.2, 0.2], 2, 0.0).unwrap();
        let rate = m.fit_output_weights(&samples, 1e-6).unwrap();
        assert!(rate < 1.0);
    }

    #[test]
    fn huge_ridge_leaves_only_biases() {
        let samples = separable_toy();
        let mut m = RbfModel::new(vec![vec![0.15, 0.2], vec![0.75, 0.7]], vec![0.3, 0.3], 2, 0.0).unwrap();
        m.fit_output_weights(&samples, 1e12).unwrap();
        assert!(m.weights().unwrap().iter().all(|w| w.abs() < 1e-9));
        let s = m.scores(&[0.3, 0.3]).unwrap();
        for (sk, bk) in s.iter().zip(m.biases().unwrap()) {
            assert!((sk - bk).abs() < 1e-9);
        }
        // balanced classes: both biases approach the class frequency
        assert!(m.biases().unwrap().iter().all(|b| (b - 0.5).abs() < 1e-6));
    }

    #[test]
    fn missing_class_is_rejected() {
        let samples = vec![(fv(&[0.1]), 1), (fv(&[0.2]), 1)];
        let mut m = RbfModel::new(vec![vec![0.1]], vec![0.2], 2, 0.0).unwrap();
        assert!(matches!(m.fit_output_weights(&samples, 1e-6), Err(Error::Input(_))));
        let bad = vec![(fv(&[0.1]), 3)];
        assert!(matches!(m.fit_output_weights(&bad, 1e-6), Err(Error::Input(_))));
    }

    #[test]
    fn width_rescaling_refit_is_consistent() {
        let samples = separable_toy();
        let centers = vec![vec![0.15, 0.2], vec![0.75, 0.7]];
        for scale in [0.5, 1.0, 2.0] {
            let mut m = RbfModel::new(centers.clone(), vec![0.3 * scale; 2], 2, 0.0).unwrap();
            assert_eq!(m.fit_output_weights(&samples, 1e-8).unwrap(), 1.0);
        }
    }

    #[test]
    fn width_heuristic() {
        let centers = vec![vec![0.0], vec![1.0], vec![3.0]];
        let w = initial_widths(&centers, 2);
        assert_eq!(w, vec![2.0, 1.5, 2.5]);
        assert_eq!(initial_widths(&[vec![0.0], vec![2.0]], 2), vec![2.0, 2.0]);
        assert_eq!(initial_widths(&[vec![0.5], vec![0.5]], 2), vec![1.0, 1.0]);
    }
}

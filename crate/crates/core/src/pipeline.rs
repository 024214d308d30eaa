//! End-to-end training and classification.
//!
//! Training runs in four stages, each on its own random stream derived from
//! the configured seed:
//!
//! 1. sample `NbrTra` labeled pixels per class and extract their features;
//! 2. learning phase: per class, the encoded samples are the antigens of a
//!    clonal selection run whose memory antibodies, decoded, become refined
//!    prototypes;
//! 3. a GNG-U network fitted to all prototypes places the `NbrNeur` hidden
//!    units, widths come from the nearest-center heuristic and the output
//!    layer from a ridge fit on the training samples;
//! 4. optimization phase: the ant-foraging minimizer tunes log-widths and
//!    output weights against the training misclassification rate, starting
//!    from the ridge solution.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::api::{self, ApiParams, SearchSpace};
use crate::clonalg::{AntibodyPool, Clonalg, ClonalgParams, MutationSchedule};
use crate::error::{Error, Result};
use crate::evaluation::{ConfusionMatrix, LabelMap, UNKNOWN, UNLABELED};
use crate::features::{self, BitString, FeatureVector, Raster, FEATURES_PER_BAND};
use crate::gngu::{self, GnguParams};
use crate::math;
use crate::rbf::{self, RbfModel};
use crate::rng::{stream, stream_rng};

/// Every tunable of a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// NbrNeur: hidden units (GNG-U node cap).
    pub nbr_neur: usize,
    /// NbrAnt.
    pub nbr_ant: usize,
    /// NbrSit: hunting sites per ant.
    pub nbr_sit: usize,
    /// P_local: ant patience.
    pub p_local: usize,
    /// NbrItr: API iterations.
    pub nbr_itr: usize,
    /// NbrLar: low-affinity antibodies replaced per exposure.
    pub nbr_lar: usize,
    /// NbrTra: training pixels per class.
    pub nbr_tra: usize,
    /// Coe: cloning coefficient.
    pub coe: f64,
    /// Gen: CLONALG generations.
    pub gen: usize,
    /// Ncm: antibodies selected for cloning and mutation.
    pub ncm: usize,

    pub a_site: f64,
    pub a_local: f64,
    pub heterogeneous: bool,
    pub a_site_min: f64,
    pub a_site_max: f64,
    pub local_ratio: f64,
    pub nest_period: usize,
    pub stagnation: Option<usize>,
    pub max_evaluations: Option<u64>,

    /// Antibodies per class population (memory + remainder).
    pub pool_size: usize,
    pub p_min: f64,
    pub p_max: f64,

    pub window: usize,
    pub quant_bits: u32,
    pub reject_threshold: f64,
    pub ridge: f64,
    /// GNG-U settings; `max_nodes` is taken from `nbr_neur`.
    pub gngu: GnguParams,

    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let api = ApiParams::default();
        let mutation = MutationSchedule::default();
        RunConfig {
            nbr_neur: 12,
            nbr_ant: 24,
            nbr_sit: 12,
            p_local: 15,
            nbr_itr: 35,
            nbr_lar: 0,
            nbr_tra: 21,
            coe: 10.0,
            gen: 30,
            ncm: 10,
            a_site: api.a_site,
            a_local: api.a_local,
            heterogeneous: true,
            a_site_min: api.a_site_min,
            a_site_max: api.a_site_max,
            local_ratio: api.local_ratio,
            nest_period: api.nest_period,
            stagnation: None,
            max_evaluations: None,
            pool_size: 50,
            p_min: mutation.p_min,
            p_max: mutation.p_max,
            window: features::DEFAULT_WINDOW,
            quant_bits: features::DEFAULT_QUANT_BITS,
            reject_threshold: rbf::DEFAULT_REJECT_THRESHOLD,
            ridge: rbf::DEFAULT_RIDGE,
            gngu: GnguParams::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    /// CLONALG settings for one class with `antigens` training samples of
    /// `string_length` bits.
    pub fn clonalg_params(&self, antigens: usize, string_length: usize) -> ClonalgParams {
        ClonalgParams {
            pop_size: self.pool_size,
            select_count: self.ncm,
            clone_factor: self.coe,
            generations: self.gen,
            replace_count: self.nbr_lar,
            memory_size: antigens,
            string_length,
            mutation: MutationSchedule { p_min: self.p_min, p_max: self.p_max },
        }
    }

    pub fn api_params(&self) -> ApiParams {
        ApiParams {
            nbr_ant: self.nbr_ant,
            nbr_sit: self.nbr_sit,
            patience: self.p_local,
            nbr_itr: self.nbr_itr,
            a_site: self.a_site,
            a_local: self.a_local,
            heterogeneous: self.heterogeneous,
            a_site_min: self.a_site_min,
            a_site_max: self.a_site_max,
            local_ratio: self.local_ratio,
            nest_period: self.nest_period,
            stagnation: self.stagnation,
            max_evaluations: self.max_evaluations,
        }
    }

    pub fn gngu_params(&self) -> GnguParams {
        GnguParams { max_nodes: self.nbr_neur, ..self.gngu.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nbr_tra == 0 {
            return Err(Error::Config("NbrTra must be at least 1".into()));
        }
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::Config(alloc::format!("window must be odd and positive, got {}", self.window)));
        }
        if !(1..=32).contains(&self.quant_bits) {
            return Err(Error::Config(alloc::format!("quantization must use 1..=32 bits, got {}", self.quant_bits)));
        }
        if !(self.reject_threshold >= 0.0) || !self.reject_threshold.is_finite() {
            return Err(Error::Config("rejection threshold must be a non-negative number".into()));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::Config("ridge factor must be a non-negative number".into()));
        }
        self.clonalg_params(self.nbr_tra, 1).validate()?;
        self.api_params().validate()?;
        self.gngu_params().validate()
    }
}

/// Labeled training samples with the pixels they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    pub class_count: usize,
    /// `(feature vector, class)` pairs, grouped by class.
    pub samples: Vec<(FeatureVector, u16)>,
    /// `(x, y)` of each sample.
    pub pixels: Vec<(usize, usize)>,
}

impl TrainingSet {
    /// Samples of class `label`.
    pub fn class_samples(&self, label: u16) -> impl Iterator<Item = &FeatureVector> {
        self.samples.iter().filter(move |(_, l)| *l == label).map(|(f, _)| f)
    }
}

/// Draws `nbr_tra` pixels per class uniformly without replacement.
pub fn sample_training_set<R: Rng + ?Sized>(
    raster: &Raster,
    labels: &LabelMap,
    cfg: &RunConfig,
    rng: &mut R,
) -> Result<TrainingSet> {
    if labels.width != raster.width() || labels.height != raster.height() {
        return Err(Error::Input(alloc::format!(
            "label map is {}x{} but the raster is {}x{}",
            labels.width,
            labels.height,
            raster.width(),
            raster.height()
        )));
    }
    let class_count = labels.max_class() as usize;
    if class_count == 0 {
        return Err(Error::Input("the label map contains no labeled pixel".into()));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for (i, &l) in labels.labels.iter().enumerate() {
        if l != UNLABELED && l != UNKNOWN {
            by_class[l as usize - 1].push(i);
        }
    }
    let mut samples = Vec::with_capacity(class_count * cfg.nbr_tra);
    let mut pixels = Vec::with_capacity(class_count * cfg.nbr_tra);
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < cfg.nbr_tra {
            return Err(Error::Input(alloc::format!(
                "class {} has {} labeled pixels, NbrTra requires {}",
                c + 1,
                members.len(),
                cfg.nbr_tra
            )));
        }
        let mut chosen: Vec<usize> = rand::seq::index::sample(rng, members.len(), cfg.nbr_tra).into_vec();
        chosen.sort_unstable();
        for k in chosen {
            let idx = members[k];
            let (x, y) = (idx % raster.width(), idx / raster.width());
            samples.push((features::extract_features(raster, x, y, cfg.window)?, c as u16 + 1));
            pixels.push((x, y));
        }
    }
    Ok(TrainingSet { class_count, samples, pixels })
}

/// How the per-class antibody population starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolInit {
    Random,
    /// Random, except that the first remainder antibodies are copies of the
    /// antigens.
    ContainsAntigens,
}

/// Learning phase: one refined prototype per training sample.
pub fn learn_prototypes<R: Rng>(training: &TrainingSet, cfg: &RunConfig, rng: &mut R) -> Result<Vec<(FeatureVector, u16)>> {
    learn_prototypes_with(training, cfg, PoolInit::Random, rng)
}

pub fn learn_prototypes_with<R: Rng>(
    training: &TrainingSet,
    cfg: &RunConfig,
    init: PoolInit,
    rng: &mut R,
) -> Result<Vec<(FeatureVector, u16)>> {
    let mut out = Vec::with_capacity(training.samples.len());
    for label in 1..=training.class_count as u16 {
        let antigens = training
            .class_samples(label)
            .map(|f| features::encode(f, cfg.quant_bits))
            .collect::<Result<Vec<BitString>>>()?;
        if antigens.is_empty() {
            return Err(Error::Input(alloc::format!("class {label} has no training samples")));
        }
        let components = training.samples[0].0.len();
        let params = cfg.clonalg_params(antigens.len(), components * cfg.quant_bits as usize);
        params.validate()?;
        let mut pool = AntibodyPool::random(&params, rng);
        if init == PoolInit::ContainsAntigens {
            if pool.remainder.len() < antigens.len() {
                return Err(Error::Config("remainder is too small to hold every antigen".into()));
            }
            pool.remainder[..antigens.len()].clone_from_slice(&antigens);
        }
        let mut engine = Clonalg::with_pool(params, pool, &mut *rng)?;
        for memory in engine.train(&antigens)? {
            out.push((features::decode_components(&memory, cfg.quant_bits)?, label));
        }
    }
    Ok(out)
}

/// Hidden-layer placement, width heuristic and ridge output layer.
pub fn initial_model<R: Rng + ?Sized>(
    prototypes: &[(FeatureVector, u16)],
    training: &TrainingSet,
    cfg: &RunConfig,
    rng: &mut R,
) -> Result<(RbfModel, f64)> {
    let points: Vec<&[f64]> = prototypes.iter().map(|(f, _)| f.as_slice()).collect();
    let centers = gngu::gngu_fit(&points, &cfg.gngu_params(), rng)?;
    let widths = rbf::initial_widths(&centers, rbf::WIDTH_NEIGHBOURS);
    let mut model = RbfModel::new(centers, widths, training.class_count, cfg.reject_threshold)?;
    let rate = model.fit_output_weights(&training.samples, cfg.ridge)?;
    Ok((model, rate))
}

/// Squared distances from every training sample to every center, so the
/// optimizer only pays for the exponentials.
struct DistanceCache<'a> {
    sq_dist: Vec<f64>,
    hidden: usize,
    classes: usize,
    samples: &'a [(FeatureVector, u16)],
    reject_threshold: f64,
}

impl<'a> DistanceCache<'a> {
    fn new(model: &RbfModel, samples: &'a [(FeatureVector, u16)]) -> Result<Self> {
        let hidden = model.hidden_count();
        let mut sq_dist = Vec::with_capacity(samples.len() * hidden);
        for (x, _) in samples {
            if x.len() != model.input_dim() {
                return Err(Error::Shape { expected: model.input_dim(), found: x.len() });
            }
            sq_dist.extend(model.centers().iter().map(|c| math::squared_distance(c, x.as_slice())));
        }
        Ok(DistanceCache { sq_dist, hidden, classes: model.class_count(), samples, reject_threshold: model.reject_threshold() })
    }

    /// Misclassified fraction for the packed vector
    /// `[ln σ (H), weights (K·H), biases (K)]`.
    fn error(&self, v: &[f64], phi: &mut [f64]) -> f64 {
        let (h, k) = (self.hidden, self.classes);
        let (log_widths, rest) = v.split_at(h);
        let (weights, biases) = rest.split_at(k * h);
        let mut wrong = 0usize;
        for (s, (_, label)) in self.samples.iter().enumerate() {
            for j in 0..h {
                let sigma = math::exp(log_widths[j]);
                phi[j] = math::exp(-self.sq_dist[s * h + j] / (2.0 * sigma * sigma));
            }
            let (mut best, mut score) = (0, f64::NEG_INFINITY);
            for c in 0..k {
                let sc = biases[c] + weights[c * h..(c + 1) * h].iter().zip(phi.iter()).map(|(w, p)| w * p).sum::<f64>();
                if sc > score {
                    (best, score) = (c, sc);
                }
            }
            let rejected = self.reject_threshold > 0.0 && !(score >= self.reject_threshold);
            if rejected || best + 1 != *label as usize {
                wrong += 1;
            }
        }
        wrong as f64 / self.samples.len() as f64
    }
}

/// Outcome of the optimization phase.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimization {
    /// Training rate (fraction) before and after.
    pub initial_rate: f64,
    pub final_rate: f64,
    pub evaluations: u64,
    /// Best-so-far training error per API iteration.
    pub trace: Vec<f64>,
}

/// Optimization phase: tunes log-widths and output weights with the
/// ant-foraging minimizer. The ridge solution is the first nest, so the
/// returned model is never worse on the training set.
pub fn optimize_model<R: Rng + ?Sized>(
    model: &RbfModel,
    training: &[(FeatureVector, u16)],
    cfg: &RunConfig,
    rng: &mut R,
) -> Result<(RbfModel, Optimization)> {
    let (Some(w0), Some(b0)) = (model.weights(), model.biases()) else {
        return Err(Error::State("optimization needs a model with an initialized output layer"));
    };
    if training.is_empty() {
        return Err(Error::Input("no training samples".into()));
    }
    let h = model.hidden_count();
    let mut start: Vec<f64> = model.widths().iter().map(|&s| math::ln(s)).collect();
    start.extend_from_slice(w0);
    start.extend_from_slice(b0);

    let w_abs = w0.iter().chain(b0).fold(0.0f64, |m, w| m.max(w.abs()));
    let w_max = if w_abs > 0.0 { 10.0 * w_abs } else { 1.0 };
    let ln10 = math::ln(10.0);
    let mut lower: Vec<f64> = start[..h].iter().map(|l| l - ln10).collect();
    let mut upper: Vec<f64> = start[..h].iter().map(|l| l + ln10).collect();
    lower.resize(start.len(), -w_max);
    upper.resize(start.len(), w_max);
    let space = SearchSpace::new(lower, upper)?;

    let cache = DistanceCache::new(model, training)?;
    let mut phi = vec![0.0; h];
    let initial_error = cache.error(&start, &mut phi);
    let result = api::run_from(|v: &[f64]| cache.error(v, &mut phi), &space, &cfg.api_params(), Some(&start), rng)?;

    let initial_rate = model.rate(training)?;
    let mut report = Optimization {
        initial_rate,
        final_rate: initial_rate,
        evaluations: result.evaluations,
        trace: result.trace.clone(),
    };
    if !(result.value < initial_error) {
        return Ok((model.clone(), report));
    }
    let v = &result.best;
    let mut tuned = model.clone();
    tuned.set_widths(v[..h].iter().map(|&l| math::exp(l)).collect())?;
    let k = model.class_count();
    tuned.set_output(v[h..h + k * h].to_vec(), v[h + k * h..].to_vec())?;
    let final_rate = tuned.rate(training)?;
    if final_rate < initial_rate {
        // exp(ln σ) rounding moved a sample across a boundary
        return Ok((model.clone(), report));
    }
    report.final_rate = final_rate;
    Ok((tuned, report))
}

/// Metrics recorded with a trained model.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingMetrics {
    /// Training rate (fraction) after the ridge fit.
    pub ridge_rate: f64,
    /// Training rate (fraction) of the final model.
    pub final_rate: f64,
    pub confusion: ConfusionMatrix,
    pub api_evaluations: u64,
}

impl TrainingMetrics {
    pub fn error(&self) -> f64 {
        1.0 - self.final_rate
    }
}

/// A trained classifier with the configuration and pixels it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub model: RbfModel,
    pub config: RunConfig,
    pub bands: usize,
    /// `(x, y, class)` of every training pixel.
    pub training_pixels: Vec<(usize, usize, u16)>,
    pub metrics: TrainingMetrics,
}

impl TrainedModel {
    pub fn class_count(&self) -> usize {
        self.model.class_count()
    }

    /// Mask of labeled pixels that were not used for training.
    pub fn held_out_mask(&self, truth: &LabelMap) -> Vec<bool> {
        let mut mask = truth.labeled_mask();
        for &(x, y, _) in &self.training_pixels {
            if x < truth.width && y < truth.height {
                mask[y * truth.width + x] = false;
            }
        }
        mask
    }

    /// Recomputes the training features from `raster`.
    pub fn training_samples(&self, raster: &Raster) -> Result<Vec<(FeatureVector, u16)>> {
        self.training_pixels
            .iter()
            .map(|&(x, y, l)| Ok((features::extract_features(raster, x, y, self.config.window)?, l)))
            .collect()
    }
}

/// Full training run, seeded from `cfg.seed`.
pub fn train(raster: &Raster, labels: &LabelMap, cfg: &RunConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    let training = sample_training_set(raster, labels, cfg, &mut stream_rng(cfg.seed, stream::SAMPLING))?;
    let prototypes = learn_prototypes(&training, cfg, &mut stream_rng(cfg.seed, stream::CLONALG))?;
    let (model, ridge_rate) = initial_model(&prototypes, &training, cfg, &mut stream_rng(cfg.seed, stream::GNGU))?;
    let (model, opt) = optimize_model(&model, &training.samples, cfg, &mut stream_rng(cfg.seed, stream::API))?;

    let mut confusion = ConfusionMatrix::new(training.class_count);
    for (x, label) in &training.samples {
        confusion.record(*label, model.classify(x.as_slice())?.into())?;
    }
    let training_pixels = training.pixels.iter().zip(&training.samples).map(|(&(x, y), (_, l))| (x, y, *l)).collect();
    Ok(TrainedModel {
        model,
        config: cfg.clone(),
        bands: raster.bands(),
        training_pixels,
        metrics: TrainingMetrics { ridge_rate, final_rate: opt.final_rate, confusion, api_evaluations: opt.evaluations },
    })
}

/// Labels every pixel of `raster`.
pub fn classify_raster(model: &TrainedModel, raster: &Raster) -> Result<LabelMap> {
    if raster.bands() != model.bands {
        return Err(Error::Input(alloc::format!(
            "raster has {} bands, the model was trained on {}",
            raster.bands(),
            model.bands
        )));
    }
    if model.model.input_dim() != FEATURES_PER_BAND * raster.bands() {
        return Err(Error::Shape { expected: model.model.input_dim(), found: FEATURES_PER_BAND * raster.bands() });
    }
    let mut labels = Vec::with_capacity(raster.pixel_count());
    for y in 0..raster.height() {
        for x in 0..raster.width() {
            let f = features::extract_features(raster, x, y, model.config.window)?;
            labels.push(model.model.classify(f.as_slice())?.into());
        }
    }
    LabelMap::new(raster.width(), raster.height(), labels)
}

/// Confusion matrix of `pred` over the labeled pixels not used in training.
pub fn held_out_confusion(model: &TrainedModel, pred: &LabelMap, truth: &LabelMap) -> Result<ConfusionMatrix> {
    let mask = model.held_out_mask(truth);
    crate::evaluation::confusion(pred, truth, &mask, model.class_count())
}

//! Synthetic labeled scenes.
//!
//! Each class owns a spatial region and a band signature. Signatures are
//! drawn in `[0.15, 0.85]^B` with pairwise distance at least `min_distance`,
//! and pixels are their signature plus Gaussian noise of standard deviation
//! `min_distance / separation`, clamped to `[0, 1]` and rounded to the 8-bit
//! grid so that saving the scene as `u8` loses nothing.

use antimuclass_core::rng::{stream_rng, StreamRng};
use antimuclass_core::{LabelMap, Raster};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::bundle::RasterBundle;
use crate::error::{Error, Result};

const SIGNATURE_RANGE: (f64, f64) = (0.15, 0.85);
const PLACEMENT_TRIES: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionLayout {
    /// Nearest-seed cells around jittered grid points.
    Voronoi,
    /// Axis-aligned grid blocks.
    Blocks,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub classes: usize,
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    /// Minimum signature distance over within-class noise; `INFINITY` gives
    /// noise-free classes.
    pub separation: f64,
    pub min_distance: f64,
    pub layout: RegionLayout,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            classes: 12,
            width: 128,
            height: 128,
            bands: 7,
            separation: 6.0,
            min_distance: 0.3,
            layout: RegionLayout::Voronoi,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthScene {
    pub bundle: RasterBundle,
    /// Class `c` signature at index `c - 1`.
    pub signatures: Vec<Vec<f64>>,
    /// Within-class standard deviation per band.
    pub noise: f64,
}

impl SynthScene {
    pub fn raster(&self) -> &Raster {
        &self.bundle.raster
    }

    pub fn labels(&self) -> &LabelMap {
        self.bundle.labels.as_ref().expect("synthetic scenes are fully labeled")
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn signatures(spec: &SceneSpec, rng: &mut StreamRng) -> Result<Vec<Vec<f64>>> {
    let (lo, hi) = SIGNATURE_RANGE;
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(spec.classes);
    let mut tries = 0;
    while out.len() < spec.classes {
        if tries == PLACEMENT_TRIES {
            return Err(Error::Synth(format!(
                "cannot place {} signatures at distance {} in {} band(s)",
                spec.classes, spec.min_distance, spec.bands
            )));
        }
        tries += 1;
        let s: Vec<f64> = (0..spec.bands).map(|_| rng.gen_range(lo..=hi)).collect();
        if out.iter().all(|o| distance(o, &s) >= spec.min_distance) {
            out.push(s);
        }
    }
    Ok(out)
}

fn regions(spec: &SceneSpec, rng: &mut StreamRng) -> Result<Vec<u16>> {
    let k = spec.classes;
    let cols = (k as f64).sqrt().ceil() as usize;
    let rows = k.div_ceil(cols);
    if spec.width < cols || spec.height < rows {
        return Err(Error::Synth(format!("{}x{} is too small for {k} regions", spec.width, spec.height)));
    }
    let (cw, ch) = (spec.width as f64 / cols as f64, spec.height as f64 / rows as f64);
    let mut labels = Vec::with_capacity(spec.width * spec.height);
    match spec.layout {
        RegionLayout::Blocks => {
            for y in 0..spec.height {
                for x in 0..spec.width {
                    let cell = (y as f64 / ch) as usize * cols + (x as f64 / cw) as usize;
                    labels.push((cell % k) as u16 + 1);
                }
            }
        }
        RegionLayout::Voronoi => {
            let seeds: Vec<(f64, f64)> = (0..k)
                .map(|i| {
                    let (cx, cy) = ((i % cols) as f64 + 0.5, (i / cols) as f64 + 0.5);
                    ((cx + rng.gen_range(-0.25..0.25)) * cw, (cy + rng.gen_range(-0.25..0.25)) * ch)
                })
                .collect();
            for y in 0..spec.height {
                for x in 0..spec.width {
                    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                    let nearest = (0..k)
                        .min_by(|&a, &b| {
                            let d = |(sx, sy): (f64, f64)| (sx - px).powi(2) + (sy - py).powi(2);
                            d(seeds[a]).total_cmp(&d(seeds[b]))
                        })
                        .expect("k >= 1");
                    labels.push(nearest as u16 + 1);
                }
            }
        }
    }
    Ok(labels)
}

/// Generates a fully labeled scene.
pub fn synth_scene(spec: &SceneSpec) -> Result<SynthScene> {
    if spec.classes == 0 || spec.classes >= u16::MAX as usize {
        return Err(Error::Synth("class count must lie in 1..65535".into()));
    }
    if spec.bands == 0 || spec.width == 0 || spec.height == 0 {
        return Err(Error::Synth("size and band count must be positive".into()));
    }
    if spec.separation.is_nan() || spec.separation <= 0.0 {
        return Err(Error::Synth(format!("separation must be positive, got {}", spec.separation)));
    }
    if !spec.min_distance.is_finite() || spec.min_distance <= 0.0 {
        return Err(Error::Synth(format!("minimum signature distance must be positive, got {}", spec.min_distance)));
    }
    let mut rng = stream_rng(spec.seed, 0);
    let signatures = signatures(spec, &mut rng)?;
    let labels = regions(spec, &mut rng)?;
    let noise = spec.min_distance / spec.separation;
    let normal = Normal::new(0.0, noise).map_err(|e| Error::Synth(e.to_string()))?;

    let n = spec.width * spec.height;
    let mut data = vec![0.0; n * spec.bands];
    for (i, &l) in labels.iter().enumerate() {
        let sig = &signatures[l as usize - 1];
        for (b, &s) in sig.iter().enumerate() {
            let v = if noise > 0.0 { s + normal.sample(&mut rng) } else { s };
            data[b * n + i] = (v.clamp(0.0, 1.0) * 255.0).round() / 255.0;
        }
    }
    let raster = Raster::new(spec.width, spec.height, spec.bands, data)?;
    let labels = LabelMap::new(spec.width, spec.height, labels)?;
    let band_names = (1..=spec.bands).map(|b| format!("band{b}")).collect();
    Ok(SynthScene { bundle: RasterBundle { raster, labels: Some(labels), band_names }, signatures, noise })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{save_bundle, Layout, SampleType};

    fn small(seed: u64) -> SceneSpec {
        SceneSpec { classes: 5, width: 40, height: 30, bands: 3, seed, ..Default::default() }
    }

    #[test]
    fn noise_free_classes_are_constant() {
        let s = synth_scene(&SceneSpec { separation: f64::INFINITY, ..small(1) }).unwrap();
        assert_eq!(s.noise, 0.0);
        let (r, l) = (s.raster(), s.labels());
        for b in 0..r.bands() {
            for (i, &v) in r.band(b).iter().enumerate() {
                let expected = (s.signatures[l.labels[i] as usize - 1][b] * 255.0).round() / 255.0;
                assert_eq!(v, expected);
            }
        }
    }

    #[test]
    fn signatures_respect_the_distance() {
        let s = synth_scene(&SceneSpec::default()).unwrap();
        assert_eq!(s.signatures.len(), 12);
        for (i, a) in s.signatures.iter().enumerate() {
            for b in &s.signatures[i + 1..] {
                assert!(distance(a, b) >= 0.3);
                assert!(distance(a, b) >= 6.0 * s.noise - 1e-12);
            }
        }
        assert_eq!(s.labels().max_class(), 12);
        for c in 1..=12 {
            assert!(s.labels().labels.iter().filter(|&&l| l == c).count() > 500, "class {c}");
        }
    }

    #[test]
    fn within_class_spread_matches_noise() {
        let s = synth_scene(&SceneSpec { classes: 2, ..Default::default() }).unwrap();
        let vals: Vec<f64> =
            s.raster().band(0).iter().zip(&s.labels().labels).filter(|(_, &l)| l == 1).map(|(&v, _)| v).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
        assert!((sd - s.noise).abs() < 0.1 * s.noise, "{sd} vs {}", s.noise);
    }

    #[test]
    fn infeasible_requests_fail() {
        let one_band = SceneSpec { classes: 12, bands: 1, ..small(2) };
        assert!(matches!(synth_scene(&one_band), Err(Error::Synth(_))));
        assert!(synth_scene(&SceneSpec { separation: 0.0, ..small(2) }).is_err());
        assert!(synth_scene(&SceneSpec { width: 2, ..small(2) }).is_err());
    }

    #[test]
    fn blocks_cover_every_class() {
        let s = synth_scene(&SceneSpec { layout: RegionLayout::Blocks, ..small(3) }).unwrap();
        for c in 1..=5 {
            assert!(s.labels().labels.contains(&c));
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = Vec::new();
        for run in 0..2 {
            let s = synth_scene(&small(7)).unwrap();
            let header = dir.path().join(format!("s{run}.hdr"));
            let files = save_bundle(&header, &s.bundle, SampleType::U8, Layout::Bsq).unwrap();
            let data: Vec<Vec<u8>> =
                files.iter().filter(|f| f.extension().unwrap() != "hdr").map(|f| std::fs::read(f).unwrap()).collect();
            bytes.push(data);
        }
        assert_eq!(bytes[0], bytes[1]);
        assert_ne!(synth_scene(&small(8)).unwrap(), synth_scene(&small(7)).unwrap());
    }
}

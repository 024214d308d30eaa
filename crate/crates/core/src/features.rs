//! Pixel feature vectors and their binary encoding.
//!
//! A pixel is described, for every band, by its own intensity plus the mean
//! and population standard deviation of a square window centered on it. The
//! window is clipped at the raster edges, so border pixels simply see fewer
//! neighbours.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::math;

/// Default neighborhood width.
pub const DEFAULT_WINDOW: usize = 3;
/// Default bits per feature component.
pub const DEFAULT_QUANT_BITS: u32 = 8;
/// Number of features computed per band.
pub const FEATURES_PER_BAND: usize = 3;

/// A multiband image with intensities normalized to `[0, 1]`.
///
/// Samples are stored band-sequentially: band `b`, row `y`, column `x` lives
/// at `b * width * height + y * width + x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    bands: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || bands == 0 {
            return Err(Error::Input(alloc::format!(
                "raster must have positive dimensions, got {width}x{height}x{bands}"
            )));
        }
        let expected = width * height * bands;
        if data.len() != expected {
            return Err(Error::Shape { expected, found: data.len() });
        }
        if let Some(pos) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Input(alloc::format!(
                "sample {} = {} is outside [0, 1]",
                pos, data[pos]
            )));
        }
        Ok(Raster { width, height, bands, data })
    }

    /// Builds a raster from one row-major plane per band.
    pub fn from_bands(width: usize, height: usize, planes: Vec<Vec<f64>>) -> Result<Self> {
        let bands = planes.len();
        let mut data = Vec::with_capacity(width * height * bands);
        for plane in planes {
            if plane.len() != width * height {
                return Err(Error::Shape { expected: width * height, found: plane.len() });
            }
            data.extend(plane);
        }
        Raster::new(width, height, bands, data)
    }

    /// A raster whose every sample equals `value`.
    pub fn constant(width: usize, height: usize, bands: usize, value: f64) -> Result<Self> {
        Raster::new(width, height, bands, vec![value; width * height * bands])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Row-major samples of one band.
    pub fn band(&self, b: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[b * n..(b + 1) * n]
    }

    pub fn value(&self, band: usize, x: usize, y: usize) -> f64 {
        self.data[band * self.pixel_count() + y * self.width + x]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Classifier input: `[value, mean, stddev]` for each band, band by band.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        FeatureVector(v)
    }
}

/// Computes the feature vector of pixel `(x, y)` over a `window`×`window`
/// neighborhood clipped to the raster.
pub fn extract_features(raster: &Raster, x: usize, y: usize, window: usize) -> Result<FeatureVector> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Config(alloc::format!("window must be odd and positive, got {window}")));
    }
    if x >= raster.width || y >= raster.height {
        return Err(Error::Coordinate { x, y, width: raster.width, height: raster.height });
    }
    let half = window / 2;
    let x0 = x.saturating_sub(half);
    let x1 = (x + half).min(raster.width - 1);
    let y0 = y.saturating_sub(half);
    let y1 = (y + half).min(raster.height - 1);
    let count = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;

    let mut out = Vec::with_capacity(FEATURES_PER_BAND * raster.bands);
    for b in 0..raster.bands {
        let plane = raster.band(b);
        let window_iter = || {
            (y0..=y1).flat_map(move |yy| plane[yy * raster.width + x0..=yy * raster.width + x1].iter().copied())
        };
        let mean = window_iter().sum::<f64>() / count;
        let var = window_iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
        out.push(plane[y * raster.width + x]);
        out.push(mean.clamp(0.0, 1.0));
        out.push(math::sqrt(var).clamp(0.0, 0.5));
    }
    Ok(FeatureVector(out))
}

/// A fixed-length sequence of bits, packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut bs = BitString::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            bs.set(i, b);
        }
        bs
    }

    /// Uniformly random bits.
    pub fn random<R: rand::Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut bs = BitString { words: (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect(), len };
        bs.clear_tail();
        bs
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn complement(&self) -> Self {
        let mut bs = BitString { words: self.words.iter().map(|w| !w).collect(), len: self.len };
        bs.clear_tail();
        bs
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Number of positions where `self` and `other` differ. Lengths must match.
    #[inline]
    pub(crate) fn xor_count(&self, other: &BitString) -> u32 {
        self.words.iter().zip(&other.words).map(|(a, b)| (a ^ b).count_ones()).sum()
    }

    /// XORs `masks` into the words, then clears the bits past `len`.
    pub(crate) fn xor_words(&mut self, mut masks: impl FnMut() -> u64) {
        for w in &mut self.words {
            *w ^= masks();
        }
        self.clear_tail();
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Input(alloc::format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok(BitString::from_bits(&bits))
    }
}

fn levels(quant_bits: u32) -> Result<u64> {
    if !(1..=32).contains(&quant_bits) {
        return Err(Error::Config(alloc::format!("quantization must use 1..=32 bits, got {quant_bits}")));
    }
    Ok((1u64 << quant_bits) - 1)
}

/// Quantizes every component to `quant_bits` bits (most significant bit
/// first) and concatenates the codes.
pub fn encode(fv: &FeatureVector, quant_bits: u32) -> Result<BitString> {
    let max = levels(quant_bits)?;
    let scale = max as f64;
    let q = quant_bits as usize;
    let mut bs = BitString::zeros(fv.len() * q);
    for (c, &v) in fv.0.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Encoding(alloc::format!("component {c} = {v} is outside [0, 1]")));
        }
        let mut code = math::floor(v * scale) as u64;
        // v * scale can land just under an integer that v really reaches
        if code < max && (code + 1) as f64 / scale <= v {
            code += 1;
        }
        let code = code.min(max);
        for k in 0..q {
            bs.set(c * q + k, code >> (q - 1 - k) & 1 == 1);
        }
    }
    Ok(bs)
}

/// Decodes consecutive `quant_bits`-wide groups into `[0, 1]` components.
pub fn decode_components(bs: &BitString, quant_bits: u32) -> Result<FeatureVector> {
    let max = levels(quant_bits)?;
    let q = quant_bits as usize;
    if !bs.len().is_multiple_of(q) {
        return Err(Error::Decoding { expected: bs.len().next_multiple_of(q), found: bs.len() });
    }
    let values = (0..bs.len() / q)
        .map(|c| {
            let code = (0..q).fold(0u64, |acc, k| acc << 1 | bs.get(c * q + k) as u64);
            code as f64 / max as f64
        })
        .collect();
    Ok(FeatureVector(values))
}

/// Decodes a bit string produced from a `bands`-band feature vector.
pub fn decode(bs: &BitString, bands: usize, quant_bits: u32) -> Result<FeatureVector> {
    let expected = FEATURES_PER_BAND * bands * quant_bits as usize;
    if bs.len() != expected {
        return Err(Error::Decoding { expected, found: bs.len() });
    }
    decode_components(bs, quant_bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector(v.to_vec())
    }

    #[test]
    fn constant_raster_has_zero_spread() {
        let r = Raster::constant(5, 5, 1, 0.4).unwrap();
        let f = extract_features(&r, 2, 2, 3).unwrap();
        assert_eq!(f.0.len(), 3);
        assert!((f.0[0] - 0.4).abs() < 1e-15);
        assert!((f.0[1] - 0.4).abs() < 1e-15);
        assert!(f.0[2].abs() < 1e-12);
    }

    #[test]
    fn unit_window_copies_the_pixel() {
        let r = Raster::new(3, 2, 1, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        for y in 0..2 {
            for x in 0..3 {
                let v = r.value(0, x, y);
                assert_eq!(extract_features(&r, x, y, 1).unwrap().0, vec![v, v, 0.0]);
            }
        }
    }

    #[test]
    fn single_spike_patch() {
        let mut data = vec![0.0; 25];
        data[2 * 5 + 2] = 1.0;
        let r = Raster::new(5, 5, 1, data).unwrap();
        let f = extract_features(&r, 2, 2, 3).unwrap();

        let patch = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let mean: f64 = patch.iter().sum::<f64>() / 9.0;
        let var: f64 = patch.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 9.0;
        assert_eq!(f.0[0], 1.0);
        assert!((f.0[1] - 1.0 / 9.0).abs() < 1e-15);
        assert!((f.0[2] - libm::sqrt(var)).abs() < 1e-15);
        // 0.3142696805273545 = sqrt(8) / 9
        assert!((f.0[2] - 0.314_269_680_527_354_5).abs() < 1e-12);
    }

    #[test]
    fn corner_window_is_clipped() {
        // 2x2 visible block at the corner: {1, 0, 0, 0}
        let mut data = vec![0.0; 9];
        data[0] = 1.0;
        let r = Raster::new(3, 3, 1, data).unwrap();
        let f = extract_features(&r, 0, 0, 3).unwrap();
        assert!((f.0[1] - 0.25).abs() < 1e-15);
        assert!((f.0[2] - libm::sqrt(0.1875)).abs() < 1e-15);
    }

    #[test]
    fn multiband_layout() {
        let r = Raster::from_bands(2, 1, vec![vec![0.2, 0.2], vec![0.8, 0.8]]).unwrap();
        let f = extract_features(&r, 0, 0, 3).unwrap();
        assert_eq!(f.len(), 6);
        assert!((f.0[3] - 0.8).abs() < 1e-15 && (f.0[4] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_window_and_coordinates() {
        let r = Raster::constant(4, 4, 2, 0.5).unwrap();
        assert!(matches!(extract_features(&r, 1, 1, 2), Err(Error::Config(_))));
        assert!(matches!(extract_features(&r, 1, 1, 0), Err(Error::Config(_))));
        assert!(matches!(extract_features(&r, 4, 0, 3), Err(Error::Coordinate { .. })));
        assert!(matches!(extract_features(&r, 0, 9, 3), Err(Error::Coordinate { .. })));
    }

    #[test]
    fn raster_validation() {
        assert!(Raster::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Raster::new(1, 1, 1, vec![1.5]).is_err());
        assert!(Raster::new(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(Raster::new(0, 1, 1, vec![]).is_err());
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode(&fv(&[0.0]), 4).unwrap().to_string(), "0000");
        assert_eq!(encode(&fv(&[1.0]), 4).unwrap().to_string(), "1111");
        // floor(0.4 * 15) = 6
        assert_eq!(encode(&fv(&[0.4]), 4).unwrap().to_string(), "0110");
        assert_eq!(encode(&fv(&[0.0, 1.0]), 2).unwrap().to_string(), "0011");
    }

    #[test]
    fn encode_rejects_out_of_range() {
        assert!(matches!(encode(&fv(&[1.01]), 4), Err(Error::Encoding(_))));
        assert!(matches!(encode(&fv(&[-0.1]), 4), Err(Error::Encoding(_))));
        assert!(matches!(encode(&fv(&[f64::NAN]), 4), Err(Error::Encoding(_))));
        assert!(matches!(encode(&fv(&[0.5]), 0), Err(Error::Config(_))));
    }

    #[test]
    fn decode_examples() {
        let z: BitString = "0000".parse().unwrap();
        let o: BitString = "1111".parse().unwrap();
        assert_eq!(decode_components(&z, 4).unwrap().0, vec![0.0]);
        assert_eq!(decode_components(&o, 4).unwrap().0, vec![1.0]);
        assert!(matches!(decode(&z, 1, 4), Err(Error::Decoding { expected: 12, found: 4 })));
        assert!(decode_components(&"00000".parse().unwrap(), 4).is_err());
    }

    #[test]
    fn bitstring_tail_is_masked() {
        let b: BitString = "101".parse().unwrap();
        let c = b.complement();
        assert_eq!(c.to_string(), "010");
        assert_eq!(b.xor_count(&c), 3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::SeedableRng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn decode_encode_error_is_bounded(
                values in proptest::collection::vec(0.0f64..=1.0, 3..=21),
                q in 1u32..=16,
            ) {
                let fv = FeatureVector(values.clone());
                let back = decode_components(&encode(&fv, q).unwrap(), q).unwrap();
                let step = 1.0 / ((1u64 << q) - 1) as f64;
                for (a, b) in values.iter().zip(&back.0) {
                    prop_assert!((a - b).abs() <= step + 1e-15);
                    prop_assert!(*b <= *a + 1e-15);
                }
            }

            #[test]
            fn encode_decode_is_identity(seed in any::<u64>(), comps in 1usize..=21, q in 1u32..=12) {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let bs = BitString::random(comps * q as usize, &mut rng);
                let again = encode(&decode_components(&bs, q).unwrap(), q).unwrap();
                prop_assert_eq!(again, bs);
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn spread_stays_in_range(
                w in 1usize..8, h in 1usize..8, bands in 1usize..4,
                seed in any::<u64>(), window in prop_oneof![Just(1usize), Just(3), Just(5)],
            ) {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let data = (0..w * h * bands).map(|_| rand::Rng::gen::<f64>(&mut rng)).collect();
                let r = Raster::new(w, h, bands, data).unwrap();
                for y in 0..h {
                    for x in 0..w {
                        let f = extract_features(&r, x, y, window).unwrap();
                        prop_assert_eq!(f.len(), 3 * bands);
                        for b in 0..bands {
                            prop_assert!((0.0..=0.5).contains(&f.0[3 * b + 2]));
                            prop_assert!((0.0..=1.0).contains(&f.0[3 * b + 1]));
                        }
                        prop_assert_eq!(&f, &extract_features(&r, x, y, window).unwrap());
                    }
                }
            }
        }
    }
}

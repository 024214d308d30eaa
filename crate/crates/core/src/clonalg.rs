//! Clonal selection (CLONALG) over bit-string antibodies.
//!
//! The engine runs in pattern-recognition mode: the population holds one
//! memory antibody per antigen plus a remainder of free antibodies. Each
//! exposure to an antigen selects the `n` closest antibodies, clones them
//! (rank `i` receives `round(β·N / i)` clones), mutates the clones with a
//! rank-dependent flip probability and lets the best clone take over the
//! antigen's memory slot if it is strictly closer. Optionally the `d` worst
//! remainder antibodies are then replaced with fresh random ones.

use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::features::BitString;
use crate::math;

/// Hamming distance between an antibody and an antigen. Lower is better.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Affinity(pub u32);

/// Counts the positions where `ab` and `ag` differ.
pub fn hamming_affinity(ab: &BitString, ag: &BitString) -> Result<Affinity> {
    if ab.len() != ag.len() {
        return Err(Error::Affinity { left: ab.len(), right: ag.len() });
    }
    Ok(Affinity(ab.xor_count(ag)))
}

/// Number of clones given to the antibody of rank `rank` (1-based):
/// `β·N / rank`, rounded half up.
pub fn clone_count(clone_factor: f64, pop_size: usize, rank: usize) -> Result<usize> {
    if rank == 0 {
        return Err(Error::Rank(rank));
    }
    if !(clone_factor > 0.0) || !clone_factor.is_finite() {
        return Err(Error::Config(alloc::format!("clone factor must be positive, got {clone_factor}")));
    }
    Ok(math::floor(clone_factor * pop_size as f64 / rank as f64 + 0.5) as usize)
}

/// Total clones produced per exposure when the `selected` best antibodies
/// are cloned.
pub fn total_clones(clone_factor: f64, pop_size: usize, selected: usize) -> Result<usize> {
    (1..=selected).map(|i| clone_count(clone_factor, pop_size, i)).sum()
}

/// Linear rank-to-flip-probability schedule. Rank 1 mutates least.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MutationSchedule {
    pub p_min: f64,
    pub p_max: f64,
}

impl Default for MutationSchedule {
    fn default() -> Self {
        MutationSchedule { p_min: 0.01, p_max: 0.3 }
    }
}

impl MutationSchedule {
    pub const fn constant(p: f64) -> Self {
        MutationSchedule { p_min: p, p_max: p }
    }

    pub fn rate(&self, rank: usize, selected: usize) -> f64 {
        let span = selected.saturating_sub(1).max(1) as f64;
        let t = rank.saturating_sub(1) as f64 / span;
        (self.p_min + (self.p_max - self.p_min) * t).clamp(0.0, 1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_min) || !(0.0..=1.0).contains(&self.p_max) || self.p_min > self.p_max {
            return Err(Error::Config(alloc::format!(
                "mutation probabilities must satisfy 0 <= p_min <= p_max <= 1, got {} and {}",
                self.p_min, self.p_max
            )));
        }
        Ok(())
    }
}

/// Flips each bit of `clone` independently with the probability assigned to
/// `rank` among `selected` antibodies.
pub fn mutate<R: Rng + ?Sized>(
    clone: &BitString,
    rank: usize,
    selected: usize,
    schedule: &MutationSchedule,
    rng: &mut R,
) -> BitString {
    let mut out = clone.clone();
    mutate_in_place(&mut out, schedule.rate(rank, selected), rng);
    out
}

/// Flips every bit independently with probability `p`.
fn mutate_in_place<R: Rng + ?Sized>(bits: &mut BitString, p: f64, rng: &mut R) {
    if p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        bits.xor_words(|| u64::MAX);
        return;
    }
    let threshold = math::floor(p * 4_294_967_296.0) as u32;
    bits.xor_words(|| bernoulli_mask(threshold, rng));
}

/// 64 independent Bernoulli(threshold / 2^32) bits.
///
/// Each lane holds a virtual 32-bit uniform number compared against
/// `threshold`, most significant bit first; one random word decides one bit
/// position for all lanes, and the loop stops as soon as every lane differs
/// from the threshold, which takes about 7 words on average.
fn bernoulli_mask<R: Rng + ?Sized>(threshold: u32, rng: &mut R) -> u64 {
    let mut below = 0u64;
    let mut tied = u64::MAX;
    for k in (0..32).rev() {
        let r = rng.next_u64();
        if threshold >> k & 1 == 1 {
            below |= tied & !r;
            tied &= r;
        } else {
            tied &= !r;
        }
        if tied == 0 {
            break;
        }
    }
    below
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClonalgParams {
    /// N: total antibodies (memory + remainder).
    pub pop_size: usize,
    /// n (Ncm): antibodies selected for cloning per exposure.
    pub select_count: usize,
    /// β (Coe).
    pub clone_factor: f64,
    /// G (Gen).
    pub generations: usize,
    /// d (NbrLar): worst remainder antibodies replaced per exposure.
    pub replace_count: usize,
    /// m: memory slots, one per antigen.
    pub memory_size: usize,
    /// L.
    pub string_length: usize,
    pub mutation: MutationSchedule,
}

impl Default for ClonalgParams {
    fn default() -> Self {
        ClonalgParams {
            pop_size: 50,
            select_count: 10,
            clone_factor: 10.0,
            generations: 30,
            replace_count: 0,
            memory_size: 1,
            string_length: 72,
            mutation: MutationSchedule::default(),
        }
    }
}

impl ClonalgParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.into()));
        if self.generations == 0 {
            return fail("generations must be at least 1");
        }
        if self.memory_size == 0 {
            return fail("memory size must be at least 1");
        }
        if self.memory_size > self.pop_size {
            return fail("memory size cannot exceed the population size");
        }
        if self.select_count == 0 || self.select_count > self.pop_size {
            return fail("selection count must lie in 1..=population size");
        }
        if self.replace_count >= self.pop_size || self.replace_count > self.pop_size - self.memory_size {
            return fail("replacement count must not exceed the remainder size");
        }
        if !(self.clone_factor > 0.0) || !self.clone_factor.is_finite() {
            return fail("clone factor must be positive");
        }
        if self.string_length == 0 {
            return fail("string length must be positive");
        }
        self.mutation.validate()
    }
}

/// Antibody population split into memory and remainder sections.
#[derive(Clone, Debug, PartialEq)]
pub struct AntibodyPool {
    pub memory: Vec<BitString>,
    pub remainder: Vec<BitString>,
}

impl AntibodyPool {
    pub fn random<R: Rng + ?Sized>(params: &ClonalgParams, rng: &mut R) -> Self {
        let l = params.string_length;
        let memory = (0..params.memory_size).map(|_| BitString::random(l, rng)).collect();
        let remainder = (0..params.pop_size - params.memory_size).map(|_| BitString::random(l, rng)).collect();
        AntibodyPool { memory, remainder }
    }

    pub fn len(&self) -> usize {
        self.memory.len() + self.remainder.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All antibodies, memory first.
    pub fn iter(&self) -> impl Iterator<Item = &BitString> {
        self.memory.iter().chain(&self.remainder)
    }

    /// Closest affinity of any antibody to `antigen`.
    pub fn best_affinity(&self, antigen: &BitString) -> Result<Affinity> {
        let mut best = Affinity(u32::MAX);
        for ab in self.iter() {
            best = best.min(hamming_affinity(ab, antigen)?);
        }
        Ok(best)
    }
}

/// A clonal selection engine owning its population and random stream.
#[derive(Clone, Debug)]
pub struct Clonalg<R> {
    params: ClonalgParams,
    pool: AntibodyPool,
    rng: R,
    // per-exposure scratch
    ranked: Vec<(Affinity, usize)>,
}

impl<R: Rng> Clonalg<R> {
    /// Creates an engine with a uniformly random population.
    pub fn new(params: ClonalgParams, mut rng: R) -> Result<Self> {
        params.validate()?;
        let pool = AntibodyPool::random(&params, &mut rng);
        Ok(Clonalg { params, pool, rng, ranked: Vec::new() })
    }

    /// Creates an engine around an existing population.
    pub fn with_pool(params: ClonalgParams, pool: AntibodyPool, rng: R) -> Result<Self> {
        params.validate()?;
        if pool.memory.len() != params.memory_size || pool.len() != params.pop_size {
            return Err(Error::Config(alloc::format!(
                "pool has {}+{} antibodies, parameters expect {}+{}",
                pool.memory.len(),
                pool.remainder.len(),
                params.memory_size,
                params.pop_size - params.memory_size
            )));
        }
        if let Some(bad) = pool.iter().find(|ab| ab.len() != params.string_length) {
            return Err(Error::Decoding { expected: params.string_length, found: bad.len() });
        }
        Ok(Clonalg { params, pool, rng, ranked: Vec::new() })
    }

    pub fn params(&self) -> &ClonalgParams {
        &self.params
    }

    pub fn pool(&self) -> &AntibodyPool {
        &self.pool
    }

    pub fn into_pool(self) -> AntibodyPool {
        self.pool
    }

    /// Exposes the population to `antigen`, whose memory antibody lives in
    /// memory slot `slot`. Returns that slot's affinity afterwards.
    pub fn generation_step(&mut self, slot: usize, antigen: &BitString) -> Result<Affinity> {
        let p = &self.params;
        if slot >= p.memory_size {
            return Err(Error::Input(alloc::format!("memory slot {slot} out of range")));
        }
        if antigen.len() != p.string_length {
            return Err(Error::Affinity { left: p.string_length, right: antigen.len() });
        }

        // Exposure
        self.ranked.clear();
        for (idx, ab) in self.pool.iter().enumerate() {
            self.ranked.push((hamming_affinity(ab, antigen)?, idx));
        }
        let mut remainder_affinity: Vec<(Affinity, usize)> = self.ranked[p.memory_size..]
            .iter()
            .map(|&(a, idx)| (a, idx - p.memory_size))
            .collect();

        // Selection: ties go to the lower pool index
        self.ranked.sort_unstable();

        // Cloning, maturation and clone exposition
        let mut best: Option<(Affinity, BitString)> = None;
        let mut scratch = BitString::zeros(p.string_length);
        for rank in 1..=p.select_count {
            let parent_idx = self.ranked[rank - 1].1;
            let parent = if parent_idx < p.memory_size {
                &self.pool.memory[parent_idx]
            } else {
                &self.pool.remainder[parent_idx - p.memory_size]
            };
            let rate = p.mutation.rate(rank, p.select_count);
            for _ in 0..clone_count(p.clone_factor, p.pop_size, rank)? {
                scratch.clone_from(parent);
                mutate_in_place(&mut scratch, rate, &mut self.rng);
                let aff = hamming_affinity(&scratch, antigen)?;
                if best.as_ref().is_none_or(|(b, _)| aff < *b) {
                    best = Some((aff, scratch.clone()));
                }
            }
        }

        // Candidature
        let mut memory_aff = hamming_affinity(&self.pool.memory[slot], antigen)?;
        if let Some((aff, clone)) = best {
            if aff < memory_aff {
                self.pool.memory[slot] = clone;
                memory_aff = aff;
            }
        }

        // Replacement: worst first, lower index first among equals
        if p.replace_count > 0 {
            remainder_affinity.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, idx) in remainder_affinity.iter().take(p.replace_count) {
                self.pool.remainder[idx] = BitString::random(p.string_length, &mut self.rng);
            }
        }
        Ok(memory_aff)
    }

    /// Runs every generation, exposing each antigen once per generation in
    /// a fresh random order. Antigen `j` owns memory slot `j`.
    pub fn train(&mut self, antigens: &[BitString]) -> Result<Vec<BitString>> {
        if antigens.is_empty() {
            return Err(Error::Input("at least one antigen is required".into()));
        }
        if antigens.len() != self.params.memory_size {
            return Err(Error::Config(alloc::format!(
                "{} antigens but {} memory slots",
                antigens.len(),
                self.params.memory_size
            )));
        }
        let mut order: Vec<usize> = (0..antigens.len()).collect();
        for _ in 0..self.params.generations {
            order.shuffle(&mut self.rng);
            for &j in &order {
                self.generation_step(j, &antigens[j])?;
            }
        }
        Ok(self.pool.memory.clone())
    }
}

/// Trains a fresh engine on `antigens` and returns one memory antibody per
/// antigen. `params.memory_size` is set to the antigen count.
pub fn train<R: Rng>(antigens: &[BitString], params: &ClonalgParams, rng: R) -> Result<Vec<BitString>> {
    if antigens.is_empty() {
        return Err(Error::Input("at least one antigen is required".into()));
    }
    let params = ClonalgParams { memory_size: antigens.len(), ..params.clone() };
    Clonalg::new(params, rng)?.train(antigens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::rng::StreamRng;
    use rand::SeedableRng;

    fn rng(seed: u64) -> StreamRng {
        StreamRng::seed_from_u64(seed)
    }

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn hamming_examples() {
        let a = bits("10110");
        assert_eq!(hamming_affinity(&a, &a).unwrap(), Affinity(0));
        assert_eq!(hamming_affinity(&a, &a.complement()).unwrap(), Affinity(5));
        assert_eq!(hamming_affinity(&a, &bits("10011")).unwrap(), Affinity(2));
        assert!(matches!(hamming_affinity(&a, &bits("1011")), Err(Error::Affinity { left: 5, right: 4 })));
    }

    #[test]
    fn clone_count_examples() {
        assert_eq!(clone_count(1.0, 100, 1).unwrap(), 100);
        assert_eq!(clone_count(1.0, 100, 2).unwrap(), 50);
        assert_eq!(total_clones(1.0, 10, 3).unwrap(), 18);
        // 500 + 250 + 167 + 125 + 100 + 83 + 71 + 63 + 56 + 50
        assert_eq!(total_clones(10.0, 50, 10).unwrap(), 1465);
        assert!(matches!(clone_count(1.0, 10, 0), Err(Error::Rank(0))));
        assert!(clone_count(0.0, 10, 1).is_err());
    }

    #[test]
    fn round_half_up() {
        // 1 * 5 / 2 = 2.5 -> 3
        assert_eq!(clone_count(1.0, 5, 2).unwrap(), 3);
        // 1 * 10 / 4 = 2.5 -> 3
        assert_eq!(clone_count(1.0, 10, 4).unwrap(), 3);
    }

    #[test]
    fn mutation_extremes() {
        let mut r = rng(1);
        let s = BitString::random(100, &mut r);
        assert_eq!(mutate(&s, 1, 5, &MutationSchedule::constant(0.0), &mut r), s);
        assert_eq!(mutate(&s, 3, 5, &MutationSchedule::constant(1.0), &mut r), s.complement());
    }

    #[test]
    fn mutation_rate_by_rank() {
        let s = MutationSchedule { p_min: 0.01, p_max: 0.3 };
        assert_eq!(s.rate(1, 10), 0.01);
        assert!((s.rate(10, 10) - 0.3).abs() < 1e-15);
        assert_eq!(s.rate(1, 1), 0.01);
        assert!(s.rate(4, 10) < s.rate(5, 10));
    }

    #[test]
    fn mean_flip_count_matches_binomial() {
        let mut r = rng(99);
        let base = BitString::zeros(100);
        let sched = MutationSchedule::constant(0.05);
        let total: u64 = (0..10_000)
            .map(|_| hamming_affinity(&mutate(&base, 1, 1, &sched, &mut r), &base).unwrap().0 as u64)
            .sum();
        let mean = total as f64 / 10_000.0;
        assert!((4.5..=5.5).contains(&mean), "mean flips {mean}");
    }

    #[test]
    fn params_validation() {
        let ok = ClonalgParams::default();
        assert!(ok.validate().is_ok());
        assert!(ClonalgParams { generations: 0, ..ok.clone() }.validate().is_err());
        assert!(ClonalgParams { select_count: 51, ..ok.clone() }.validate().is_err());
        assert!(ClonalgParams { select_count: 0, ..ok.clone() }.validate().is_err());
        assert!(ClonalgParams { replace_count: 50, ..ok.clone() }.validate().is_err());
        assert!(ClonalgParams { replace_count: 49, ..ok.clone() }.validate().is_ok());
        assert!(ClonalgParams { clone_factor: -1.0, ..ok.clone() }.validate().is_err());
        assert!(ClonalgParams { memory_size: 0, ..ok.clone() }.validate().is_err());
        assert!(ClonalgParams { mutation: MutationSchedule { p_min: 0.5, p_max: 0.1 }, ..ok }.validate().is_err());
    }

    #[test]
    fn present_antigen_is_retained_exactly() {
        let params = ClonalgParams {
            pop_size: 10,
            select_count: 3,
            clone_factor: 1.0,
            generations: 1,
            string_length: 40,
            mutation: MutationSchedule { p_min: 0.0, p_max: 0.5 },
            ..Default::default()
        };
        let mut r = rng(5);
        let mut pool = AntibodyPool::random(&params, &mut r);
        let antigen = BitString::random(40, &mut r);
        pool.remainder[4] = antigen.clone();
        let mut engine = Clonalg::with_pool(params, pool, r).unwrap();
        assert_eq!(engine.generation_step(0, &antigen).unwrap(), Affinity(0));
        assert_eq!(engine.pool().memory[0], antigen);
    }

    #[test]
    fn full_replacement_resamples_remainder() {
        let params = ClonalgParams { pop_size: 12, memory_size: 2, replace_count: 10, ..Default::default() };
        let mut engine = Clonalg::new(params, rng(8)).unwrap();
        let before = engine.pool().remainder.clone();
        let antigen = BitString::random(72, &mut rng(9));
        engine.generation_step(1, &antigen).unwrap();
        let after = &engine.pool().remainder;
        assert_eq!(after.len(), 10);
        assert!(before.iter().zip(after).all(|(a, b)| a != b));
        assert_eq!(engine.pool().len(), 12);
    }

    #[test]
    fn memory_affinity_never_worsens() {
        for seed in 0..5 {
            let params = ClonalgParams::default();
            let antigen = BitString::random(72, &mut rng(1000 + seed));
            let mut engine = Clonalg::new(params, rng(seed)).unwrap();
            let mut last = hamming_affinity(&engine.pool().memory[0], &antigen).unwrap();
            for _ in 0..30 {
                let now = engine.generation_step(0, &antigen).unwrap();
                assert!(now <= last);
                assert_eq!(engine.pool().len(), 50);
                last = now;
            }
        }
    }

    #[test]
    fn bernoulli_mask_rates() {
        let mut r = rng(12);
        for p in [0.01, 0.3, 0.5, 0.9] {
            let t = math::floor(p * 4_294_967_296.0) as u32;
            let ones: u32 = (0..20_000).map(|_| bernoulli_mask(t, &mut r).count_ones()).sum();
            let rate = ones as f64 / (20_000.0 * 64.0);
            assert!((rate - p).abs() < 0.005, "p = {p}: {rate}");
        }
        assert_eq!(bernoulli_mask(0, &mut r), 0);
    }

    #[test]
    fn train_contracts() {
        let params = ClonalgParams { generations: 0, ..Default::default() };
        let ag = vec![BitString::random(72, &mut rng(3))];
        assert!(matches!(train(&ag, &params, rng(1)), Err(Error::Config(_))));
        assert!(matches!(train(&[], &ClonalgParams::default(), rng(1)), Err(Error::Input(_))));
    }

    #[test]
    fn single_antigen_converges() {
        let antigen = BitString::random(72, &mut rng(77));
        let params = ClonalgParams { generations: 60, ..Default::default() };
        let mut engine = Clonalg::new(params, rng(4)).unwrap();
        let initial = engine.pool().best_affinity(&antigen).unwrap();
        let memory = engine.train(core::slice::from_ref(&antigen)).unwrap();
        let fin = hamming_affinity(&memory[0], &antigen).unwrap();
        assert!(fin <= initial);
        assert!(fin.0 <= 2, "final affinity {fin:?}");
    }

    #[test]
    fn twin_antigens_both_improve() {
        let antigen = BitString::random(72, &mut rng(21));
        let ags = vec![antigen.clone(), antigen.clone()];
        let params = ClonalgParams { memory_size: 2, ..Default::default() };
        let mut engine = Clonalg::new(params, rng(22)).unwrap();
        let initial = engine.pool().best_affinity(&antigen).unwrap();
        let memory = engine.train(&ags).unwrap();
        for m in &memory {
            assert!(hamming_affinity(m, &antigen).unwrap() <= initial);
        }
    }

    #[test]
    fn training_is_reproducible() {
        let ags: Vec<_> = (0..4).map(|i| BitString::random(48, &mut rng(i))).collect();
        let params = ClonalgParams { string_length: 48, generations: 5, ..Default::default() };
        assert_eq!(train(&ags, &params, rng(10)).unwrap(), train(&ags, &params, rng(10)).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn brute_hamming(a: &[bool], b: &[bool]) -> u32 {
            let mut d = 0;
            for i in 0..a.len() {
                if a[i] != b[i] {
                    d += 1;
                }
            }
            d
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn hamming_matches_positional_count(
                pair in (1usize..200).prop_flat_map(|l| (
                    proptest::collection::vec(any::<bool>(), l),
                    proptest::collection::vec(any::<bool>(), l),
                ))
            ) {
                let (a, b) = pair;
                let (x, y) = (BitString::from_bits(&a), BitString::from_bits(&b));
                let d = hamming_affinity(&x, &y).unwrap();
                prop_assert_eq!(d.0, brute_hamming(&a, &b));
                prop_assert_eq!(d, hamming_affinity(&y, &x).unwrap());
                prop_assert!(d.0 as usize <= a.len());
                prop_assert_eq!(d.0 == 0, a == b);
            }
        }
    }
}

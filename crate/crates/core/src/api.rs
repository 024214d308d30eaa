//! Ant-foraging minimizer modelled on *Pachycondyla apicalis*.
//!
//! Each ant keeps up to `p` hunting sites created around the nest with its
//! site amplitude, and explores locally around them with its (smaller) local
//! amplitude. An exploration that lowers the objective replaces the site and
//! keeps the ant on it; a site that fails `P_local` times in a row is
//! forgotten. Periodically the nest moves to the best point found so far and
//! every ant forgets its sites.
//!
//! Amplitudes are fractions of each dimension's range, so a single parameter
//! set works for any box-shaped search space.

use alloc::vec::Vec;
use rand::Rng;

use crate::error::{Error, Result};
use crate::math;

/// Axis-aligned box `[lower, upper]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Shape { expected: lower.len(), found: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::Config("search space needs at least one dimension".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(alloc::format!("dimension {i}: bounds [{lo}, {hi}] are not a finite interval")));
            }
        }
        Ok(SearchSpace { lower, upper })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        SearchSpace::new(alloc::vec![lo; dim], alloc::vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, lo), hi)| lo <= v && v <= hi)
    }
}

/// Uniform point in the search space.
pub fn o_rand<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> Vec<f64> {
    space.lower.iter().zip(&space.upper).map(|(lo, hi)| lo + rng.gen::<f64>() * (hi - lo)).collect()
}

/// Uniform point in the box `center ± amplitude·range/2`, intersected with
/// the search space.
pub fn o_explo<R: Rng + ?Sized>(center: &[f64], amplitude: f64, space: &SearchSpace, rng: &mut R) -> Vec<f64> {
    center
        .iter()
        .zip(space.lower.iter().zip(&space.upper))
        .map(|(&c, (&lo, &hi))| {
            let half = amplitude * (hi - lo) / 2.0;
            let a = (c - half).max(lo);
            let b = (c + half).min(hi);
            (a + rng.gen::<f64>() * (b - a)).clamp(lo, hi)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HuntingSite {
    pub position: Vec<f64>,
    pub value: f64,
    /// Consecutive unsuccessful explorations.
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ant {
    pub sites: Vec<HuntingSite>,
    pub a_site: f64,
    pub a_local: f64,
    /// Site whose last exploration succeeded.
    pub last_site: Option<usize>,
}

impl Ant {
    pub fn new(a_site: f64, a_local: f64) -> Self {
        Ant { sites: Vec::new(), a_site, a_local, last_site: None }
    }

    /// Forgets every hunting site.
    pub fn clear(&mut self) {
        self.sites.clear();
        self.last_site = None;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApiParams {
    /// NbrAnt.
    pub nbr_ant: usize,
    /// NbrSit: hunting sites per ant (p).
    pub nbr_sit: usize,
    /// P_local: failures before a site is forgotten.
    pub patience: usize,
    /// NbrItr: iteration cap (T2).
    pub nbr_itr: usize,
    /// Homogeneous site amplitude.
    pub a_site: f64,
    /// Homogeneous local amplitude.
    pub a_local: f64,
    pub heterogeneous: bool,
    /// Heterogeneous site amplitudes span `[min, max]`.
    pub a_site_min: f64,
    pub a_site_max: f64,
    /// Heterogeneous local amplitude as a fraction of the site amplitude.
    pub local_ratio: f64,
    /// Iterations between nest relocations.
    pub nest_period: usize,
    /// T1: stop after this many iterations without improvement.
    pub stagnation: Option<usize>,
    /// T3: objective evaluation budget.
    pub max_evaluations: Option<u64>,
}

impl Default for ApiParams {
    fn default() -> Self {
        ApiParams {
            nbr_ant: 24,
            nbr_sit: 12,
            patience: 15,
            nbr_itr: 35,
            a_site: 0.1,
            a_local: 0.01,
            heterogeneous: true,
            a_site_min: 0.01,
            a_site_max: 0.5,
            local_ratio: 0.1,
            nest_period: 1,
            stagnation: None,
            max_evaluations: None,
        }
    }
}

impl ApiParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.into()));
        if self.nbr_ant == 0 {
            return fail("NbrAnt must be at least 1");
        }
        if self.nbr_sit == 0 || self.patience == 0 || self.nbr_itr == 0 || self.nest_period == 0 {
            return fail("NbrSit, P_local, NbrItr and the nest period must be at least 1");
        }
        if self.stagnation == Some(0) || self.max_evaluations == Some(0) {
            return fail("stopping windows must be at least 1");
        }
        let unit = |a: f64| a > 0.0 && a <= 1.0;
        if self.heterogeneous {
            if !unit(self.a_site_min) || !unit(self.a_site_max) || self.a_site_min > self.a_site_max {
                return fail("heterogeneous site amplitudes must satisfy 0 < min <= max <= 1");
            }
            if !unit(self.local_ratio) {
                return fail("local amplitude ratio must lie in (0, 1]");
            }
        } else if !unit(self.a_site) || !unit(self.a_local) || self.a_local > self.a_site {
            return fail("amplitudes must satisfy 0 < A_local <= A_site <= 1");
        }
        Ok(())
    }
}

/// Builds the colony. Heterogeneous colonies spread site amplitudes
/// geometrically from `a_site_max` (ant 0) down to `a_site_min` (last ant).
pub fn make_population(params: &ApiParams) -> Result<Vec<Ant>> {
    params.validate()?;
    let n = params.nbr_ant;
    if !params.heterogeneous {
        return Ok((0..n).map(|_| Ant::new(params.a_site, params.a_local)).collect());
    }
    let ratio = params.a_site_min / params.a_site_max;
    Ok((0..n)
        .map(|i| {
            let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            let a_site = params.a_site_max * math::powf(ratio, t);
            Ant::new(a_site, a_site * params.local_ratio)
        })
        .collect())
}

/// Objective wrapper that counts evaluations, enforces the budget and
/// remembers the best point seen.
pub struct Evaluator<F> {
    f: F,
    evaluations: u64,
    budget: Option<u64>,
    best: Option<(Vec<f64>, f64)>,
}

impl<F: FnMut(&[f64]) -> f64> Evaluator<F> {
    pub fn new(f: F, budget: Option<u64>) -> Self {
        Evaluator { f, evaluations: 0, budget, best: None }
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn exhausted(&self) -> bool {
        self.budget.is_some_and(|b| self.evaluations >= b)
    }

    pub fn best(&self) -> Option<(&[f64], f64)> {
        self.best.as_ref().map(|(x, v)| (x.as_slice(), *v))
    }

    /// Evaluates `x`, or returns `None` once the budget is spent.
    pub fn eval(&mut self, x: &[f64]) -> Result<Option<f64>> {
        if self.exhausted() {
            return Ok(None);
        }
        let v = (self.f)(x);
        self.evaluations += 1;
        if !v.is_finite() {
            return Err(Error::Objective(v));
        }
        if self.best.as_ref().is_none_or(|(_, b)| v < *b) {
            self.best = Some((x.to_vec(), v));
        }
        Ok(Some(v))
    }
}

/// What one foraging step did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Foraging {
    /// A new site was placed around the nest.
    Created,
    /// Local exploration of the site improved it.
    Improved(usize),
    /// Local exploration failed.
    Failed(usize),
    /// Local exploration failed and the site was forgotten.
    Forgotten(usize),
    /// The evaluation budget is spent.
    Exhausted,
}

/// One step of the foraging automaton for `ant`.
pub fn api_foraging<F, R>(
    ant: &mut Ant,
    nest: &[f64],
    space: &SearchSpace,
    params: &ApiParams,
    eval: &mut Evaluator<F>,
    rng: &mut R,
) -> Result<Foraging>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if ant.sites.len() < params.nbr_sit {
        let position = o_explo(nest, ant.a_site, space, rng);
        let Some(value) = eval.eval(&position)? else {
            return Ok(Foraging::Exhausted);
        };
        ant.sites.push(HuntingSite { position, value, failures: 0 });
        return Ok(Foraging::Created);
    }

    let j = match ant.last_site {
        Some(j) if j < ant.sites.len() => j,
        _ => rng.gen_range(0..ant.sites.len()),
    };
    let candidate = o_explo(&ant.sites[j].position, ant.a_local, space, rng);
    let Some(value) = eval.eval(&candidate)? else {
        return Ok(Foraging::Exhausted);
    };
    let site = &mut ant.sites[j];
    if value < site.value {
        site.position = candidate;
        site.value = value;
        site.failures = 0;
        ant.last_site = Some(j);
        return Ok(Foraging::Improved(j));
    }
    site.failures += 1;
    ant.last_site = None;
    if site.failures >= params.patience {
        ant.sites.remove(j);
        return Ok(Foraging::Forgotten(j));
    }
    Ok(Foraging::Failed(j))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApiResult {
    /// s⁺.
    pub best: Vec<f64>,
    /// f(s⁺).
    pub value: f64,
    /// Best-so-far value after each iteration.
    pub trace: Vec<f64>,
    pub evaluations: u64,
    pub iterations: usize,
}

/// Moves the nest to `best` (when known) and clears every ant's memory.
pub fn relocate_nest(nest: &mut Vec<f64>, ants: &mut [Ant], best: Option<&[f64]>) {
    if let Some(s) = best {
        nest.clear();
        nest.extend_from_slice(s);
    }
    ants.iter_mut().for_each(Ant::clear);
}

/// Minimizes `f` over `space` starting from a random nest.
pub fn run<F, R>(f: F, space: &SearchSpace, params: &ApiParams, rng: &mut R) -> Result<ApiResult>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    run_from(f, space, params, None, rng)
}

/// Minimizes `f`, optionally placing the first nest at `start`. A given
/// start point is evaluated first, so the result is never worse than it.
pub fn run_from<F, R>(
    f: F,
    space: &SearchSpace,
    params: &ApiParams,
    start: Option<&[f64]>,
    rng: &mut R,
) -> Result<ApiResult>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    params.validate()?;
    let mut ants = make_population(params)?;
    let mut eval = Evaluator::new(f, params.max_evaluations);
    let mut nest = match start {
        Some(s) => {
            if !space.contains(s) {
                return Err(Error::Input("start point lies outside the search space".into()));
            }
            eval.eval(s)?;
            s.to_vec()
        }
        None => o_rand(space, rng),
    };

    let mut trace = Vec::with_capacity(params.nbr_itr);
    let mut iterations = 0;
    let mut since_improvement = 0;
    let mut last_best = f64::INFINITY;
    while iterations < params.nbr_itr {
        let mut exhausted = false;
        for ant in ants.iter_mut() {
            if api_foraging(ant, &nest, space, params, &mut eval, rng)? == Foraging::Exhausted {
                exhausted = true;
                break;
            }
        }
        iterations += 1;
        let best = eval.best().map_or(f64::INFINITY, |(_, v)| v);
        trace.push(best);
        if best < last_best {
            last_best = best;
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if exhausted || eval.exhausted() || params.stagnation.is_some_and(|w| since_improvement >= w) {
            break;
        }
        if iterations % params.nest_period == 0 {
            relocate_nest(&mut nest, &mut ants, eval.best().map(|(s, _)| s));
        }
    }

    let evaluations = eval.evaluations();
    let (best, value) = eval.best.ok_or(Error::State("no point was evaluated"))?;
    Ok(ApiResult { best, value, trace, evaluations, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;
    use alloc::vec;
    use rand::SeedableRng;

    fn rng(seed: u64) -> StreamRng {
        StreamRng::seed_from_u64(seed)
    }

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn o_rand_stays_inside_and_is_uniform() {
        let tiny = SearchSpace::cube(3, 0.0, 1e-9).unwrap();
        let mut r = rng(1);
        for _ in 0..100 {
            assert!(tiny.contains(&o_rand(&tiny, &mut r)));
        }
        let unit = SearchSpace::cube(1, 0.0, 1.0).unwrap();
        let mean = (0..10_000).map(|_| o_rand(&unit, &mut r)[0]).sum::<f64>() / 10_000.0;
        assert!((0.45..=0.55).contains(&mean));
        let a: Vec<_> = (0..5).map(|_| o_rand(&unit, &mut rng(3))).collect();
        let b: Vec<_> = (0..5).map(|_| o_rand(&unit, &mut rng(3))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn o_explo_respects_amplitude() {
        let space = SearchSpace::cube(2, -1.0, 1.0).unwrap();
        let mut r = rng(2);
        let c = [0.3, -0.2];
        for _ in 0..1000 {
            let p = o_explo(&c, 1e-6, &space, &mut r);
            assert!((p[0] - 0.3).abs() <= 1e-6 && (p[1] + 0.2).abs() <= 1e-6);
        }
        // amplitude 1 around the midpoint covers the whole box
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..5000 {
            let p = o_explo(&[0.0, 0.0], 1.0, &space, &mut r);
            lo = lo.min(p[0]);
            hi = hi.max(p[0]);
        }
        assert!(lo < -0.99 && hi > 0.99);
    }

    #[test]
    fn o_explo_clamps_at_corners() {
        let space = SearchSpace::cube(4, -1.0, 1.0).unwrap();
        let mut r = rng(3);
        for k in 0..1000 {
            let corner: Vec<f64> = (0..4).map(|d| if (k >> d) & 1 == 1 { 1.0 } else { -1.0 }).collect();
            assert!(space.contains(&o_explo(&corner, 0.1, &space, &mut r)));
        }
    }

    #[test]
    fn population_modes() {
        let hom = ApiParams { heterogeneous: false, ..Default::default() };
        let ants = make_population(&hom).unwrap();
        assert_eq!(ants.len(), 24);
        assert!(ants.iter().all(|a| a.a_site == 0.1 && a.a_local == 0.01));

        let two = ApiParams { nbr_ant: 2, ..Default::default() };
        let ants = make_population(&two).unwrap();
        assert!((ants[0].a_site - 0.5).abs() < 1e-15);
        assert!((ants[1].a_site - 0.01).abs() < 1e-15);

        let ants = make_population(&ApiParams::default()).unwrap();
        for w in ants.windows(2) {
            assert!(w[1].a_site < w[0].a_site && w[1].a_local < w[0].a_local);
        }
        for a in &ants {
            assert!(0.0 < a.a_local && a.a_local <= a.a_site && a.a_site <= 1.0);
        }
        assert!(make_population(&ApiParams { nbr_ant: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn constant_objective_forgets_every_site() {
        let space = SearchSpace::cube(2, -1.0, 1.0).unwrap();
        let params = ApiParams { nbr_sit: 4, patience: 3, ..Default::default() };
        let mut ant = Ant::new(0.2, 0.02);
        let mut eval = Evaluator::new(|_: &[f64]| 1.0, None);
        let mut r = rng(4);
        let nest = [0.0, 0.0];
        for _ in 0..4 {
            assert_eq!(api_foraging(&mut ant, &nest, &space, &params, &mut eval, &mut r).unwrap(), Foraging::Created);
        }
        let initial: Vec<Vec<f64>> = ant.sites.iter().map(|s| s.position.clone()).collect();
        let (mut failures, mut forgotten) = (0, 0);
        for _ in 0..200 {
            match api_foraging(&mut ant, &nest, &space, &params, &mut eval, &mut r).unwrap() {
                Foraging::Failed(_) => failures += 1,
                Foraging::Forgotten(_) => {
                    failures += 1;
                    forgotten += 1;
                }
                Foraging::Created => {}
                other => panic!("unexpected {other:?}"),
            }
            assert!(ant.sites.iter().all(|s| s.failures < params.patience));
        }
        let pending: usize = ant.sites.iter().map(|s| s.failures).sum();
        assert_eq!(failures, forgotten * params.patience + pending);
        assert!(initial.iter().all(|p| ant.sites.iter().all(|s| &s.position != p)));
    }

    #[test]
    fn improving_site_is_revisited() {
        let space = SearchSpace::cube(2, -1.0, 1.0).unwrap();
        let params = ApiParams { nbr_sit: 3, ..Default::default() };
        let mut calls = 0.0;
        let mut eval = Evaluator::new(
            move |_: &[f64]| {
                calls += 1.0;
                -calls
            },
            None,
        );
        let mut ant = Ant::new(0.2, 0.02);
        let mut r = rng(5);
        for _ in 0..3 {
            api_foraging(&mut ant, &[0.0, 0.0], &space, &params, &mut eval, &mut r).unwrap();
        }
        let first = match api_foraging(&mut ant, &[0.0, 0.0], &space, &params, &mut eval, &mut r).unwrap() {
            Foraging::Improved(j) => j,
            other => panic!("unexpected {other:?}"),
        };
        for _ in 0..10 {
            assert_eq!(
                api_foraging(&mut ant, &[0.0, 0.0], &space, &params, &mut eval, &mut r).unwrap(),
                Foraging::Improved(first)
            );
        }
    }

    #[test]
    fn failure_counters_bounded_over_runs() {
        let space = SearchSpace::cube(3, -2.0, 2.0).unwrap();
        for seed in 0..10 {
            let params = ApiParams { nbr_ant: 4, nbr_sit: 3, patience: 2, nest_period: 1000, ..Default::default() };
            let mut ants = make_population(&params).unwrap();
            let mut eval = Evaluator::new(sphere, None);
            let mut r = rng(seed);
            let nest = o_rand(&space, &mut r);
            for _ in 0..300 {
                for ant in ants.iter_mut() {
                    api_foraging(ant, &nest, &space, &params, &mut eval, &mut r).unwrap();
                    assert!(ant.sites.len() <= params.nbr_sit);
                    assert!(ant.sites.iter().all(|s| s.failures <= params.patience));
                    assert!(ant.sites.iter().all(|s| space.contains(&s.position)));
                }
            }
        }
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let space = SearchSpace::cube(1, 0.0, 1.0).unwrap();
        let err = run(|_: &[f64]| f64::NAN, &space, &ApiParams::default(), &mut rng(1)).unwrap_err();
        assert!(matches!(err, Error::Objective(_)));
    }

    #[test]
    fn constant_objective_run() {
        let space = SearchSpace::cube(2, -1.0, 1.0).unwrap();
        let res = run(|_: &[f64]| 3.5, &space, &ApiParams::default(), &mut rng(6)).unwrap();
        assert_eq!(res.value, 3.5);
        assert!(space.contains(&res.best));
    }

    #[test]
    fn sphere_2d_defaults() {
        let space = SearchSpace::cube(2, -1.0, 1.0).unwrap();
        let hits = (0..10)
            .filter(|&s| run(sphere, &space, &ApiParams::default(), &mut rng(s)).unwrap().value < 1e-2)
            .count();
        assert!(hits >= 9, "{hits}/10");
    }

    #[test]
    fn trace_is_monotone_and_points_in_bounds() {
        let space = SearchSpace::new(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 3.0]).unwrap();
        let params = ApiParams { nbr_itr: 50, ..Default::default() };
        let res = run(
            |x: &[f64]| {
                assert!(space.contains(x));
                x.iter().map(|v| (v - 0.25).powi(2)).sum()
            },
            &space,
            &params,
            &mut rng(7),
        )
        .unwrap();
        assert_eq!(res.trace.len(), 50);
        assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*res.trace.last().unwrap(), res.value);
    }

    #[test]
    fn stopping_rules() {
        let space = SearchSpace::cube(2, -1.0, 1.0).unwrap();
        let capped = ApiParams { max_evaluations: Some(100), ..Default::default() };
        let res = run(sphere, &space, &capped, &mut rng(8)).unwrap();
        assert_eq!(res.evaluations, 100);

        let stagnant = ApiParams { stagnation: Some(3), nbr_itr: 1000, ..Default::default() };
        let res = run(|_: &[f64]| 0.0, &space, &stagnant, &mut rng(9)).unwrap();
        assert_eq!(res.iterations, 4);
    }

    #[test]
    fn nest_relocation_clears_memory() {
        let space = SearchSpace::cube(2, -1.0, 1.0).unwrap();
        let params = ApiParams { nbr_ant: 3, ..Default::default() };
        let mut ants = make_population(&params).unwrap();
        let mut eval = Evaluator::new(sphere, None);
        let mut nest = vec![0.5, 0.5];
        let mut r = rng(10);
        for _ in 0..4 {
            for ant in ants.iter_mut() {
                api_foraging(ant, &nest, &space, &params, &mut eval, &mut r).unwrap();
            }
        }
        assert!(ants.iter().all(|a| a.sites.len() == 4));
        let best = eval.best().unwrap().0.to_vec();
        relocate_nest(&mut nest, &mut ants, Some(&best));
        assert_eq!(nest, best);
        assert!(ants.iter().all(|a| a.sites.is_empty() && a.last_site.is_none()));
    }

    #[test]
    fn seeded_start_is_never_lost() {
        let space = SearchSpace::cube(2, -1.0, 1.0).unwrap();
        let res = run_from(sphere, &space, &ApiParams::default(), Some(&[0.0, 0.0]), &mut rng(11)).unwrap();
        assert_eq!(res.value, 0.0);
        assert!(run_from(sphere, &space, &ApiParams::default(), Some(&[2.0, 0.0]), &mut rng(11)).is_err());
    }

    #[test]
    fn reproducible() {
        let space = SearchSpace::cube(3, -1.0, 1.0).unwrap();
        let a = run(sphere, &space, &ApiParams::default(), &mut rng(12)).unwrap();
        let b = run(sphere, &space, &ApiParams::default(), &mut rng(12)).unwrap();
        assert_eq!(a, b);
    }
}

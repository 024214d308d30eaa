//! Growing neural gas with a utility factor (GNG-U).
//!
//! Nodes follow the data like plain GNG: the winner and its topological
//! neighbours move toward each sample, edges age and die, and every
//! `lambda` samples a node is inserted where the accumulated error is
//! largest. The utility of a node is how much the quantization error would
//! grow without it; a node whose utility falls far below the largest error
//! is removed, which lets the network follow a moving or clustered
//! distribution instead of leaving dead units behind.

use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::math::squared_distance;

#[derive(Clone, Debug, PartialEq)]
pub struct GnguParams {
    /// NbrNeur: node cap.
    pub max_nodes: usize,
    /// Winner learning rate.
    pub eps_b: f64,
    /// Neighbour learning rate.
    pub eps_n: f64,
    /// Samples between insertions.
    pub lambda: usize,
    /// Error reduction of the two nodes around an insertion.
    pub alpha: f64,
    /// Per-sample decay of errors and utilities.
    pub decay: f64,
    /// A node is removed when `max_error > k_utility * its utility`.
    pub k_utility: f64,
    pub max_age: u32,
    /// Passes over the data.
    pub epochs: usize,
    /// Lloyd iterations applied to the final nodes; 0 keeps the raw network.
    pub refine_iters: usize,
}

impl Default for GnguParams {
    fn default() -> Self {
        GnguParams {
            max_nodes: 12,
            eps_b: 0.05,
            eps_n: 0.006,
            lambda: 100,
            alpha: 0.5,
            decay: 0.995,
            k_utility: 1000.0,
            max_age: 88,
            epochs: 20,
            refine_iters: 10,
        }
    }
}

impl GnguParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.into()));
        if self.max_nodes < 2 {
            return fail("GNG-U needs at least 2 nodes");
        }
        if !(0.0 < self.eps_n && self.eps_n < self.eps_b && self.eps_b < 1.0) {
            return fail("learning rates must satisfy 0 < eps_n < eps_b < 1");
        }
        if self.lambda == 0 || self.epochs == 0 || self.max_age == 0 {
            return fail("lambda, epochs and max_age must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) || !(self.decay > 0.0 && self.decay <= 1.0) {
            return fail("alpha and the decay factor must lie in (0, 1]");
        }
        if !(self.k_utility > 0.0) {
            return fail("utility threshold must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnguNode {
    pub position: Vec<f64>,
    pub error: f64,
    pub utility: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Edge {
    a: usize,
    b: usize,
    age: u32,
}

impl Edge {
    fn touches(&self, n: usize) -> bool {
        self.a == n || self.b == n
    }

    fn other(&self, n: usize) -> usize {
        if self.a == n { self.b } else { self.a }
    }
}

/// A GNG-U network being trained.
#[derive(Clone, Debug)]
pub struct Gngu {
    params: GnguParams,
    nodes: Vec<GnguNode>,
    edges: Vec<Edge>,
    steps: usize,
}

impl Gngu {
    /// Starts a network with two nodes at `a` and `b`.
    pub fn new(params: GnguParams, a: &[f64], b: &[f64]) -> Result<Self> {
        params.validate()?;
        if a.len() != b.len() {
            return Err(Error::Shape { expected: a.len(), found: b.len() });
        }
        let node = |p: &[f64]| GnguNode { position: p.to_vec(), error: 0.0, utility: 0.0 };
        Ok(Gngu { params, nodes: alloc::vec![node(a), node(b)], edges: alloc::vec![Edge { a: 0, b: 1, age: 0 }], steps: 0 })
    }

    pub fn nodes(&self) -> &[GnguNode] {
        &self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn positions(&self) -> Vec<Vec<f64>> {
        self.nodes.iter().map(|n| n.position.clone()).collect()
    }

    /// Presents one sample.
    pub fn adapt(&mut self, x: &[f64]) -> Result<()> {
        let dim = self.nodes[0].position.len();
        if x.len() != dim {
            return Err(Error::Shape { expected: dim, found: x.len() });
        }
        let p = &self.params;

        let (mut s1, mut s2) = (0, 1);
        let (mut d1, mut d2) = (f64::INFINITY, f64::INFINITY);
        for (i, node) in self.nodes.iter().enumerate() {
            let d = squared_distance(&node.position, x);
            if d < d1 {
                (s2, d2) = (s1, d1);
                (s1, d1) = (i, d);
            } else if d < d2 {
                (s2, d2) = (i, d);
            }
        }

        for e in self.edges.iter_mut().filter(|e| e.touches(s1)) {
            e.age += 1;
        }
        self.nodes[s1].error += d1;
        self.nodes[s1].utility += d2 - d1;

        move_toward(&mut self.nodes[s1].position, x, p.eps_b);
        for e in &self.edges {
            if e.touches(s1) {
                move_toward(&mut self.nodes[e.other(s1)].position, x, p.eps_n);
            }
        }

        match self.edges.iter_mut().find(|e| e.touches(s1) && e.touches(s2)) {
            Some(e) => e.age = 0,
            None => self.edges.push(Edge { a: s1, b: s2, age: 0 }),
        }

        let max_age = p.max_age;
        self.edges.retain(|e| e.age <= max_age);
        let mut i = 0;
        while i < self.nodes.len() {
            if self.nodes.len() > 2 && !self.edges.iter().any(|e| e.touches(i)) {
                self.remove_node(i);
            } else {
                i += 1;
            }
        }

        self.remove_useless_node();

        self.steps += 1;
        if self.steps.is_multiple_of(self.params.lambda) && self.nodes.len() < self.params.max_nodes {
            self.insert_node();
        }

        let decay = self.params.decay;
        for n in &mut self.nodes {
            n.error *= decay;
            n.utility *= decay;
        }
        Ok(())
    }

    fn remove_useless_node(&mut self) {
        if self.nodes.len() <= 2 {
            return;
        }
        let max_error = self.nodes.iter().map(|n| n.error).fold(0.0, f64::max);
        let (weakest, min_utility) = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (i, n.utility))
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        if max_error > self.params.k_utility * min_utility {
            self.remove_node(weakest);
        }
    }

    fn insert_node(&mut self) {
        let q = argmax(self.nodes.iter().map(|n| n.error));
        let f = self
            .edges
            .iter()
            .filter(|e| e.touches(q))
            .map(|e| e.other(q))
            .max_by(|&a, &b| self.nodes[a].error.total_cmp(&self.nodes[b].error).then(b.cmp(&a)));
        let Some(f) = f else { return };

        let position = self.nodes[q].position.iter().zip(&self.nodes[f].position).map(|(a, b)| (a + b) / 2.0).collect();
        self.nodes[q].error *= self.params.alpha;
        self.nodes[f].error *= self.params.alpha;
        let r = self.nodes.len();
        self.nodes.push(GnguNode {
            position,
            error: self.nodes[q].error,
            utility: (self.nodes[q].utility + self.nodes[f].utility) / 2.0,
        });
        self.edges.retain(|e| !(e.touches(q) && e.touches(f)));
        self.edges.push(Edge { a: q, b: r, age: 0 });
        self.edges.push(Edge { a: r, b: f, age: 0 });
    }

    fn remove_node(&mut self, i: usize) {
        self.nodes.remove(i);
        self.edges.retain(|e| !e.touches(i));
        for e in &mut self.edges {
            if e.a > i {
                e.a -= 1;
            }
            if e.b > i {
                e.b -= 1;
            }
        }
    }

    /// Mean squared distance from each sample to its nearest node.
    pub fn quantization_error<S: AsRef<[f64]>>(&self, samples: &[S]) -> f64 {
        quantization_error(&self.positions(), samples)
    }
}

fn move_toward(w: &mut [f64], x: &[f64], rate: f64) {
    for (wi, xi) in w.iter_mut().zip(x) {
        *wi += rate * (xi - *wi);
    }
}

/// First index of the largest value.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    values.enumerate().fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc }).0
}

/// Mean squared distance from each sample to the nearest of `centers`.
pub fn quantization_error<S: AsRef<[f64]>>(centers: &[Vec<f64>], samples: &[S]) -> f64 {
    let total: f64 = samples
        .iter()
        .map(|s| centers.iter().map(|c| squared_distance(c, s.as_ref())).fold(f64::INFINITY, f64::min))
        .sum();
    total / samples.len().max(1) as f64
}

/// Fits a GNG-U network to `samples` and returns the node positions.
/// Samples are reshuffled with `rng` before every epoch.
pub fn gngu_fit<S, R>(samples: &[S], params: &GnguParams, rng: &mut R) -> Result<Vec<Vec<f64>>>
where
    S: AsRef<[f64]>,
    R: Rng + ?Sized,
{
    params.validate()?;
    if samples.len() < 2 {
        return Err(Error::Input(alloc::format!("GNG-U needs at least 2 samples, got {}", samples.len())));
    }
    let dim = samples[0].as_ref().len();
    if let Some(bad) = samples.iter().find(|s| s.as_ref().len() != dim) {
        return Err(Error::Shape { expected: dim, found: bad.as_ref().len() });
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let first = rng.gen_range(0..samples.len());
    let mut second = rng.gen_range(0..samples.len() - 1);
    if second >= first {
        second += 1;
    }
    let mut net = Gngu::new(params.clone(), samples[first].as_ref(), samples[second].as_ref())?;
    for _ in 0..params.epochs {
        order.shuffle(rng);
        for &i in &order {
            net.adapt(samples[i].as_ref())?;
        }
    }
    let mut centers = net.positions();
    for _ in 0..params.refine_iters {
        if !lloyd_step(&mut centers, samples) {
            break;
        }
    }
    Ok(centers)
}

/// Moves every center to the mean of the samples closest to it. Centers
/// without samples stay put. Returns whether anything moved.
fn lloyd_step<S: AsRef<[f64]>>(centers: &mut [Vec<f64>], samples: &[S]) -> bool {
    let dim = centers.first().map_or(0, Vec::len);
    let mut sums = alloc::vec![0.0; centers.len() * dim];
    let mut counts = alloc::vec![0usize; centers.len()];
    for s in samples {
        let s = s.as_ref();
        let mut nearest = 0;
        let mut best = f64::INFINITY;
        for (j, c) in centers.iter().enumerate() {
            let d = squared_distance(c, s);
            if d < best {
                (nearest, best) = (j, d);
            }
        }
        counts[nearest] += 1;
        for (acc, v) in sums[nearest * dim..(nearest + 1) * dim].iter_mut().zip(s) {
            *acc += v;
        }
    }
    let mut moved = false;
    for (j, c) in centers.iter_mut().enumerate() {
        if counts[j] == 0 {
            continue;
        }
        for (k, x) in c.iter_mut().enumerate() {
            let mean = sums[j * dim + k] / counts[j] as f64;
            moved |= mean != *x;
            *x = mean;
        }
    }
    moved
}

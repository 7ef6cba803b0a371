//! Undirected exponential random graph models with edge and two-star statistics.

use alloc::format;
use alloc::vec::Vec;

use rand::RngCore;

use crate::model::{check_dim, ModelFamily, ModelSpec, ParamVector, SuffStat};
use crate::{math, Domain, Error, RandomStream, Result};

/// Largest dyad count `z_graph_brute` will enumerate.
pub const MAX_ENUMERATION_DYADS: usize = 20;

/// Simple undirected graph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    adj: Vec<bool>,
    degree: Vec<u32>,
    edges: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GraphStats {
    pub edges: u64,
    pub two_stars: u64,
}

impl UndirectedGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adj: alloc::vec![false; n * n],
            degree: alloc::vec![0; n],
            edges: 0,
        }
    }

    /// Graph from zero-indexed edges; rejects self-loops, repeats and out-of-range nodes.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            if g.has_edge(i, j) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
            g.toggle(i, j);
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn dyad_count(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.degree[i]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    /// Flips dyad `(i, j)` and returns the change in `(edges, two_stars)`.
    pub fn toggle(&mut self, i: usize, j: usize) -> (i64, i64) {
        assert!(i != j && i < self.n && j < self.n);
        let present = self.has_edge(i, j);
        let (di, dj) = (i64::from(self.degree[i]), i64::from(self.degree[j]));
        self.adj[i * self.n + j] = !present;
        self.adj[j * self.n + i] = !present;
        if present {
            self.degree[i] -= 1;
            self.degree[j] -= 1;
            self.edges -= 1;
            (-1, -(di + dj - 2))
        } else {
            self.degree[i] += 1;
            self.degree[j] += 1;
            self.edges += 1;
            (1, di + dj)
        }
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            (i + 1..self.n)
                .filter(move |&j| self.has_edge(i, j))
                .map(move |j| (i, j))
        })
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            edges: self.edges as u64,
            two_stars: self
                .degree
                .iter()
                .map(|&d| u64::from(d) * u64::from(d.saturating_sub(1)) / 2)
                .sum(),
        }
    }

    /// Relabels node `k` as `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        let mapped: Vec<(usize, usize)> = self.edges().map(|(i, j)| (perm[i], perm[j])).collect();
        Self::from_edges(self.n, &mapped)
    }
}

fn ergm_nodes(spec: &ModelSpec) -> Result<usize> {
    match (spec.family(), spec.domain()) {
        (ModelFamily::ErgmEdges | ModelFamily::ErgmEdgesTwoStars, Domain::Graph { nodes }) => {
            Ok(nodes)
        }
        _ => Err(Error::InvalidModel("not an ERGM")),
    }
}

/// `(edges)` or `(edges, two_stars)` according to the model family.
pub fn graph_stats(g: &UndirectedGraph, spec: &ModelSpec) -> Result<SuffStat> {
    check_dim(ergm_nodes(spec)?, g.node_count())?;
    let s = g.stats();
    Ok(match spec.family() {
        ModelFamily::ErgmEdges => SuffStat(alloc::vec![s.edges as f64]),
        _ => SuffStat(alloc::vec![s.edges as f64, s.two_stars as f64]),
    })
}

const ONE: u64 = 1 << 32;

/// Heat-bath dyad sampler.
///
/// Each sweep visits every dyad in lexicographic order and resamples it from
/// its full conditional, which depends only on the degrees of its endpoints
/// with the dyad itself removed.
#[derive(Clone, Debug)]
pub struct ErgmSampler {
    graph: UndirectedGraph,
    two_star: bool,
    edges: i64,
    two_stars: i64,
    thresholds: Vec<u64>,
    zero_field: bool,
}

impl ErgmSampler {
    pub fn new(n: usize, two_star: bool) -> Self {
        Self {
            graph: UndirectedGraph::empty(n),
            two_star,
            edges: 0,
            two_stars: 0,
            thresholds: alloc::vec![ONE / 2; 2 * n.max(2) - 3],
            zero_field: true,
        }
    }

    pub fn for_spec(spec: &ModelSpec) -> Result<Self> {
        let n = ergm_nodes(spec)?;
        Ok(Self::new(
            n,
            spec.family() == ModelFamily::ErgmEdgesTwoStars,
        ))
    }

    pub fn statistic_count(&self) -> usize {
        if self.two_star {
            2
        } else {
            1
        }
    }

    /// Tabulates `P(Y_ij = 1 | rest)` against the endpoint degree sum `k` (dyad excluded).
    pub fn set_theta(&mut self, theta: &[f64]) -> Result<()> {
        check_dim(self.statistic_count(), theta.len())?;
        let t1 = theta[0];
        let t2 = theta.get(1).copied().unwrap_or(0.0);
        self.zero_field = t1 == 0.0 && t2 == 0.0;
        for (k, thr) in self.thresholds.iter_mut().enumerate() {
            let h = t1 + t2 * k as f64;
            let p = 1.0 / (1.0 + math::exp(-h));
            *thr = (libm::round(p * ONE as f64) as u64).min(ONE);
        }
        Ok(())
    }

    pub fn clear(&mut self) {
        self.graph = UndirectedGraph::empty(self.graph.n);
        self.edges = 0;
        self.two_stars = 0;
    }

    pub fn load(&mut self, g: &UndirectedGraph) {
        assert_eq!(g.node_count(), self.graph.n);
        self.graph = g.clone();
        let s = g.stats();
        self.edges = s.edges as i64;
        self.two_stars = s.two_stars as i64;
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            edges: self.edges as u64,
            two_stars: self.two_stars as u64,
        }
    }

    fn randomize(&mut self, rng: &mut RandomStream) {
        self.clear();
        let n = self.graph.n;
        let mut bits = 0u64;
        let mut left = 0;
        for i in 0..n {
            for j in i + 1..n {
                if left == 0 {
                    bits = rng.next_u64();
                    left = 64;
                }
                if bits & 1 == 1 {
                    let (de, dt) = self.graph.toggle(i, j);
                    self.edges += de;
                    self.two_stars += dt;
                }
                bits >>= 1;
                left -= 1;
            }
        }
    }

    pub fn sweep(&mut self, rng: &mut RandomStream) {
        let n = self.graph.n;
        for i in 0..n {
            for j in i + 1..n {
                let present = self.graph.has_edge(i, j);
                let own = u32::from(present);
                let k = (self.graph.degree[i] - own + self.graph.degree[j] - own) as usize;
                let want = u64::from(rng.next_u32()) < self.thresholds[k];
                if want != present {
                    let (de, dt) = self.graph.toggle(i, j);
                    self.edges += de;
                    self.two_stars += dt;
                }
            }
        }
    }

    fn push_stats(&self, out: &mut Vec<f64>) {
        out.push(self.edges as f64);
        if self.two_star {
            out.push(self.two_stars as f64);
        }
    }

    /// Appends the statistics of `draws` approximate realizations from `f(. | theta)`.
    ///
    /// Starts from the empty graph; the first draw follows `sweeps` sweeps and
    /// each further draw `thin` more. At `theta = 0` every dyad is a fair coin
    /// and draws are exact.
    pub fn draw_stats(
        &mut self,
        theta: &[f64],
        sweeps: usize,
        draws: usize,
        thin: usize,
        rng: &mut RandomStream,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        self.set_theta(theta)?;
        if self.zero_field {
            for _ in 0..draws {
                self.randomize(rng);
                self.push_stats(out);
            }
            return Ok(());
        }
        self.clear();
        for k in 0..draws {
            let n = if k == 0 { sweeps } else { thin };
            for _ in 0..n {
                self.sweep(rng);
            }
            self.push_stats(out);
        }
        Ok(())
    }

    /// Appends `draws` further statistics from the current chain, `thin` sweeps apart,
    /// at the parameter of the last `draw_stats` call.
    pub fn extend_stats(
        &mut self,
        draws: usize,
        thin: usize,
        rng: &mut RandomStream,
        out: &mut Vec<f64>,
    ) {
        for _ in 0..draws {
            if self.zero_field {
                self.randomize(rng);
            } else {
                for _ in 0..thin {
                    self.sweep(rng);
                }
            }
            self.push_stats(out);
        }
    }
}

/// Graph after `n_sweeps` dyad sweeps from the empty graph.
pub fn graph_sample_approx(
    theta: &ParamVector,
    spec: &ModelSpec,
    n_sweeps: usize,
    rng: &mut RandomStream,
) -> Result<UndirectedGraph> {
    if n_sweeps == 0 {
        return Err(Error::InvalidConfig("n_sweeps must be at least 1".into()));
    }
    let mut sampler = ErgmSampler::for_spec(spec)?;
    sampler.set_theta(theta)?;
    for _ in 0..n_sweeps {
        sampler.sweep(rng);
    }
    Ok(sampler.graph.clone())
}

/// Dyads in lexicographic order.
fn dyads(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

/// Exact `log z(theta)` by enumerating every graph.
pub fn z_graph_brute(theta: &[f64], spec: &ModelSpec) -> Result<f64> {
    let n = ergm_nodes(spec)?;
    check_dim(spec.statistic_count(), theta.len())?;
    let pairs = dyads(n);
    if pairs.len() > MAX_ENUMERATION_DYADS {
        return Err(Error::EnumerationTooLarge {
            size: pairs.len(),
            max: MAX_ENUMERATION_DYADS,
        });
    }
    let two_star = spec.family() == ModelFamily::ErgmEdgesTwoStars;
    let mut acc = math::LogSumExp::default();
    let mut deg = alloc::vec![0u32; n];
    for mask in 0u32..(1u32 << pairs.len()) {
        deg.iter_mut().for_each(|d| *d = 0);
        for (b, &(i, j)) in pairs.iter().enumerate() {
            if mask >> b & 1 == 1 {
                deg[i] += 1;
                deg[j] += 1;
            }
        }
        let edges = f64::from(mask.count_ones());
        let mut v = theta[0] * edges;
        if two_star {
            let ts: u32 = deg.iter().map(|&d| d * d.saturating_sub(1) / 2).sum();
            v += theta[1] * f64::from(ts);
        }
        acc.add(v);
    }
    Ok(acc.value())
}

/// Exact ERGM partition function.
///
/// Closed form `C(n, 2) log(1 + e^theta)` for the edges model; for the
/// two-star model, a table of graph counts per `(edges, two_stars)` built by
/// enumeration, so only graphs with at most `MAX_ENUMERATION_DYADS` dyads.
#[derive(Clone, Debug)]
pub struct GraphPartition {
    dyads: usize,
    two_star: bool,
    /// `(edges, two_stars, log count)` for every attained statistic pair.
    table: Vec<(f64, f64, f64)>,
}

impl GraphPartition {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let n = ergm_nodes(spec)?;
        let pairs = dyads(n);
        let two_star = spec.family() == ModelFamily::ErgmEdgesTwoStars;
        let mut table = Vec::new();
        if two_star {
            if pairs.len() > MAX_ENUMERATION_DYADS {
                return Err(Error::EnumerationTooLarge {
                    size: pairs.len(),
                    max: MAX_ENUMERATION_DYADS,
                });
            }
            let mut counts: alloc::collections::BTreeMap<(u32, u32), f64> = Default::default();
            let mut deg = alloc::vec![0u32; n];
            for mask in 0u32..(1u32 << pairs.len()) {
                deg.iter_mut().for_each(|d| *d = 0);
                for (b, &(i, j)) in pairs.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        deg[i] += 1;
                        deg[j] += 1;
                    }
                }
                let ts: u32 = deg.iter().map(|&d| d * d.saturating_sub(1) / 2).sum();
                *counts.entry((mask.count_ones(), ts)).or_default() += 1.0;
            }
            table = counts
                .into_iter()
                .map(|((e, t), c)| (f64::from(e), f64::from(t), math::ln(c)))
                .collect();
        }
        Ok(Self {
            dyads: pairs.len(),
            two_star,
            table,
        })
    }
}

impl crate::model::LogPartition for GraphPartition {
    fn dim(&self) -> usize {
        if self.two_star {
            2
        } else {
            1
        }
    }

    fn log_z(&self, theta: &[f64]) -> f64 {
        if !self.two_star {
            let t = theta[0];
            // log(1 + e^t) without overflow.
            let softplus = if t > 0.0 {
                t + math::ln_1p(math::exp(-t))
            } else {
                math::ln_1p(math::exp(t))
            };
            return self.dyads as f64 * softplus;
        }
        let mut acc = math::LogSumExp::default();
        for &(e, t, lc) in &self.table {
            acc.add(lc + theta[0] * e + theta[1] * t);
        }
        acc.value()
    }
}

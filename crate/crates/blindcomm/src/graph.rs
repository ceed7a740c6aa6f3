//! Planted-partition / stochastic-block-model graphs and shift operators.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// Planted partition model: `k` equal-size groups on `n` nodes, edge
/// probability `a/n` within a group and `b/n` across groups.
#[derive(Debug, Clone, PartialEq)]
pub struct PpmParams {
    pub n: usize,
    pub k: usize,
    /// Within-group intensity; the edge probability is `a/n`.
    pub a: f64,
    /// Between-group intensity; the edge probability is `b/n`.
    pub b: f64,
}

impl PpmParams {
    pub fn new(n: usize, k: usize, a: f64, b: f64) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidParameter("n and k must be positive".into()));
        }
        if k > n {
            return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
        }
        if n % k != 0 {
            return Err(Error::InvalidParameter(format!(
                "k = {k} does not divide n = {n}; use SbmParams for uneven groups"
            )));
        }
        let params = Self { n, k, a, b };
        for (name, p) in [("a/n", params.p_in()), ("b/n", params.p_out())] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidProbability(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        Ok(params)
    }

    /// Within-group edge probability `a/n`.
    pub fn p_in(&self) -> f64 {
        self.a / self.n as f64
    }

    /// Between-group edge probability `b/n`.
    pub fn p_out(&self) -> f64 {
        self.b / self.n as f64
    }

    /// The ratio `gamma = b/a` controlling detectability.
    pub fn gamma(&self) -> f64 {
        self.b / self.a
    }

    /// The `k x k` affinity matrix `(a/n) I + (b/n) (11^T - I)`.
    pub fn affinity(&self) -> DMatrix<f64> {
        let (p_in, p_out) = (self.p_in(), self.p_out());
        DMatrix::from_fn(self.k, self.k, |i, j| if i == j { p_in } else { p_out })
    }

    /// The equivalent general SBM with equal contiguous groups.
    pub fn to_sbm(&self) -> SbmParams {
        SbmParams {
            group_sizes: vec![self.n / self.k; self.k],
            affinity: self.affinity(),
        }
    }
}

/// General stochastic block model: arbitrary group sizes and a symmetric
/// affinity matrix of edge probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmParams {
    group_sizes: Vec<usize>,
    affinity: DMatrix<f64>,
}

impl SbmParams {
    pub fn new(group_sizes: Vec<usize>, affinity: DMatrix<f64>) -> Result<Self> {
        let k = group_sizes.len();
        if k == 0 || group_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidParameter("group sizes must be positive".into()));
        }
        if affinity.nrows() != k || affinity.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "affinity is {}x{}, expected {k}x{k}",
                affinity.nrows(),
                affinity.ncols()
            )));
        }
        for i in 0..k {
            for j in 0..k {
                let p = affinity[(i, j)];
                if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                    return Err(Error::InvalidProbability(format!(
                        "affinity[{i},{j}] = {p} is not in [0, 1]"
                    )));
                }
                if (p - affinity[(j, i)]).abs() > 0.0 {
                    return Err(Error::InvalidParameter("affinity must be symmetric".into()));
                }
            }
        }
        Ok(Self { group_sizes, affinity })
    }

    /// PPM-style affinity over possibly uneven contiguous groups.
    pub fn planted(group_sizes: Vec<usize>, p_in: f64, p_out: f64) -> Result<Self> {
        let k = group_sizes.len();
        let affinity = DMatrix::from_fn(k, k, |i, j| if i == j { p_in } else { p_out });
        Self::new(group_sizes, affinity)
    }

    pub fn n(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    pub fn k(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn affinity(&self) -> &DMatrix<f64> {
        &self.affinity
    }
}

/// Node-to-group membership exposed as the indicator matrix `G` and its
/// column-orthonormalized form `G (G^T G)^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionIndicator {
    assignments: Vec<usize>,
    k: usize,
}

impl PartitionIndicator {
    /// Membership from a 0-based group id per node.
    pub fn from_assignments(assignments: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 || assignments.is_empty() {
            return Err(Error::InvalidParameter("empty partition".into()));
        }
        if let Some(&g) = assignments.iter().find(|&&g| g >= k) {
            return Err(Error::InvalidParameter(format!("group id {g} out of range 0..{k}")));
        }
        Ok(Self { assignments, k })
    }

    /// Contiguous groups: nodes `0..sizes[0]` in group 0, and so on.
    pub fn contiguous(group_sizes: &[usize]) -> Result<Self> {
        let mut assignments = Vec::with_capacity(group_sizes.iter().sum());
        for (g, &s) in group_sizes.iter().enumerate() {
            assignments.extend(std::iter::repeat(g).take(s));
        }
        Self::from_assignments(assignments, group_sizes.len())
    }

    /// Equal contiguous groups for a PPM.
    pub fn equal_blocks(n: usize, k: usize) -> Result<Self> {
        if k == 0 || n % k != 0 {
            return Err(Error::InvalidParameter(format!("k = {k} must divide n = {n}")));
        }
        Self::contiguous(&vec![n / k; k])
    }

    pub fn n(&self) -> usize {
        self.assignments.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &g in &self.assignments {
            sizes[g] += 1;
        }
        sizes
    }

    /// Node lists per group, each ascending.
    pub fn group_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.k];
        for (i, &g) in self.assignments.iter().enumerate() {
            members[g].push(i);
        }
        members
    }

    /// The binary indicator matrix `G` (n x k, one 1 per row).
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.n(), self.k);
        for (i, &gi) in self.assignments.iter().enumerate() {
            g[(i, gi)] = 1.0;
        }
        g
    }

    /// The column-orthonormal `G (G^T G)^{-1/2}`: entry `1/sqrt(s_g)` in
    /// each node's group column.
    ///
    /// Errors if some group is empty (the normalization is undefined).
    pub fn normalized(&self) -> Result<DMatrix<f64>> {
        let sizes = self.group_sizes();
        if let Some(g) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Degenerate(format!("group {g} is empty")));
        }
        let inv_sqrt: Vec<f64> = sizes.iter().map(|&s| 1.0 / (s as f64).sqrt()).collect();
        let mut gt = DMatrix::zeros(self.n(), self.k);
        for (i, &gi) in self.assignments.iter().enumerate() {
            gt[(i, gi)] = inv_sqrt[gi];
        }
        Ok(gt)
    }

    /// Relabels nodes: node `i` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n() {
            return Err(Error::DimensionMismatch("permutation length != n".into()));
        }
        let mut assignments = vec![0usize; self.n()];
        for (i, &target) in perm.iter().enumerate() {
            assignments[target] = self.assignments[i];
        }
        Self::from_assignments(assignments, self.k)
    }
}

/// An undirected simple graph (optionally with unit self-loops), stored as
/// sorted adjacency lists so shift-operator products run in O(|E|).
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    neighbors: Vec<Vec<u32>>,
    self_loops: Vec<bool>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self { n, neighbors: vec![Vec::new(); n], self_loops: vec![false; n] }
    }

    /// Builds from undirected edges; `(i, i)` marks a self-loop. Duplicate
    /// edges are deduplicated.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                g.self_loops[i] = true;
            } else {
                g.neighbors[i].push(j as u32);
                g.neighbors[j].push(i as u32);
            }
        }
        for list in &mut g.neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_self_loop(&self, i: usize) -> bool {
        self.self_loops[i]
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i]
    }

    /// Degree as the row sum of the adjacency matrix (self-loop counts 1).
    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len() + usize::from(self.self_loops[i])
    }

    /// Number of undirected edges, counting self-loops once.
    pub fn edge_count(&self) -> usize {
        let half: usize = self.neighbors.iter().map(Vec::len).sum();
        half / 2 + self.self_loops.iter().filter(|&&s| s).count()
    }

    /// Undirected edges, each listed once with `i <= j`; self-loops as `(i, i)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            if self.self_loops[i] {
                edges.push((i, i));
            }
            for &j in &self.neighbors[i] {
                if (j as usize) > i {
                    edges.push((i, j as usize));
                }
            }
        }
        edges
    }

    /// `out = A x`.
    pub fn adj_matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            let mut acc = if self.self_loops[i] { x[i] } else { 0.0 };
            for &j in &self.neighbors[i] {
                acc += x[j as usize];
            }
            out[i] = acc;
        }
    }

    /// `out = L x` with `L = diag(A 1) - A`. Self-loops cancel out of `L`.
    pub fn lap_matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for &j in &self.neighbors[i] {
                acc += x[i] - x[j as usize];
            }
            out[i] = acc;
        }
    }

    pub fn adjacency_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            if self.self_loops[i] {
                a[(i, i)] = 1.0;
            }
            for &j in &self.neighbors[i] {
                a[(i, j as usize)] = 1.0;
            }
        }
        a
    }

    pub fn laplacian_dense(&self) -> DMatrix<f64> {
        laplacian(self)
    }
}

/// The combinatorial Laplacian `L = diag(A 1) - A` as a dense matrix.
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = g.neighbors(i).len() as f64;
        for &j in g.neighbors(i) {
            l[(i, j as usize)] = -1.0;
        }
    }
    l
}

/// Visits each index in `0..count` independently with probability `p`,
/// skipping geometrically so the cost is proportional to the hits.
fn sample_bernoulli_indices<R: Rng + ?Sized>(
    count: usize,
    p: f64,
    rng: &mut R,
    mut hit: impl FnMut(usize),
) {
    if count == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for t in 0..count {
            hit(t);
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut cursor = 0usize;
    loop {
        let u: f64 = rng.random();
        if u <= 0.0 {
            return; // measure-zero draw; treat as an infinite gap
        }
        let gap = (u.ln() / log_q).floor();
        if !gap.is_finite() || gap >= (count - cursor) as f64 {
            return;
        }
        cursor += gap as usize;
        hit(cursor);
        cursor += 1;
        if cursor >= count {
            return;
        }
    }
}

/// Samples one SBM graph: each unordered pair `{i, j}` is an independent
/// Bernoulli edge with probability `affinity[g_i, g_j]`; with `self_loops`,
/// node `i` carries a loop with probability `affinity[g_i, g_i]`.
pub fn sample_graph<R: Rng + ?Sized>(
    params: &SbmParams,
    labels: &PartitionIndicator,
    self_loops: bool,
    rng: &mut R,
) -> Result<Graph> {
    if labels.n() != params.n() || labels.k() != params.k() {
        return Err(Error::DimensionMismatch(format!(
            "labels ({} nodes, {} groups) inconsistent with model ({} nodes, {} groups)",
            labels.n(),
            labels.k(),
            params.n(),
            params.k()
        )));
    }
    let observed = labels.group_sizes();
    if observed != params.group_sizes() {
        return Err(Error::InvalidParameter(
            "label group sizes disagree with the model's group sizes".into(),
        ));
    }

    let n = params.n();
    let members = labels.group_members();
    let mut g = Graph::empty(n);

    for ga in 0..params.k() {
        let na = &members[ga];
        // Within-group pairs: one skip-sampled row per node over the
        // members after it in the list.
        let p = params.affinity()[(ga, ga)];
        let s = na.len();
        for row in 0..s.saturating_sub(1) {
            let i = na[row];
            let rest = &na[row + 1..];
            sample_bernoulli_indices(rest.len(), p, rng, |t| {
                let j = rest[t];
                g.neighbors[i].push(j as u32);
                g.neighbors[j].push(i as u32);
            });
        }
        if self_loops {
            sample_bernoulli_indices(s, p, rng, |t| {
                g.self_loops[na[t]] = true;
            });
        }
        // Cross-group rectangles.
        for gb in (ga + 1)..params.k() {
            let nb = &members[gb];
            let p = params.affinity()[(ga, gb)];
            let (sa, sb) = (na.len(), nb.len());
            sample_bernoulli_indices(sa * sb, p, rng, |t| {
                let (i, j) = (na[t / sb], nb[t % sb]);
                g.neighbors[i].push(j as u32);
                g.neighbors[j].push(i as u32);
            });
        }
    }

    for list in &mut g.neighbors {
        list.sort_unstable();
    }
    Ok(g)
}

/// Convenience wrapper for PPM parameters with equal contiguous blocks.
pub fn sample_ppm_graph<R: Rng + ?Sized>(
    params: &PpmParams,
    labels: &PartitionIndicator,
    self_loops: bool,
    rng: &mut R,
) -> Result<Graph> {
    sample_graph(&params.to_sbm(), labels, self_loops, rng)
}

/// How the latent graph evolves across observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphProcess {
    /// A fresh SBM draw for every observation.
    Independent,
    /// Keep the current graph with probability `1 - redraw`, else redraw.
    Bernoulli { redraw: f64 },
}

/// Streams the graph underlying each successive observation without
/// materializing the whole sequence.
pub struct GraphSequence<'a, R: Rng> {
    params: &'a SbmParams,
    labels: &'a PartitionIndicator,
    self_loops: bool,
    process: GraphProcess,
    rng: R,
    current: Option<Graph>,
}

impl<'a, R: Rng> GraphSequence<'a, R> {
    pub fn new(
        params: &'a SbmParams,
        labels: &'a PartitionIndicator,
        self_loops: bool,
        process: GraphProcess,
        rng: R,
    ) -> Result<Self> {
        if let GraphProcess::Bernoulli { redraw } = process {
            if !(0.0..=1.0).contains(&redraw) {
                return Err(Error::InvalidProbability(format!(
                    "redraw probability {redraw} is not in [0, 1]"
                )));
            }
        }
        Ok(Self { params, labels, self_loops, process, rng, current: None })
    }

    /// The graph carrying the next observation.
    pub fn advance(&mut self) -> Result<&Graph> {
        let fresh = match (&self.current, self.process) {
            (None, _) => true,
            (Some(_), GraphProcess::Independent) => true,
            (Some(_), GraphProcess::Bernoulli { redraw }) => self.rng.random::<f64>() < redraw,
        };
        if fresh {
            self.current = Some(sample_graph(self.params, self.labels, self.self_loops, &mut self.rng)?);
        }
        Ok(self.current.as_ref().expect("graph just ensured"))
    }
}

/// The Bernoulli graph process of length `m`: the first graph is a fresh
/// draw; each later step keeps the previous graph with probability `1 - p`
/// and redraws with probability `p`.
pub fn bernoulli_graph_sequence<R: Rng>(
    params: &PpmParams,
    labels: &PartitionIndicator,
    m: usize,
    p: f64,
    self_loops: bool,
    rng: R,
) -> Result<Vec<Graph>> {
    if m == 0 {
        return Err(Error::InvalidParameter("sequence length must be >= 1".into()));
    }
    let sbm = params.to_sbm();
    let mut seq = GraphSequence::new(&sbm, labels, self_loops, GraphProcess::Bernoulli { redraw: p }, rng)?;
    let mut graphs = Vec::with_capacity(m);
    for _ in 0..m {
        graphs.push(seq.advance()?.clone());
    }
    Ok(graphs)
}

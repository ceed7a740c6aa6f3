//! Partition recovery: k-means over the rows of the top-k covariance
//! eigenvectors, the projection cost functional, and the misclustering
//! bound it satisfies.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PartitionIndicator;
use crate::rng::Stream;
use crate::spectral::{top_k_eigenvectors, SpectralSummary};
use crate::theory::{analytic_spectrum, FilterConstants};

/// A node-to-group assignment with 0-based group ids, meaningful only up to
/// a permutation of the groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    assignments: Vec<usize>,
    k: usize,
}

impl Labeling {
    pub fn new(assignments: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 || assignments.is_empty() {
            return Err(Error::InvalidParameter("empty labeling".into()));
        }
        if let Some(&g) = assignments.iter().find(|&&g| g >= k) {
            return Err(Error::InvalidParameter(format!("group id {g} out of range 0..{k}")));
        }
        Ok(Self { assignments, k })
    }

    pub fn from_indicator(labels: &PartitionIndicator) -> Self {
        Self { assignments: labels.assignments().to_vec(), k: labels.k() }
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

    pub fn indicator(&self) -> Result<PartitionIndicator> {
        PartitionIndicator::from_assignments(self.assignments.clone(), self.k)
    }

    /// Applies a group permutation: group `g` becomes `sigma[g]`.
    pub fn relabeled(&self, sigma: &[usize]) -> Result<Self> {
        if sigma.len() != self.k {
            return Err(Error::DimensionMismatch("permutation length != k".into()));
        }
        let assignments = self.assignments.iter().map(|&g| sigma[g]).collect();
        Self::new(assignments, self.k)
    }

    /// Relabels nodes: node `i` becomes node `perm[i]`.
    pub fn permuted_nodes(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n() {
            return Err(Error::DimensionMismatch("permutation length != n".into()));
        }
        let mut assignments = vec![0usize; self.n()];
        for (i, &target) in perm.iter().enumerate() {
            assignments[target] = self.assignments[i];
        }
        Self::new(assignments, self.k)
    }
}

/// k-means controls. The underlying algorithm is unspecified upstream, so
/// every choice lives here and is echoed into experiment metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the largest center movement per iteration.
    pub tolerance: f64,
    /// Normalize embedding rows to unit length before clustering. Off by
    /// default: exact embeddings already have equal-norm rows.
    pub row_normalize: bool,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { restarts: 20, max_iterations: 300, tolerance: 1e-9, row_normalize: false }
    }
}

struct KMeansOutcome {
    assignments: Vec<usize>,
    wcss: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One k-means run: distance-weighted seeding, Lloyd iterations with
/// lowest-index tie-breaking, empty clusters re-seeded at the farthest
/// point. Returns None if some cluster is still empty at convergence.
fn kmeans_single(points: &[Vec<f64>], k: usize, cfg: &KMeansConfig, rng: &mut Stream) -> Option<KMeansOutcome> {
    let n = points.len();
    let d = points[0].len();

    // Distance-weighted probabilistic seeding.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)].clone());
    let mut dist2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist2.iter().sum();
        let chosen = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in dist2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[chosen].clone());
        for (i, p) in points.iter().enumerate() {
            dist2[i] = dist2[i].min(squared_distance(p, centers.last().unwrap()));
        }
    }

    let mut assignments = vec![0usize; n];
    let assign = |centers: &[Vec<f64>], assignments: &mut [usize]| {
        for (i, p) in points.iter().enumerate() {
            let mut best = (0usize, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let dist = squared_distance(p, center);
                if dist < best.1 {
                    best = (c, dist);
                }
            }
            assignments[i] = best.0;
        }
    };

    for _ in 0..cfg.max_iterations {
        assign(&centers, &mut assignments);

        // Re-seed empty clusters at the point farthest from its center.
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        let mut reseeded = false;
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let farthest = (0..n)
                .max_by(|&i, &j| {
                    let di = squared_distance(&points[i], &centers[assignments[i]]);
                    let dj = squared_distance(&points[j], &centers[assignments[j]]);
                    di.partial_cmp(&dj).expect("finite")
                })
                .expect("nonempty points");
            centers[c] = points[farthest].clone();
            counts[assignments[farthest]] -= 1;
            assignments[farthest] = c;
            counts[c] = 1;
            reseeded = true;
        }
        if reseeded {
            assign(&centers, &mut assignments);
            counts = vec![0usize; k];
            for &a in &assignments {
                counts[a] += 1;
            }
            if counts.iter().any(|&c| c == 0) {
                return None; // not enough distinct points
            }
        }

        // Update step.
        let mut sums = vec![vec![0.0; d]; k];
        let mut sizes = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            sizes[a] += 1;
            for (s, &x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut movement = 0.0f64;
        for c in 0..k {
            if sizes[c] == 0 {
                continue;
            }
            for s in &mut sums[c] {
                *s /= sizes[c] as f64;
            }
            movement = movement.max(squared_distance(&sums[c], &centers[c]).sqrt());
            centers[c] = std::mem::take(&mut sums[c]);
        }
        if movement <= cfg.tolerance && !reseeded {
            break;
        }
    }

    assign(&centers, &mut assignments);
    let mut counts = vec![0usize; k];
    let mut wcss = 0.0;
    for (p, &a) in points.iter().zip(&assignments) {
        counts[a] += 1;
        wcss += squared_distance(p, &centers[a]);
    }
    if counts.iter().any(|&c| c == 0) {
        return None;
    }
    Some(KMeansOutcome { assignments, wcss })
}

/// Best-of-restarts k-means over arbitrary points. Restarts run on
/// independent derived streams and the winner is the lowest
/// (within-cluster sum of squares, restart index), so the result does not
/// depend on scheduling.
pub fn kmeans(points: &[Vec<f64>], k: usize, cfg: &KMeansConfig, rng: &mut impl Rng) -> Result<Labeling> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("no points to cluster".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if points.len() < k {
        return Err(Error::Degenerate(format!(
            "cannot form {k} nonempty clusters from {} points",
            points.len()
        )));
    }
    if cfg.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be >= 1".into()));
    }

    let seeds: Vec<u64> = (0..cfg.restarts).map(|_| rng.random()).collect();
    let best = seeds
        .into_par_iter()
        .enumerate()
        .filter_map(|(idx, seed)| {
            let mut local = Stream::seed_from_u64(seed);
            kmeans_single(points, k, cfg, &mut local).map(|out| (idx, out))
        })
        .min_by(|(ia, a), (ib, b)| {
            a.wcss.partial_cmp(&b.wcss).expect("finite").then(ia.cmp(ib))
        });

    match best {
        Some((_, outcome)) => Labeling::new(outcome.assignments, k),
        None => Err(Error::Degenerate(
            "k-means produced an empty cluster in every restart (degenerate embedding)".into(),
        )),
    }
}

/// Algorithm-2 partition recovery: cluster the rows of the top-k
/// eigenvector matrix of the sample covariance.
pub fn recover_partition(
    s: &SpectralSummary,
    k: usize,
    cfg: &KMeansConfig,
    rng: &mut impl Rng,
) -> Result<Labeling> {
    let vk = top_k_eigenvectors(s, k)?;
    let mut points: Vec<Vec<f64>> = (0..vk.nrows()).map(|i| vk.row(i).iter().copied().collect()).collect();
    if cfg.row_normalize {
        for row in &mut points {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in row {
                    *x /= norm;
                }
            }
        }
    }
    kmeans(&points, k, cfg, rng)
}

/// The projection cost `F(g, V_k) = ||(I - Gt Gt^T) V_k||_F^2` of a
/// candidate labeling against an embedding.
pub fn kmeans_cost(g: &Labeling, vk: &DMatrix<f64>) -> Result<f64> {
    if vk.nrows() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "embedding has {} rows, labeling has {} nodes",
            vk.nrows(),
            g.n()
        )));
    }
    let gt = g.indicator()?.normalized()?;
    let projected = &gt * (gt.transpose() * vk);
    let mut cost = 0.0;
    for i in 0..vk.nrows() {
        for j in 0..vk.ncols() {
            let r = vk[(i, j)] - projected[(i, j)];
            cost += r * r;
        }
    }
    Ok(cost)
}

/// The misclustering bound `(4k / nu^2) ||C_y - Chat||_2^2` with
/// `nu = lambda_(2) - lambda_(3) - ||C_y - Chat||_2`, valid for an optimal
/// k-means solution when `nu > 0`.
pub fn misclustering_bound(c: &FilterConstants, spec_norm_error: f64) -> Result<f64> {
    if spec_norm_error < 0.0 || !spec_norm_error.is_finite() {
        return Err(Error::InvalidParameter("spectral-norm error must be >= 0".into()));
    }
    let spectrum = analytic_spectrum(c);
    let nu = spectrum.lambda2 - spectrum.lambda3 - spec_norm_error;
    if nu <= 0.0 {
        return Err(Error::AssumptionViolated(format!(
            "eigengap violated: lambda2 - lambda3 = {}, error = {spec_norm_error}",
            spectrum.lambda2 - spectrum.lambda3
        )));
    }
    Ok(4.0 * c.k as f64 / (nu * nu) * spec_norm_error * spec_norm_error)
}

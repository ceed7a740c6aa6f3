//! Closed-form ground truth for filtered PPM signals: second-order moment
//! parameters, the derived covariance constants, the analytic covariance and
//! its spectrum, sample-size diagnostics, and the identities the test suite
//! uses as oracles.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::filter::{apply_filter, FilterSpec};
use crate::graph::{sample_graph, PartitionIndicator, PpmParams, SbmParams};

/// The nine second-order filter moments, indexed by the relative group
/// membership of the three nodes involved.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentParams {
    /// E[H_ii^2]
    pub p1: f64,
    /// E[H_ij^2], i ~ j
    pub p2: f64,
    /// E[H_ij^2], i !~ j
    pub p3: f64,
    /// E[H_ii H_ji], i ~ j
    pub p4: f64,
    /// E[H_ii H_ji], i !~ j
    pub p5: f64,
    /// E[H_il H_jl], i ~ j ~ l
    pub p6: f64,
    /// E[H_il H_jl], i ~ j !~ l
    pub p7: f64,
    /// E[H_il H_jl], i ~ l !~ j
    pub p8: f64,
    /// E[H_il H_jl], all three groups distinct
    pub p9: f64,
}

impl MomentParams {
    pub fn as_array(&self) -> [f64; 9] {
        [self.p1, self.p2, self.p3, self.p4, self.p5, self.p6, self.p7, self.p8, self.p9]
    }

    pub fn from_array(p: [f64; 9]) -> Self {
        Self { p1: p[0], p2: p[1], p3: p[2], p4: p[3], p5: p[4], p6: p[5], p7: p[6], p8: p[7], p9: p[8] }
    }
}

/// The three covariance constants: diagonal entries of `C_y` equal `c3`,
/// within-block off-diagonals `c1`, cross-block entries `c2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub n: usize,
    pub k: usize,
}

impl FilterConstants {
    pub fn new(c1: f64, c2: f64, c3: f64, n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::InvalidParameter(format!("bad dimensions n = {n}, k = {k}")));
        }
        if ![c1, c2, c3].iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter("constants must be finite".into()));
        }
        Ok(Self { c1, c2, c3, n, k })
    }

    /// The spectral-gap condition `c3 > c1 > c2 >= 0`.
    pub fn assumption_holds(&self) -> bool {
        self.c3 > self.c1 && self.c1 > self.c2 && self.c2 >= 0.0
    }

    /// `rho = (1/k) (c1 - c2)/(c3 - c1)`, the relative eigenvalue gap.
    pub fn rho(&self) -> f64 {
        (self.c1 - self.c2) / (self.c3 - self.c1) / self.k as f64
    }

    fn block_size(&self) -> f64 {
        self.n as f64 / self.k as f64
    }
}

/// Evaluates the three constants from the nine moments:
/// `c1 = 2 p4 + (n/k - 2) p6 + (n/k)(k-1) p7`,
/// `c2 = 2 p5 + 2 (n/k - 1) p8 + (n/k)(k-2) p9`,
/// `c3 = p1 + (n/k - 1) p2 + (n/k)(k-1) p3`.
pub fn constants_from_moments(p: &MomentParams, n: usize, k: usize) -> Result<FilterConstants> {
    if k == 0 || n == 0 || n % k != 0 {
        return Err(Error::InvalidParameter(format!("k = {k} must divide n = {n}")));
    }
    let s = n as f64 / k as f64;
    let kf = k as f64;
    let c1 = 2.0 * p.p4 + (s - 2.0) * p.p6 + s * (kf - 1.0) * p.p7;
    let c2 = 2.0 * p.p5 + 2.0 * (s - 1.0) * p.p8 + s * (kf - 2.0) * p.p9;
    let c3 = p.p1 + (s - 1.0) * p.p2 + s * (kf - 1.0) * p.p3;
    FilterConstants::new(c1, c2, c3, n, k)
}

/// Moments for the one-hop adjacency filter `H = A` with self-loops, as
/// functions of the raw edge probabilities `p_in`, `p_out`: distinct matrix
/// entries are independent Bernoulli variables, so every product moment
/// factorizes.
pub fn adjacency_moments(p_in: f64, p_out: f64) -> Result<MomentParams> {
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(format!("{name} = {p} is not in [0, 1]")));
        }
    }
    Ok(MomentParams {
        p1: p_in,
        p2: p_in,
        p3: p_out,
        p4: p_in * p_in,
        p5: p_in * p_out,
        p6: p_in * p_in,
        p7: p_out * p_out,
        p8: p_in * p_out,
        p9: p_out * p_out,
    })
}

/// Example-1 closed forms for the adjacency filter, used by tests as an
/// independent route to the constants.
pub fn adjacency_constants(p_in: f64, p_out: f64, n: usize, k: usize) -> Result<FilterConstants> {
    if k == 0 || n % k != 0 {
        return Err(Error::InvalidParameter(format!("k = {k} must divide n = {n}")));
    }
    let s = n as f64 / k as f64;
    let kf = k as f64;
    FilterConstants::new(
        s * (p_in * p_in + (kf - 1.0) * p_out * p_out),
        s * (2.0 * p_in * p_out + (kf - 2.0) * p_out * p_out),
        s * (p_in + (kf - 1.0) * p_out),
        n,
        k,
    )
}

/// Monte Carlo estimate of the nine moments with per-moment standard errors.
#[derive(Debug, Clone)]
pub struct MomentEstimate {
    /// Class means; unrealizable classes are reported as 0.
    pub mean: MomentParams,
    /// Standard error of each class mean over graph draws.
    pub std_err: [f64; 9],
    /// Whether the model realizes each membership class (p6 needs blocks of
    /// size >= 3, p9 needs k >= 3, ...).
    pub realizable: [bool; 9],
}

/// Brute-force oracle for the moments: draws graphs, materializes the dense
/// filter matrix, and averages `H_il H_jl` over every valid index tuple of
/// each membership class. Intended for small `n`.
pub fn monte_carlo_moments<R: Rng + ?Sized>(
    filter: &FilterSpec,
    params: &PpmParams,
    self_loops: bool,
    trials: usize,
    rng: &mut R,
) -> Result<MomentEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let (n, k) = (params.n, params.k);
    let s = n / k;
    let labels = PartitionIndicator::equal_blocks(n, k)?;
    let sbm = params.to_sbm();
    let group = labels.assignments();

    let realizable = [
        true,
        s >= 2,
        k >= 2,
        s >= 2,
        k >= 2,
        s >= 3,
        k >= 2 && s >= 2,
        k >= 2 && s >= 2,
        k >= 3,
    ];

    let mut basis = vec![0.0; n];
    let mut h = DMatrix::<f64>::zeros(n, n);
    let mut sums = [0.0f64; 9];
    let mut sq_sums = [0.0f64; 9];

    for _ in 0..trials {
        let g = sample_graph(&sbm, &labels, self_loops, rng)?;
        for col in 0..n {
            basis[col] = 1.0;
            let hcol = apply_filter(filter, &g, &basis)?;
            basis[col] = 0.0;
            for row in 0..n {
                h[(row, col)] = hcol[row];
            }
        }

        let mut acc = [0.0f64; 9];
        let mut cnt = [0usize; 9];
        for i in 0..n {
            acc[0] += h[(i, i)] * h[(i, i)];
            cnt[0] += 1;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let same_ij = group[i] == group[j];
                let class_sq = if same_ij { 1 } else { 2 }; // p2 / p3
                acc[class_sq] += h[(i, j)] * h[(i, j)];
                cnt[class_sq] += 1;
                let class_cross = if same_ij { 3 } else { 4 }; // p4 / p5
                acc[class_cross] += h[(i, i)] * h[(j, i)];
                cnt[class_cross] += 1;
                for l in 0..n {
                    if l == i || l == j {
                        continue;
                    }
                    let term = h[(i, l)] * h[(j, l)];
                    let same_il = group[i] == group[l];
                    let same_jl = group[j] == group[l];
                    let class = match (same_ij, same_il, same_jl) {
                        (true, true, true) => 5,    // p6
                        (true, false, false) => 6,  // p7
                        (false, true, false) => 7,  // p8: i ~ l, j elsewhere
                        (false, false, true) => continue, // p8 by symmetry; counted via (j, i, l)
                        (false, false, false) => 8, // p9
                        _ => unreachable!("group relations are an equivalence"),
                    };
                    acc[class] += term;
                    cnt[class] += 1;
                }
            }
        }
        for c in 0..9 {
            if cnt[c] > 0 {
                let mean = acc[c] / cnt[c] as f64;
                sums[c] += mean;
                sq_sums[c] += mean * mean;
            }
        }
    }

    let t = trials as f64;
    let mut mean = [0.0f64; 9];
    let mut std_err = [0.0f64; 9];
    for c in 0..9 {
        if realizable[c] {
            mean[c] = sums[c] / t;
            let var = (sq_sums[c] / t - mean[c] * mean[c]).max(0.0);
            std_err[c] = (var / t).sqrt();
        }
    }
    Ok(MomentEstimate { mean: MomentParams::from_array(mean), std_err, realizable })
}

/// Monte Carlo estimate of the covariance constants for an arbitrary filter
/// and block model, usable at any `n`.
///
/// For white excitation with per-coordinate variance `sigma2`, the signal
/// covariance is `sigma2 * E[H^2]`, and `E[H^2]` has one expected value per
/// entry class. Per draw this computes the exact class sums of `H^2` from
/// `n + k + 1` filter applications: `tr(H^2) = sum_i ||H e_i||^2`,
/// `1_g^T H^2 1_g = ||H 1_g||^2`, and `1^T H^2 1 = ||H 1||^2`.
pub fn estimate_constants<R: Rng + ?Sized>(
    filter: &FilterSpec,
    params: &SbmParams,
    labels: &PartitionIndicator,
    self_loops: bool,
    sigma2: f64,
    trials: usize,
    rng: &mut R,
) -> Result<FilterConstants> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let (n, k) = (params.n(), params.k());
    let sizes = labels.group_sizes();
    let within_pairs: f64 = sizes.iter().map(|&s| (s * s.saturating_sub(1)) as f64).sum();
    let sq_sizes: f64 = sizes.iter().map(|&s| (s * s) as f64).sum();
    let cross_pairs = (n * n) as f64 - sq_sizes;
    if within_pairs == 0.0 {
        return Err(Error::Degenerate("no within-group pairs; blocks of size 1".into()));
    }

    let members = labels.group_members();
    let (mut diag_acc, mut within_acc, mut cross_acc) = (0.0f64, 0.0f64, 0.0f64);
    let mut basis = vec![0.0f64; n];

    for _ in 0..trials {
        let g = sample_graph(params, labels, self_loops, rng)?;
        let mut trace = 0.0;
        for i in 0..n {
            basis[i] = 1.0;
            let col = apply_filter(filter, &g, &basis)?;
            basis[i] = 0.0;
            trace += col.iter().map(|x| x * x).sum::<f64>();
        }
        let mut group_sq = 0.0;
        for nodes in &members {
            let mut u = vec![0.0f64; n];
            for &i in nodes {
                u[i] = 1.0;
            }
            let hu = apply_filter(filter, &g, &u)?;
            group_sq += hu.iter().map(|x| x * x).sum::<f64>();
        }
        let h1 = apply_filter(filter, &g, &vec![1.0; n])?;
        let all_sq: f64 = h1.iter().map(|x| x * x).sum();

        diag_acc += trace;
        within_acc += group_sq - trace;
        cross_acc += all_sq - group_sq;
    }

    let t = trials as f64;
    let c3 = sigma2 * diag_acc / (t * n as f64);
    let c1 = sigma2 * within_acc / (t * within_pairs);
    let c2 = if cross_pairs > 0.0 { sigma2 * cross_acc / (t * cross_pairs) } else { 0.0 };
    FilterConstants::new(c1, c2, c3, n, k)
}

/// The analytic covariance: diagonal `c3`, within-block `c1`, cross-block
/// `c2` — equivalently `(c3 - c1) I + G ((c1 - c2) I_k + c2 11^T) G^T`.
pub fn analytic_covariance(c: &FilterConstants, labels: &PartitionIndicator) -> Result<DMatrix<f64>> {
    if labels.n() != c.n || labels.k() != c.k {
        return Err(Error::DimensionMismatch(format!(
            "labels are ({}, {}), constants expect ({}, {})",
            labels.n(),
            labels.k(),
            c.n,
            c.k
        )));
    }
    let group = labels.assignments();
    Ok(DMatrix::from_fn(c.n, c.n, |i, j| {
        if i == j {
            c.c3
        } else if group[i] == group[j] {
            c.c1
        } else {
            c.c2
        }
    }))
}

/// The three distinct eigenvalues of the analytic covariance and their
/// multiplicities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSpectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// Multiplicities `(1, k - 1, n - k)`.
    pub multiplicity: (usize, usize, usize),
    pub assumption_holds: bool,
}

impl AnalyticSpectrum {
    /// The full descending eigenvalue list of length `n`.
    pub fn eigenvalues_desc(&self) -> Vec<f64> {
        let (m1, m2, m3) = self.multiplicity;
        let mut all = Vec::with_capacity(m1 + m2 + m3);
        all.extend(std::iter::repeat(self.lambda1).take(m1));
        all.extend(std::iter::repeat(self.lambda2).take(m2));
        all.extend(std::iter::repeat(self.lambda3).take(m3));
        if !self.assumption_holds {
            all.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        }
        all
    }
}

/// The spectrum of the analytic covariance:
/// `lambda1 = c3 - c1 + (n/k)(c1 - c2) + n c2` (multiplicity 1),
/// `lambda2 = c3 - c1 + (n/k)(c1 - c2)` (multiplicity k - 1),
/// `lambda3 = c3 - c1` (multiplicity n - k).
///
/// If the gap condition fails the values are still returned with
/// `assumption_holds = false`; the labels (1)-(3) then no longer order them.
pub fn analytic_spectrum(c: &FilterConstants) -> AnalyticSpectrum {
    let s = c.block_size();
    let lambda3 = c.c3 - c.c1;
    let lambda2 = lambda3 + s * (c.c1 - c.c2);
    let lambda1 = lambda2 + c.n as f64 * c.c2;
    AnalyticSpectrum {
        lambda1,
        lambda2,
        lambda3,
        multiplicity: (1, c.k - 1, c.n - c.k),
        assumption_holds: c.assumption_holds(),
    }
}

/// The reciprocal squared gaps `(1/(c3 - c1)^2, 1/(c1 - c2)^2)` — relative
/// sample-size difficulty scores for order selection and partition
/// recovery. The hidden constants are unknown, so these are diagnostics,
/// never thresholds.
pub fn sample_bounds(c: &FilterConstants) -> Result<(f64, f64)> {
    let order_gap = c.c3 - c.c1;
    let partition_gap = c.c1 - c.c2;
    if order_gap <= 0.0 || partition_gap <= 0.0 {
        return Err(Error::AssumptionViolated(format!(
            "gaps must be positive: c3 - c1 = {order_gap}, c1 - c2 = {partition_gap}"
        )));
    }
    Ok((1.0 / (order_gap * order_gap), 1.0 / (partition_gap * partition_gap)))
}

/// The MDL criterion evaluated on the exact spectrum: for `p >= k` the
/// tail is flat and only the penalty `p (2n - p) ln(m) / (2m)` remains;
/// for `p < k` the tail mixes `lambda2` and `lambda3` and picks up the
/// nonnegative log-ratio of its arithmetic to geometric mean.
pub fn mdl_of_true_spectrum(c: &FilterConstants, p: usize, m: usize) -> Result<f64> {
    let (n, k) = (c.n, c.k);
    if p == 0 || p > n {
        return Err(Error::InvalidParameter(format!("p = {p} out of range 1..={n}")));
    }
    if m < 2 {
        return Err(Error::InvalidParameter("m must be >= 2".into()));
    }
    let mf = m as f64;
    let penalty = 0.5 * p as f64 * (2 * n - p) as f64 * mf.ln() / mf;
    if p >= k {
        return Ok(penalty);
    }
    let spectrum = analytic_spectrum(c);
    let (l2, l3) = (spectrum.lambda2, spectrum.lambda3);
    if l2 <= 0.0 || l3 <= 0.0 {
        return Err(Error::AssumptionViolated("tail eigenvalues must be positive".into()));
    }
    let tail = (n - p) as f64;
    let w2 = (k - p) as f64;
    let w3 = (n - k) as f64;
    let log_geo = (w2 * l2.ln() + w3 * l3.ln()) / tail;
    let log_arith = ((w2 * l2 + w3 * l3) / tail).ln();
    Ok(penalty + tail * (log_arith - log_geo))
}

/// Whether `gamma^x < 1 + x (gamma - 1)` — the truncated Taylor expansion
/// argument behind the MDL gap. Strict for `x > 0`; equality at `x = 0`.
pub fn gamma_power_inequality_check(gamma: f64, x: f64) -> Result<bool> {
    if !(gamma > 1.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must exceed 1")));
    }
    if !(0.0..1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("x = {x} must lie in [0, 1)")));
    }
    Ok(gamma.powf(x) < 1.0 + x * (gamma - 1.0))
}

/// The k-means cost of any labeling with at least one error against the
/// exact embedding: lower bound `2 / (n/k + 1)` for equal-size blocks.
pub fn kmeans_cost_lower_bound(n: usize, k: usize) -> Result<f64> {
    if k == 0 || n % k != 0 {
        return Err(Error::InvalidParameter(format!("k = {k} must divide n = {n}")));
    }
    if n / k < 2 {
        return Err(Error::InvalidParameter("blocks must have at least 2 nodes".into()));
    }
    Ok(2.0 / (n as f64 / k as f64 + 1.0))
}

/// The exact cost of mislabeling a single node from a true block of size
/// `s2` into a block of true size `s1`: `(s1 + s2) / ((s1 + 1) s2)`.
pub fn single_mislabel_cost(s1: usize, s2: usize) -> f64 {
    (s1 + s2) as f64 / ((s1 + 1) as f64 * s2 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::ShiftKind;
    use crate::rng::{stream, TAG_GRAPH};
    use crate::spectral::eigendecompose;

    fn example_constants() -> FilterConstants {
        FilterConstants::new(13.0, 5.0, 30.0, 100, 2).unwrap()
    }

    #[test]
    fn constants_match_example_values() {
        // p_in = 0.5, p_out = 0.1, n = 100, k = 2 gives (13, 5, 30).
        let p = adjacency_moments(0.5, 0.1).unwrap();
        assert_eq!(p.p1, 0.5);
        assert_eq!(p.p4, 0.25);
        assert_eq!(p.p5, 0.05);
        assert_eq!(p.p9, 0.010000000000000002);
        let c = constants_from_moments(&p, 100, 2).unwrap();
        assert!((c.c1 - 13.0).abs() < 1e-12);
        assert!((c.c2 - 5.0).abs() < 1e-12);
        assert!((c.c3 - 30.0).abs() < 1e-12);
        assert!(c.assumption_holds());
    }

    #[test]
    fn zero_moments_give_zero_constants() {
        let c = constants_from_moments(&MomentParams::default(), 40, 4).unwrap();
        assert_eq!((c.c1, c.c2, c.c3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn equal_probabilities_break_the_assumption() {
        let p = adjacency_moments(0.3, 0.3).unwrap();
        let c = constants_from_moments(&p, 60, 3).unwrap();
        assert!((c.c1 - c.c2).abs() < 1e-12);
        assert!(!c.assumption_holds());
        assert_eq!(p.p4, p.p5);
        assert_eq!(p.p6, p.p7);
        assert_eq!(p.p8, p.p9);
    }

    #[test]
    fn adjacency_moment_boundaries() {
        let zero = adjacency_moments(0.0, 0.0).unwrap();
        assert!(zero.as_array().iter().all(|&x| x == 0.0));
        assert!(adjacency_moments(1.2, 0.0).is_err());
        assert!(adjacency_moments(0.5, -0.1).is_err());
    }

    #[test]
    fn closed_forms_match_moment_route() {
        // Example-1 printed closed forms against constants_from_moments o
        // adjacency_moments, over random parameter tuples.
        let mut rng = stream(3, &[50]);
        for _ in 0..50 {
            let k = 1 + rng.random_range(0..6);
            let s = 2 + rng.random_range(0..40);
            let n = k * s;
            let p_in: f64 = rng.random();
            let p_out: f64 = rng.random();
            let via_moments =
                constants_from_moments(&adjacency_moments(p_in, p_out).unwrap(), n, k).unwrap();
            let direct = adjacency_constants(p_in, p_out, n, k).unwrap();
            for (a, b) in [
                (via_moments.c1, direct.c1),
                (via_moments.c2, direct.c2),
                (via_moments.c3, direct.c3),
            ] {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn assumption_iff_distinct_probabilities_on_grid() {
        let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        for &p_in in &grid {
            for &p_out in &grid {
                let c = adjacency_constants(p_in, p_out, 60, 3).unwrap();
                assert_eq!(c.assumption_holds(), p_in != p_out, "p_in={p_in} p_out={p_out}");
            }
        }
        // Extreme probabilities close the c3 - c1 gap even when a != b.
        let c = adjacency_constants(1.0, 0.0, 60, 3).unwrap();
        assert_eq!(c.c3, c.c1);
        assert!(!c.assumption_holds());
    }

    #[test]
    fn analytic_covariance_blocks() {
        let c = FilterConstants::new(13.0, 5.0, 30.0, 4, 2).unwrap();
        let labels = PartitionIndicator::equal_blocks(4, 2).unwrap();
        let cov = analytic_covariance(&c, &labels).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                30.0, 13.0, 5.0, 5.0, //
                13.0, 30.0, 5.0, 5.0, //
                5.0, 5.0, 30.0, 13.0, //
                5.0, 5.0, 13.0, 30.0,
            ],
        );
        assert_eq!(cov, expected);

        // c1 = c2 = c3 = 1 degenerates to the all-ones matrix.
        let flat = FilterConstants::new(1.0, 1.0, 1.0, 6, 2).unwrap();
        let labels = PartitionIndicator::equal_blocks(6, 2).unwrap();
        let cov = analytic_covariance(&flat, &labels).unwrap();
        assert!(cov.iter().all(|&x| x == 1.0));

        // k = 1: (c3 - c1) I + c1 11^T; c2 never appears.
        let single = FilterConstants::new(2.0, f64::NAN, 5.0, 3, 1);
        assert!(single.is_err()); // NaN rejected
        let single = FilterConstants::new(2.0, 0.0, 5.0, 3, 1).unwrap();
        let labels = PartitionIndicator::equal_blocks(3, 1).unwrap();
        let cov = analytic_covariance(&single, &labels).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(cov[(i, j)], if i == j { 5.0 } else { 2.0 });
            }
        }
    }

    #[test]
    fn spectrum_matches_example() {
        let spec = analytic_spectrum(&example_constants());
        assert_eq!(spec.lambda1, 917.0);
        assert_eq!(spec.lambda2, 417.0);
        assert_eq!(spec.lambda3, 17.0);
        assert_eq!(spec.multiplicity, (1, 1, 98));
        assert!(spec.assumption_holds);

        // c2 = 0 merges the top two eigenvalues.
        let c = FilterConstants::new(13.0, 0.0, 30.0, 100, 2).unwrap();
        let spec = analytic_spectrum(&c);
        assert_eq!(spec.lambda1, spec.lambda2);
    }

    #[test]
    fn spectrum_agrees_with_numeric_eigensolver() {
        let c = example_constants();
        let labels = PartitionIndicator::equal_blocks(100, 2).unwrap();
        let cov = analytic_covariance(&c, &labels).unwrap();
        let numeric = eigendecompose(&cov).unwrap();
        let analytic = analytic_spectrum(&c).eigenvalues_desc();
        for (a, b) in numeric.eigenvalues.iter().zip(&analytic) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn sample_bound_values() {
        let (m_order, m_partition) = sample_bounds(&example_constants()).unwrap();
        assert!((m_order - 1.0 / 289.0).abs() < 1e-15);
        assert!((m_partition - 1.0 / 64.0).abs() < 1e-15);

        // Shrinking c1 - c2 raises the partition difficulty monotonically.
        let mut last = 0.0;
        for c2 in [1.0, 5.0, 9.0, 12.0] {
            let c = FilterConstants::new(13.0, c2, 30.0, 100, 2).unwrap();
            let (_, mp) = sample_bounds(&c).unwrap();
            assert!(mp > last);
            last = mp;
        }

        let degenerate = FilterConstants::new(30.0, 5.0, 30.0, 100, 2).unwrap();
        assert!(matches!(sample_bounds(&degenerate), Err(Error::AssumptionViolated(_))));
    }

    #[test]
    fn mdl_identity_values() {
        let c = example_constants();
        // p = k: pure penalty 0.5 * 2 * 198 * ln(1000)/1000.
        let at_k = mdl_of_true_spectrum(&c, 2, 1000).unwrap();
        let expected = 198.0 * 1000.0f64.ln() / 1000.0;
        assert!((at_k - expected).abs() < 1e-12);
        assert!((at_k - 1.36774).abs() < 1e-5);

        // The penalty grows beyond k.
        let above = mdl_of_true_spectrum(&c, 3, 1000).unwrap();
        assert!(at_k < above);

        // Below k the gap term dominates the smaller penalty.
        let below = mdl_of_true_spectrum(&c, 1, 1000).unwrap();
        assert!(below > at_k, "below = {below}, at k = {at_k}");
    }

    #[test]
    fn mdl_minimum_at_k_for_random_tuples() {
        let mut rng = stream(8, &[20]);
        for _ in 0..20 {
            let k = 2 + rng.random_range(0..4);
            let s = 5 + rng.random_range(0..40);
            let n = k * s;
            let c2 = 3.0 * rng.random::<f64>();
            let c1 = c2 + 0.5 + 4.0 * rng.random::<f64>();
            let c3 = c1 + 0.5 + 4.0 * rng.random::<f64>();
            let c = FilterConstants::new(c1, c2, c3, n, k).unwrap();
            assert!(c.assumption_holds());
            let m = 100_000;
            let curve: Vec<f64> =
                (1..=n).map(|p| mdl_of_true_spectrum(&c, p, m).unwrap()).collect();
            let argmin = curve
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i + 1)
                .unwrap();
            assert_eq!(argmin, k, "n = {n}, k = {k}");
        }
    }

    #[test]
    fn gamma_power_inequality() {
        assert!(gamma_power_inequality_check(2.0, 0.5).unwrap());
        assert!((2.0f64.powf(0.5) - 1.414).abs() < 1e-3);
        // Equality at x = 0 means the strict inequality fails.
        assert!(!gamma_power_inequality_check(2.0, 0.0).unwrap());
        assert!(gamma_power_inequality_check(1.0, 0.5).is_err());
        assert!(gamma_power_inequality_check(2.0, 1.0).is_err());
    }

    #[test]
    fn kmeans_lower_bound_values() {
        let b = kmeans_cost_lower_bound(100, 2).unwrap();
        assert!((b - 2.0 / 51.0).abs() < 1e-15);
        assert!((b - 0.039216).abs() < 1e-6);
        assert_eq!(single_mislabel_cost(50, 50), 100.0 / (51.0 * 50.0));

        // The bound vanishes as blocks grow.
        let mut last = f64::INFINITY;
        for s in [2usize, 10, 100, 10_000] {
            let b = kmeans_cost_lower_bound(2 * s, 2).unwrap();
            assert!(b < last);
            last = b;
        }
        assert!(kmeans_cost_lower_bound(2, 2).is_err());
    }

    #[test]
    fn monte_carlo_moments_identity_filter() {
        let params = PpmParams::new(12, 3, 6.0, 1.0).unwrap();
        let id = FilterSpec::identity(ShiftKind::Adjacency);
        let est = monte_carlo_moments(&id, &params, true, 3, &mut stream(1, &[TAG_GRAPH])).unwrap();
        assert_eq!(est.mean.p1, 1.0);
        for (i, &p) in est.mean.as_array().iter().enumerate().skip(1) {
            assert_eq!(p, 0.0, "p{}", i + 1);
        }

        let scaled = FilterSpec::new(vec![2.5], ShiftKind::Adjacency).unwrap();
        let est =
            monte_carlo_moments(&scaled, &params, true, 2, &mut stream(2, &[TAG_GRAPH])).unwrap();
        assert_eq!(est.mean.p1, 6.25);
        assert_eq!(est.mean.p6, 0.0);
    }

    #[test]
    fn monte_carlo_moments_match_adjacency_closed_form() {
        // Small-scale version of the moment-oracle agreement check.
        let params = PpmParams::new(18, 3, 9.0, 1.8).unwrap();
        let filter = FilterSpec::shift_only(ShiftKind::Adjacency);
        let est =
            monte_carlo_moments(&filter, &params, true, 4000, &mut stream(5, &[TAG_GRAPH])).unwrap();
        let exact = adjacency_moments(params.p_in(), params.p_out()).unwrap().as_array();
        for (c, (&hat, &truth)) in est.mean.as_array().iter().zip(exact.iter()).enumerate() {
            assert!(est.realizable[c]);
            let tol = 4.0 * est.std_err[c].max(1e-12);
            assert!((hat - truth).abs() <= tol, "p{}: {hat} vs {truth} (tol {tol})", c + 1);
        }
    }

    #[test]
    fn realizability_flags() {
        // k = 2 cannot realize p9; blocks of size 2 cannot realize p6.
        let params = PpmParams::new(4, 2, 2.0, 1.0).unwrap();
        let filter = FilterSpec::shift_only(ShiftKind::Adjacency);
        let est = monte_carlo_moments(&filter, &params, true, 2, &mut stream(6, &[TAG_GRAPH])).unwrap();
        assert!(!est.realizable[8]);
        assert!(!est.realizable[5]);
        assert!(est.realizable[0]);
    }

    #[test]
    fn estimated_constants_match_adjacency_closed_form() {
        let params = PpmParams::new(30, 3, 15.0, 3.0).unwrap();
        let labels = PartitionIndicator::equal_blocks(30, 3).unwrap();
        let filter = FilterSpec::shift_only(ShiftKind::Adjacency);
        let est = estimate_constants(
            &filter,
            &params.to_sbm(),
            &labels,
            true,
            1.0,
            4000,
            &mut stream(7, &[TAG_GRAPH]),
        )
        .unwrap();
        let exact = adjacency_constants(params.p_in(), params.p_out(), 30, 3).unwrap();
        assert!((est.c1 - exact.c1).abs() < 0.05 * exact.c1, "c1 {} vs {}", est.c1, exact.c1);
        assert!((est.c2 - exact.c2).abs() < 0.05 * exact.c2.max(1.0), "c2 {} vs {}", est.c2, exact.c2);
        assert!((est.c3 - exact.c3).abs() < 0.05 * exact.c3, "c3 {} vs {}", est.c3, exact.c3);
    }
}

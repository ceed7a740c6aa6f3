//! Sample covariance of a signal batch and its symmetric eigendecomposition
//! with descending eigenvalues.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Provenance carried alongside a batch of signals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchMeta {
    pub seed: Option<u64>,
    pub excitation: Option<String>,
    pub filter: Option<String>,
    pub graph_process: Option<String>,
}

/// `m` observed signals of shared dimension `n`.
#[derive(Debug, Clone)]
pub struct SignalBatch {
    signals: Vec<Vec<f64>>,
    n: usize,
    pub meta: BatchMeta,
}

impl SignalBatch {
    pub fn new(signals: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = signals.first() else {
            return Err(Error::Degenerate("empty signal batch".into()));
        };
        let n = first.len();
        if n == 0 {
            return Err(Error::Degenerate("signals have dimension 0".into()));
        }
        if signals.iter().any(|s| s.len() != n) {
            return Err(Error::DimensionMismatch("signals differ in dimension".into()));
        }
        Ok(Self { signals, n, meta: BatchMeta::default() })
    }

    pub fn with_meta(mut self, meta: BatchMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn signals(&self) -> &[Vec<f64>] {
        &self.signals
    }

    /// Relabels coordinates: entry `i` of each signal moves to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch("permutation length != n".into()));
        }
        let signals = self
            .signals
            .iter()
            .map(|s| {
                let mut out = vec![0.0; self.n];
                for (i, &target) in perm.iter().enumerate() {
                    out[target] = s[i];
                }
                out
            })
            .collect();
        Ok(Self { signals, n: self.n, meta: self.meta.clone() })
    }
}

/// Streaming accumulator for the second-moment matrix; summation order is
/// the push order, so a serial left-to-right pass is reproducible bit for
/// bit.
#[derive(Debug, Clone)]
pub struct CovarianceAccumulator {
    n: usize,
    count: usize,
    sum: Vec<f64>, // row-major upper triangle accumulated in full rows
}

impl CovarianceAccumulator {
    pub fn new(n: usize) -> Self {
        Self { n, count: 0, sum: vec![0.0; n * n] }
    }

    pub fn push(&mut self, y: &[f64]) {
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            let row = &mut self.sum[i * self.n..(i + 1) * self.n];
            for (j, &yj) in y.iter().enumerate().skip(i) {
                row[j] += yi * yj;
            }
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `(1/m) sum_l y y^T`, mirrored to exact symmetry.
    pub fn finish(&self) -> Result<DMatrix<f64>> {
        if self.count == 0 {
            return Err(Error::Degenerate("no signals accumulated".into()));
        }
        let m = self.count as f64;
        let mut c = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.sum[i * self.n + j] / m;
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        Ok(c)
    }
}

/// The second-moment sample covariance `(1/m) sum_l y (y)^T` (no mean
/// subtraction; the signal model is zero-mean), symmetrized as
/// `(C + C^T)/2` which the upper-triangle accumulation realizes exactly.
pub fn sample_covariance(batch: &SignalBatch) -> DMatrix<f64> {
    let mut acc = CovarianceAccumulator::new(batch.dim());
    for y in batch.signals() {
        acc.push(y);
    }
    acc.finish().expect("batch is nonempty by construction")
}

/// Mean-centered variant for pre-normalized real-data pipelines.
pub fn sample_covariance_centered(batch: &SignalBatch) -> DMatrix<f64> {
    let (n, m) = (batch.dim(), batch.len() as f64);
    let mut mean = vec![0.0; n];
    for y in batch.signals() {
        for (acc, &v) in mean.iter_mut().zip(y) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= m;
    }
    let mut acc = CovarianceAccumulator::new(n);
    let mut centered = vec![0.0; n];
    for y in batch.signals() {
        for i in 0..n {
            centered[i] = y[i] - mean[i];
        }
        acc.push(&centered);
    }
    acc.finish().expect("batch is nonempty by construction")
}

/// Symmetric eigendecomposition with eigenvalues in descending order and
/// sign-canonicalized eigenvector columns.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    pub covariance: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralSummary {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Decomposes a symmetric matrix; ordering is a stable descending sort and
/// each eigenvector's first entry above 1e-12 in magnitude is made
/// positive, so the output is deterministic given the input.
pub fn eigendecompose(c: &DMatrix<f64>) -> Result<SpectralSummary> {
    if c.nrows() != c.ncols() {
        return Err(Error::DimensionMismatch("matrix is not square".into()));
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::Degenerate("matrix has non-finite entries".into()));
    }
    let n = c.nrows();
    let eig = nalgebra::SymmetricEigen::new(c.clone());

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).expect("finite"));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let flip = match col.iter().find(|x| x.abs() > 1e-12) {
            Some(&lead) if lead < 0.0 => -1.0,
            _ => 1.0,
        };
        for i in 0..n {
            eigenvectors[(i, dst)] = flip * col[i];
        }
    }
    Ok(SpectralSummary { covariance: c.clone(), eigenvalues, eigenvectors })
}

/// The first `k` eigenvector columns.
pub fn top_k_eigenvectors(s: &SpectralSummary, k: usize) -> Result<DMatrix<f64>> {
    let n = s.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} out of range 1..={n}")));
    }
    Ok(s.eigenvectors.columns(0, k).into_owned())
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn spectral_norm_sym(c: &DMatrix<f64>) -> f64 {
    nalgebra::SymmetricEigen::new(c.clone())
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn covariance_of_repeated_vector_is_outer_product() {
        let y = vec![1.0, -2.0, 0.5];
        let batch = SignalBatch::new(vec![y.clone(); 7]).unwrap();
        let c = sample_covariance(&batch);
        for i in 0..3 {
            for j in 0..3 {
                assert!((c[(i, j)] - y[i] * y[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn covariance_of_basis_pair() {
        let batch = SignalBatch::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let c = sample_covariance(&batch);
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
    }

    #[test]
    fn empty_batch_is_rejected() {
        assert!(SignalBatch::new(vec![]).is_err());
        assert!(SignalBatch::new(vec![vec![]]).is_err());
        assert!(SignalBatch::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn white_gaussian_covariance_concentrates() {
        // Concentration oracle: ||Chat - I||_2 <= 5 sqrt(n/m).
        let (n, m) = (50, 5000);
        let mut rng = stream(17, &[1]);
        let signals: Vec<Vec<f64>> =
            (0..m).map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let c = sample_covariance(&SignalBatch::new(signals).unwrap());
        let err = spectral_norm_sym(&(&c - DMatrix::identity(n, n)));
        let budget = 5.0 * (n as f64 / m as f64).sqrt();
        assert!(err <= budget, "||C - I|| = {err}, budget {budget}");
    }

    #[test]
    fn eigendecompose_sorts_descending() {
        let c = DMatrix::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        let s = eigendecompose(&c).unwrap();
        assert_eq!(s.eigenvalues, vec![3.0, 2.0, 1.0]);
        // Canonical sign: first substantial entry positive.
        let v1 = top_k_eigenvectors(&s, 1).unwrap();
        assert!((v1[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(v1[(1, 0)].abs() < 1e-12 && v1[(2, 0)].abs() < 1e-12);
    }

    #[test]
    fn identity_matrix_has_flat_spectrum() {
        let s = eigendecompose(&DMatrix::identity(6, 6)).unwrap();
        assert!(s.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-12));
        let gram = s.eigenvectors.transpose() * &s.eigenvectors;
        assert!((gram - DMatrix::identity(6, 6)).abs().max() < 1e-10);
    }

    #[test]
    fn top_k_bounds_are_enforced() {
        let s = eigendecompose(&DMatrix::identity(4, 4)).unwrap();
        assert!(top_k_eigenvectors(&s, 0).is_err());
        assert!(top_k_eigenvectors(&s, 5).is_err());
        assert_eq!(top_k_eigenvectors(&s, 4).unwrap(), s.eigenvectors);
    }

    #[test]
    fn non_finite_matrices_are_rejected() {
        let mut c = DMatrix::identity(3, 3);
        c[(1, 1)] = f64::NAN;
        assert!(eigendecompose(&c).is_err());
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        let mut rng = stream(23, &[2]);
        for n in [5usize, 40] {
            let raw = DMatrix::from_fn(n, n, |_, _| {
                let x: f64 = StandardNormal.sample(&mut rng);
                x
            });
            let c = (&raw + raw.transpose()) * 0.5;
            let s = eigendecompose(&c).unwrap();
            let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.eigenvalues.clone()));
            let rebuilt = &s.eigenvectors * lam * s.eigenvectors.transpose();
            let rel = spectral_norm_sym(&(&rebuilt - &c)) / spectral_norm_sym(&c);
            assert!(rel <= 1e-8, "reconstruction error {rel}");
            let gram = s.eigenvectors.transpose() * &s.eigenvectors;
            assert!((gram - DMatrix::identity(n, n)).abs().max() <= 1e-10);
        }
    }

    #[test]
    fn eigenvalues_are_permutation_invariant() {
        let mut rng = stream(29, &[3]);
        let signals: Vec<Vec<f64>> =
            (0..40).map(|_| (0..12).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let batch = SignalBatch::new(signals).unwrap();
        let perm: Vec<usize> = vec![4, 7, 0, 11, 2, 9, 1, 3, 10, 5, 8, 6];
        let permuted = batch.permuted(&perm).unwrap();
        let a = eigendecompose(&sample_covariance(&batch)).unwrap();
        let b = eigendecompose(&sample_covariance(&permuted)).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn centered_covariance_removes_the_mean() {
        let signals = vec![vec![5.0, 1.0], vec![5.0, -1.0]];
        let batch = SignalBatch::new(signals).unwrap();
        let centered = sample_covariance_centered(&batch);
        assert!((centered[(0, 0)] - 0.0).abs() < 1e-15);
        assert!((centered[(1, 1)] - 1.0).abs() < 1e-15);
        let raw = sample_covariance(&batch);
        assert!((raw[(0, 0)] - 25.0).abs() < 1e-15);
    }

    #[test]
    fn accumulator_matches_batch_covariance_bitwise() {
        let mut rng = stream(31, &[4]);
        let signals: Vec<Vec<f64>> =
            (0..25).map(|_| (0..9).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let batch = SignalBatch::new(signals.clone()).unwrap();
        let mut acc = CovarianceAccumulator::new(9);
        for y in &signals {
            acc.push(y);
        }
        assert_eq!(acc.finish().unwrap(), sample_covariance(&batch));
    }
}

//! Excitation signals driving the graph filters: white inputs and the
//! colored variants (diagonal, Wishart, adversarial).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spectral::eigendecompose;

/// What distribution the excitation vectors follow.
#[derive(Debug, Clone, PartialEq)]
pub enum ExcitationKind {
    /// i.i.d. U[-1, 1] entries (variance 1/3 unless rescaled).
    WhiteUniform,
    /// i.i.d. N(0, 1) entries.
    WhiteGaussian,
    /// N(0, diag(d)) with d drawn once from U[0, 1]^n.
    Diagonal,
    /// N(0, W) with W = (1/p) Z Z^T for an n x p standard-Gaussian Z drawn
    /// once; `normalized = false` keeps the raw Z Z^T.
    Wishart { samples: usize, normalized: bool },
    /// N(0, 0.01 V1 V1^T + 0.81 V2 V2^T) where V1 holds the top-k
    /// eigenvectors of the expected adjacency: the community directions are
    /// almost silent.
    Adversarial { expected_adjacency: DMatrix<f64>, k: usize },
}

/// An excitation distribution before its coloring is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationSpec {
    pub kind: ExcitationKind,
    /// Rescale U[-1, 1] by sqrt(3) so E[w w^T] = I exactly.
    pub scale_to_unit_variance: bool,
}

impl ExcitationSpec {
    pub fn new(kind: ExcitationKind) -> Self {
        Self { kind, scale_to_unit_variance: false }
    }

    /// Per-coordinate variance of the white kinds (coloring aside).
    pub fn nominal_variance(&self) -> f64 {
        match self.kind {
            ExcitationKind::WhiteUniform if !self.scale_to_unit_variance => 1.0 / 3.0,
            _ => 1.0,
        }
    }

    /// Validates and freezes the coloring for one experiment. Diagonal and
    /// Wishart coloring matrices are drawn here, once, and reused for every
    /// subsequent [`Excitation::draw`].
    pub fn prepare<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Excitation> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        let prepared = match &self.kind {
            ExcitationKind::WhiteUniform => Prepared::WhiteUniform {
                scale: if self.scale_to_unit_variance { 3.0f64.sqrt() } else { 1.0 },
            },
            ExcitationKind::WhiteGaussian => Prepared::WhiteGaussian,
            ExcitationKind::Diagonal => {
                let std_devs = (0..n).map(|_| rng.random::<f64>().sqrt()).collect();
                Prepared::Diagonal { std_devs }
            }
            ExcitationKind::Wishart { samples, normalized } => {
                if *samples == 0 {
                    return Err(Error::InvalidParameter("wishart needs p >= 1".into()));
                }
                let scale = if *normalized { 1.0 / (*samples as f64).sqrt() } else { 1.0 };
                let factor = DMatrix::from_fn(n, *samples, |_, _| {
                    let z: f64 = StandardNormal.sample(rng);
                    z * scale
                });
                Prepared::Wishart { factor }
            }
            ExcitationKind::Adversarial { expected_adjacency, k } => {
                if expected_adjacency.nrows() != n || expected_adjacency.ncols() != n {
                    return Err(Error::DimensionMismatch("expected adjacency must be n x n".into()));
                }
                if *k == 0 || *k >= n {
                    return Err(Error::InvalidParameter(format!("adversarial needs 1 <= k < n, got {k}")));
                }
                let sym_err = (expected_adjacency - expected_adjacency.transpose()).abs().max();
                if sym_err > 1e-9 {
                    return Err(Error::InvalidParameter("expected adjacency must be symmetric".into()));
                }
                let summary = eigendecompose(expected_adjacency)?;
                let v1 = summary.eigenvectors.columns(0, *k).into_owned();
                Prepared::Adversarial { v1 }
            }
        };
        Ok(Excitation { n, prepared })
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    WhiteUniform { scale: f64 },
    WhiteGaussian,
    Diagonal { std_devs: Vec<f64> },
    Wishart { factor: DMatrix<f64> },
    // w = 0.9 g - 0.8 V1 (V1^T g): the square root of
    // 0.01 V1 V1^T + 0.81 (I - V1 V1^T) applied to white noise.
    Adversarial { v1: DMatrix<f64> },
}

/// An excitation distribution with its coloring frozen.
#[derive(Debug, Clone)]
pub struct Excitation {
    n: usize,
    prepared: Prepared,
}

impl Excitation {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// One excitation vector.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.prepared {
            Prepared::WhiteUniform { scale } => {
                (0..self.n).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale).collect()
            }
            Prepared::WhiteGaussian => {
                (0..self.n).map(|_| StandardNormal.sample(rng)).collect()
            }
            Prepared::Diagonal { std_devs } => std_devs
                .iter()
                .map(|&s| {
                    let z: f64 = StandardNormal.sample(rng);
                    s * z
                })
                .collect(),
            Prepared::Wishart { factor } => {
                let p = factor.ncols();
                let g: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
                let mut out = vec![0.0; self.n];
                for (j, &gj) in g.iter().enumerate() {
                    if gj == 0.0 {
                        continue;
                    }
                    let col = factor.column(j);
                    for i in 0..self.n {
                        out[i] += col[i] * gj;
                    }
                }
                out
            }
            Prepared::Adversarial { v1 } => {
                let g: Vec<f64> = (0..self.n).map(|_| StandardNormal.sample(rng)).collect();
                let k = v1.ncols();
                let mut proj = vec![0.0; k];
                for (c, p) in proj.iter_mut().enumerate() {
                    let col = v1.column(c);
                    *p = g.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                }
                let mut out: Vec<f64> = g.iter().map(|&x| 0.9 * x).collect();
                for (c, &p) in proj.iter().enumerate() {
                    let col = v1.column(c);
                    for i in 0..self.n {
                        out[i] -= 0.8 * col[i] * p;
                    }
                }
                out
            }
        }
    }

    /// The frozen covariance `E[w w^T]` (diagnostics and tests).
    pub fn covariance(&self) -> DMatrix<f64> {
        match &self.prepared {
            Prepared::WhiteUniform { scale } => {
                DMatrix::identity(self.n, self.n) * (scale * scale / 3.0)
            }
            Prepared::WhiteGaussian => DMatrix::identity(self.n, self.n),
            Prepared::Diagonal { std_devs } => {
                DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    self.n,
                    std_devs.iter().map(|&s| s * s),
                ))
            }
            Prepared::Wishart { factor } => factor * factor.transpose(),
            Prepared::Adversarial { v1 } => {
                let p1 = v1 * v1.transpose();
                (DMatrix::identity(self.n, self.n) - &p1) * 0.81 + p1 * 0.01
            }
        }
    }
}

//! Polynomial graph filters `H(S) = sum_l h_l S^l` over a chosen shift
//! operator, applied by iterated shift-vector products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Which matrix carries the graph structure in `H(S)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftKind {
    Adjacency,
    Laplacian,
}

/// Coefficients `h_0..h_T` of a degree-`T` matrix polynomial in the shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub coefficients: Vec<f64>,
    pub shift: ShiftKind,
}

impl FilterSpec {
    pub fn new(coefficients: Vec<f64>, shift: ShiftKind) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidParameter("filter needs at least h_0".into()));
        }
        if coefficients.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidParameter("filter coefficients must be finite".into()));
        }
        Ok(Self { coefficients, shift })
    }

    /// The identity filter `H = I`.
    pub fn identity(shift: ShiftKind) -> Self {
        Self { coefficients: vec![1.0], shift }
    }

    /// The plain shift `H = S`.
    pub fn shift_only(shift: ShiftKind) -> Self {
        Self { coefficients: vec![0.0, 1.0], shift }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }
}

/// The smoothing rate `beta = 1 / ((4 + 4 gamma) ln n)` of the diffusion
/// filter. Natural log; `ln n` multiplies the denominator so that
/// `beta * lambda_max(L)` stays O(1) and the filter acts as a smoother.
pub fn diffusion_beta(gamma: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter("diffusion filter needs n >= 2".into()));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be >= 0")));
    }
    Ok(1.0 / ((4.0 + 4.0 * gamma) * (n as f64).ln()))
}

/// The consensus-style filter `(I - beta L)^T`, expanded into polynomial
/// coefficients over the Laplacian shift: `h_l = C(T, l) (-beta)^l`.
pub fn diffusion_filter(gamma: f64, n: usize, order: usize) -> Result<FilterSpec> {
    let beta = diffusion_beta(gamma, n)?;
    diffusion_filter_with_beta(beta, order)
}

/// Same expansion with an explicit `beta` override.
pub fn diffusion_filter_with_beta(beta: f64, order: usize) -> Result<FilterSpec> {
    let mut coefficients = Vec::with_capacity(order + 1);
    let mut binom = 1.0f64; // C(order, l), updated multiplicatively
    let mut power = 1.0f64; // (-beta)^l
    for l in 0..=order {
        coefficients.push(binom * power);
        binom *= (order - l) as f64 / (l + 1) as f64;
        power *= -beta;
    }
    FilterSpec::new(coefficients, ShiftKind::Laplacian)
}

/// Applies `H(S) w = sum_l h_l S^l w` without ever forming `S^l`.
pub fn apply_filter(spec: &FilterSpec, g: &Graph, w: &[f64]) -> Result<Vec<f64>> {
    if w.len() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "signal has length {}, graph has {} nodes",
            w.len(),
            g.n()
        )));
    }
    let mut acc: Vec<f64> = w.iter().map(|&x| x * spec.coefficients[0]).collect();
    if spec.coefficients.len() == 1 {
        return Ok(acc);
    }
    let mut current = w.to_vec();
    let mut next = vec![0.0; g.n()];
    for &h in &spec.coefficients[1..] {
        match spec.shift {
            ShiftKind::Adjacency => g.adj_matvec(&current, &mut next),
            ShiftKind::Laplacian => g.lap_matvec(&current, &mut next),
        }
        std::mem::swap(&mut current, &mut next);
        if h != 0.0 {
            for (a, &c) in acc.iter_mut().zip(&current) {
                *a += h * c;
            }
        }
    }
    Ok(acc)
}

/// The scalar generating polynomial `h(lambda) = sum_l h_l lambda^l`,
/// evaluated by Horner's rule.
pub fn generating_polynomial(spec: &FilterSpec, lambda: f64) -> f64 {
    spec.coefficients.iter().rev().fold(0.0, |acc, &h| acc * lambda + h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_ppm_graph, PartitionIndicator, PpmParams};
    use crate::rng::{stream, TAG_GRAPH};
    use nalgebra::DMatrix;

    #[test]
    fn identity_filter_passes_signal_through() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let w = vec![1.0, -2.0, 0.5, 3.0];
        let y = apply_filter(&FilterSpec::identity(ShiftKind::Adjacency), &g, &w).unwrap();
        assert_eq!(y, w);
    }

    #[test]
    fn one_hop_adjacency_filter_sums_neighbors() {
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let spec = FilterSpec::shift_only(ShiftKind::Adjacency);
        let y = apply_filter(&spec, &path, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(y, vec![1.0, 0.0, 1.0]);

        let k3 = Graph::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let y = apply_filter(&spec, &k3, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(y, vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = Graph::empty(3);
        let spec = FilterSpec::identity(ShiftKind::Laplacian);
        assert!(apply_filter(&spec, &g, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn diffusion_beta_value() {
        // gamma = 0.5, n = 100: beta = 1 / (6 ln 100).
        let beta = diffusion_beta(0.5, 100).unwrap();
        assert!((beta - 1.0 / (6.0 * 100.0f64.ln())).abs() < 1e-15);
        assert!((beta - 0.036191).abs() < 1e-6);
    }

    #[test]
    fn diffusion_filter_is_binomial_expansion() {
        let spec = diffusion_filter(0.5, 100, 5).unwrap();
        let beta = diffusion_beta(0.5, 100).unwrap();
        assert_eq!(spec.shift, ShiftKind::Laplacian);
        assert_eq!(spec.coefficients.len(), 6);
        let binomials = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
        for (l, &c) in spec.coefficients.iter().enumerate() {
            let expected = binomials[l] * (-beta).powi(l as i32);
            assert!((c - expected).abs() <= 1e-15 * expected.abs().max(1.0));
        }

        // T = 0 collapses to the identity regardless of beta.
        assert_eq!(diffusion_filter(2.0, 50, 0).unwrap().coefficients, vec![1.0]);

        // h(0) = 1 for any (gamma, n, T).
        for (gamma, n, t) in [(0.1, 10, 3), (1.0, 1000, 7), (3.0, 64, 1)] {
            let spec = diffusion_filter(gamma, n, t).unwrap();
            assert!((generating_polynomial(&spec, 0.0) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn generating_polynomial_values() {
        let spec = FilterSpec::new(vec![1.0, 2.0, 3.0], ShiftKind::Adjacency).unwrap();
        assert_eq!(generating_polynomial(&spec, 0.0), 1.0);
        assert_eq!(generating_polynomial(&spec, 1.0), 6.0);
        let hop = FilterSpec::shift_only(ShiftKind::Laplacian);
        assert_eq!(generating_polynomial(&hop, 2.5), 2.5);
    }

    #[test]
    fn filter_application_is_linear() {
        let (params, labels) =
            (PpmParams::new(18, 3, 9.0, 2.0).unwrap(), PartitionIndicator::equal_blocks(18, 3).unwrap());
        let g = sample_ppm_graph(&params, &labels, false, &mut stream(2, &[TAG_GRAPH])).unwrap();
        let spec = diffusion_filter(0.4, 18, 4).unwrap();
        let mut rng = stream(2, &[7]);
        use rand::Rng;
        let u: Vec<f64> = (0..18).map(|_| rng.random::<f64>() - 0.5).collect();
        let v: Vec<f64> = (0..18).map(|_| rng.random::<f64>() - 0.5).collect();
        let (alpha, beta) = (1.7, -0.3);
        let combo: Vec<f64> = u.iter().zip(&v).map(|(&a, &b)| alpha * a + beta * b).collect();
        let lhs = apply_filter(&spec, &g, &combo).unwrap();
        let fu = apply_filter(&spec, &g, &u).unwrap();
        let fv = apply_filter(&spec, &g, &v).unwrap();
        for i in 0..18 {
            let rhs = alpha * fu[i] + beta * fv[i];
            assert!((lhs[i] - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn filter_scales_eigenvectors_by_generating_polynomial() {
        let g = Graph::from_edges(8, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0)])
            .unwrap();
        let spec = FilterSpec::new(vec![0.3, -0.2, 0.05], ShiftKind::Laplacian).unwrap();
        let l = g.laplacian_dense();
        let eig = nalgebra::SymmetricEigen::new(l);
        for idx in 0..8 {
            let lambda = eig.eigenvalues[idx];
            let v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
            let hv = apply_filter(&spec, &g, &v).unwrap();
            let scale = generating_polynomial(&spec, lambda);
            for i in 0..8 {
                assert!((hv[i] - scale * v[i]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn iterated_products_match_dense_polynomial() {
        // Oracle: materialize H = sum h_l S^l densely on a small graph.
        let (params, labels) =
            (PpmParams::new(20, 2, 10.0, 4.0).unwrap(), PartitionIndicator::equal_blocks(20, 2).unwrap());
        for (seed, shift) in [(1u64, ShiftKind::Adjacency), (2, ShiftKind::Laplacian)] {
            let g = sample_ppm_graph(&params, &labels, seed == 1, &mut stream(seed, &[TAG_GRAPH])).unwrap();
            let spec = FilterSpec::new(vec![0.7, -0.4, 0.21, 0.013], shift).unwrap();
            let s = match shift {
                ShiftKind::Adjacency => g.adjacency_dense(),
                ShiftKind::Laplacian => g.laplacian_dense(),
            };
            let mut h = DMatrix::<f64>::zeros(20, 20);
            let mut power = DMatrix::<f64>::identity(20, 20);
            for &c in &spec.coefficients {
                h += &power * c;
                power = &power * &s;
            }
            let mut rng = stream(seed, &[99]);
            use rand::Rng;
            let w: Vec<f64> = (0..20).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let fast = apply_filter(&spec, &g, &w).unwrap();
            let dense = h * DMatrix::from_column_slice(20, 1, &w);
            for i in 0..20 {
                assert!((fast[i] - dense[(i, 0)]).abs() <= 1e-10);
            }
        }
    }
}

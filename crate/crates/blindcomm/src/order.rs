//! Model-order selection: the MDL criterion over the sample-covariance
//! spectrum, and the naive true-spectrum threshold baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralSummary;
use crate::theory::{analytic_spectrum, FilterConstants};

/// Relative floor applied to tail eigenvalues before taking logs.
pub const EIGENVALUE_CLAMP_RELATIVE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum OrderMethod {
    Mdl,
    NaiveThreshold,
}

/// A selected model order with the criterion curve that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OrderEstimate {
    pub k_star: usize,
    /// MDL value per candidate order `p = 1..=n`; empty for the threshold
    /// method, which has no curve.
    pub criterion_curve: Vec<f64>,
    pub method: OrderMethod,
    /// Absolute eigenvalue floor used before logs (MDL only).
    pub clamp_epsilon: f64,
    /// Set when the estimate fell outside `1..=n` (threshold counting zero
    /// eigenvalues above the midpoint).
    pub degenerate: bool,
}

fn check_descending(eigenvalues: &[f64]) -> Result<()> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidParameter("empty spectrum".into()));
    }
    if eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::Degenerate("non-finite eigenvalue".into()));
    }
    let scale = eigenvalues[0].abs().max(1.0);
    for w in eigenvalues.windows(2) {
        if w[1] > w[0] + 1e-10 * scale {
            return Err(Error::InvalidParameter("eigenvalues must be in descending order".into()));
        }
    }
    Ok(())
}

fn clamp_epsilon(eigenvalues: &[f64]) -> f64 {
    let top = eigenvalues[0];
    if top > 0.0 {
        EIGENVALUE_CLAMP_RELATIVE * top
    } else {
        f64::MIN_POSITIVE
    }
}

/// The MDL criterion
/// `(p - n) ln(geomMean(tail) / arithMean(tail)) + p (2n - p) ln(m) / (2m)`
/// over the tail `lambda_{p+1..n}`, with eigenvalues floored at
/// `1e-12 * lambda_1` before the logs. For `p = n` the tail is empty and the
/// first term is 0. Natural logs throughout.
pub fn mdl_criterion(eigenvalues: &[f64], p: usize, m: usize) -> Result<f64> {
    check_descending(eigenvalues)?;
    let n = eigenvalues.len();
    if p == 0 || p > n {
        return Err(Error::InvalidParameter(format!("p = {p} out of range 1..={n}")));
    }
    if m < 2 {
        return Err(Error::InvalidParameter("m must be >= 2".into()));
    }
    let mf = m as f64;
    let penalty = 0.5 * p as f64 * (2 * n - p) as f64 * mf.ln() / mf;
    if p == n {
        return Ok(penalty);
    }
    let eps = clamp_epsilon(eigenvalues);
    let tail = &eigenvalues[p..];
    let count = tail.len() as f64;
    let (mut log_sum, mut sum) = (0.0, 0.0);
    for &l in tail {
        let l = l.max(eps);
        log_sum += l.ln();
        sum += l;
    }
    let log_geo = log_sum / count;
    let log_arith = (sum / count).ln();
    // (p - n) * (log_geo - log_arith), written with the positive sign.
    Ok(count * (log_arith - log_geo) + penalty)
}

/// Algorithm-1 order selection: argmin of the MDL over `p = 1..=n`, ties
/// resolved toward the smallest `p`. The full curve is retained.
pub fn select_order_mdl(s: &SpectralSummary, m: usize) -> Result<OrderEstimate> {
    let n = s.dim();
    let mut curve = Vec::with_capacity(n);
    let mut best = (0usize, f64::INFINITY);
    for p in 1..=n {
        let value = mdl_criterion(&s.eigenvalues, p, m)?;
        if value < best.1 {
            best = (p, value);
        }
        curve.push(value);
    }
    Ok(OrderEstimate {
        k_star: best.0,
        criterion_curve: curve,
        method: OrderMethod::Mdl,
        clamp_epsilon: clamp_epsilon(&s.eigenvalues),
        degenerate: false,
    })
}

/// The naive baseline: counts the eigenvalues strictly above the midpoint
/// `(lambda_(2) + lambda_(3)) / 2` of the true spectrum. Requires knowledge
/// of the population covariance (through its constants), so it is an oracle
/// benchmark, not a practical estimator.
pub fn select_order_threshold(s: &SpectralSummary, c: &FilterConstants) -> Result<OrderEstimate> {
    if !c.assumption_holds() {
        return Err(Error::AssumptionViolated(format!(
            "need c3 > c1 > c2 >= 0, got c1 = {}, c2 = {}, c3 = {}",
            c.c1, c.c2, c.c3
        )));
    }
    check_descending(&s.eigenvalues)?;
    let spectrum = analytic_spectrum(c);
    let threshold = 0.5 * (spectrum.lambda2 + spectrum.lambda3);
    let k_star = s.eigenvalues.iter().filter(|&&l| l > threshold).count();
    Ok(OrderEstimate {
        k_star,
        criterion_curve: Vec::new(),
        method: OrderMethod::NaiveThreshold,
        clamp_epsilon: 0.0,
        degenerate: k_star == 0,
    })
}

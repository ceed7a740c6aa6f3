//! Permutation-invariant labeling metrics: error rate via optimal
//! assignment on the confusion matrix, the chance-corrected overlap score,
//! and pairwise consistency across labelings.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::partition::Labeling;

/// Comparison of a candidate labeling against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Fraction of mislabeled nodes under the best group permutation.
    pub error_rate: f64,
    /// Chance-corrected overlap `(z - 1/k) / (1 - 1/k)` with
    /// `z = 1 - error_rate`; `None` when only one group exists.
    pub overlap: f64,
    /// `best_permutation[a]` is the reference group matched to predicted
    /// group `a`.
    pub best_permutation: Vec<usize>,
}

/// Minimum-cost perfect assignment on a square i64 matrix
/// (Kuhn–Munkres with potentials, O(n^3)). Returns the column chosen for
/// each row.
fn min_cost_assignment(cost: &DMatrix<i64>) -> Vec<usize> {
    let n = cost.nrows();
    debug_assert_eq!(n, cost.ncols());
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // matched_row[j]: row on column j (1-based)
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[matched_row[j] - 1] = j - 1;
    }
    row_to_col
}

/// The confusion matrix of predicted vs reference groups, zero-padded to a
/// square of side `max(k_pred, k_ref)`.
fn confusion(g: &Labeling, reference: &Labeling) -> Result<(DMatrix<i64>, usize)> {
    if g.n() != reference.n() {
        return Err(Error::DimensionMismatch(format!(
            "labelings cover {} and {} nodes",
            g.n(),
            reference.n()
        )));
    }
    let k = g.k().max(reference.k());
    let mut counts = DMatrix::<i64>::zeros(k, k);
    for (&a, &b) in g.assignments().iter().zip(reference.assignments()) {
        counts[(a, b)] += 1;
    }
    Ok((counts, k))
}

/// The permutation-invariant error rate
/// `min over sigma of |{x : g_true(x) != sigma(g(x))}| / n`, computed by
/// optimal assignment on the confusion matrix, which equals the minimum
/// over all group permutations.
pub fn error_rate(g: &Labeling, reference: &Labeling) -> Result<EvalReport> {
    let (counts, k) = confusion(g, reference)?;
    let best_permutation = min_cost_assignment(&(-counts.clone()));
    let matched: i64 = best_permutation.iter().enumerate().map(|(a, &b)| counts[(a, b)]).sum();
    let error_rate = (g.n() as i64 - matched) as f64 / g.n() as f64;
    let overlap = if k >= 2 { overlap_from_error(error_rate, k) } else { 1.0 };
    Ok(EvalReport { error_rate, overlap, best_permutation })
}

fn overlap_from_error(error_rate: f64, k: usize) -> f64 {
    let z_actual = 1.0 - error_rate;
    let z_chance = 1.0 / k as f64;
    (z_actual - z_chance) / (1.0 - z_chance)
}

/// The overlap score `Z = (z_actual - 1/k) / (1 - 1/k)`: 0 for a random
/// guess, 1 for a perfect labeling.
pub fn overlap_score(g: &Labeling, reference: &Labeling, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter("overlap needs k >= 2 (z_chance = 1 at k = 1)".into()));
    }
    let report = error_rate(g, reference)?;
    Ok(overlap_from_error(report.error_rate, k))
}

/// Pairwise success rates `1 - error_rate` between labelings; symmetric
/// with unit diagonal.
pub fn pairwise_consistency(labelings: &[Labeling]) -> Result<DMatrix<f64>> {
    let count = labelings.len();
    let mut out = DMatrix::identity(count, count);
    for i in 0..count {
        for j in (i + 1)..count {
            let rate = 1.0 - error_rate(&labelings[i], &labelings[j])?.error_rate;
            out[(i, j)] = rate;
            out[(j, i)] = rate;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    /// Factorial-enumeration oracle for the minimum mislabel count (k <= 8).
    pub(crate) fn brute_force_error_rate(g: &Labeling, reference: &Labeling) -> f64 {
        let k = g.k().max(reference.k());
        let mut sigma: Vec<usize> = (0..k).collect();
        let mut best = usize::MAX;
        permute(&mut sigma, 0, &mut |perm| {
            let mismatches = g
                .assignments()
                .iter()
                .zip(reference.assignments())
                .filter(|&(&a, &b)| perm[a] != b)
                .count();
            best = best.min(mismatches);
        });
        best as f64 / g.n() as f64
    }

    fn permute(items: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
        if start == items.len() {
            visit(items);
            return;
        }
        for i in start..items.len() {
            items.swap(start, i);
            permute(items, start + 1, visit);
            items.swap(start, i);
        }
    }

    fn random_labeling(n: usize, k: usize, seed: u64) -> Labeling {
        let mut rng = stream(seed, &[91]);
        loop {
            let assignments: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            if let Ok(l) = Labeling::new(assignments, k) {
                return l;
            }
        }
    }

    #[test]
    fn identical_labelings_have_zero_error() {
        let g = random_labeling(40, 4, 1);
        let report = error_rate(&g, &g).unwrap();
        assert_eq!(report.error_rate, 0.0);
        assert_eq!(report.overlap, 1.0);
    }

    #[test]
    fn permuted_labelings_have_zero_error() {
        let g = random_labeling(40, 4, 2);
        let sigma = vec![2, 3, 1, 0];
        let permuted = g.relabeled(&sigma).unwrap();
        assert_eq!(error_rate(&permuted, &g).unwrap().error_rate, 0.0);
    }

    #[test]
    fn single_flip_counts_once() {
        let g = Labeling::new(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2).unwrap();
        let mut flipped = g.assignments().to_vec();
        flipped[4] = 1;
        let flipped = Labeling::new(flipped, 2).unwrap();
        let report = error_rate(&flipped, &g).unwrap();
        assert!((report.error_rate - 0.1).abs() < 1e-15);
    }

    #[test]
    fn overlap_score_values() {
        let g = random_labeling(30, 3, 3);
        assert_eq!(overlap_score(&g, &g, 3).unwrap(), 1.0);
        assert!(overlap_score(&g, &g, 1).is_err());

        // z_actual = 1/k means zero overlap.
        assert!((overlap_from_error(1.0 - 0.25, 4) - 0.0).abs() < 1e-15);
        // k = 2, error 0.25: Z = 0.5.
        assert!((overlap_from_error(0.25, 2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn assignment_matches_brute_force() {
        let mut rng = stream(4, &[17]);
        for trial in 0..60 {
            let k = 2 + rng.random_range(0..5);
            let n = k * (2 + rng.random_range(0..6));
            let a = random_labeling(n, k, 100 + trial);
            let b = random_labeling(n, k, 200 + trial);
            let fast = error_rate(&a, &b).unwrap().error_rate;
            let slow = brute_force_error_rate(&a, &b);
            assert_eq!(fast, slow, "trial {trial}: n = {n}, k = {k}");
        }
    }

    #[test]
    fn assignment_matches_brute_force_with_unequal_group_counts() {
        for trial in 0..20 {
            let a = random_labeling(24, 3, 300 + trial);
            let b = random_labeling(24, 5, 400 + trial);
            let fast = error_rate(&a, &b).unwrap().error_rate;
            let slow = brute_force_error_rate(&a, &b);
            assert_eq!(fast, slow, "trial {trial}");
        }
    }

    #[test]
    fn error_rate_is_symmetric_for_full_support() {
        for trial in 0..20 {
            let a = random_labeling(30, 4, 500 + trial);
            let b = random_labeling(30, 4, 600 + trial);
            let ab = error_rate(&a, &b).unwrap().error_rate;
            let ba = error_rate(&b, &a).unwrap().error_rate;
            assert_eq!(ab, ba);
        }
    }

    #[test]
    fn error_rate_stays_in_unit_interval() {
        for trial in 0..20 {
            let a = random_labeling(15, 2, 700 + trial);
            let b = random_labeling(15, 6, 800 + trial);
            let r = error_rate(&a, &b).unwrap().error_rate;
            assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn pairwise_consistency_structure() {
        let a = random_labeling(30, 3, 900);
        let permuted = a.relabeled(&[1, 2, 0]).unwrap();
        let b = random_labeling(30, 3, 901);
        let m = pairwise_consistency(&[a.clone(), permuted, b]).unwrap();
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(0, 1)], 1.0, "a permutation scores as identical");
        assert_eq!(m[(0, 2)], m[(2, 0)]);
        assert!(m[(0, 2)] < 1.0);
    }

    /// Subset-DP oracle for the minimum-cost assignment total.
    fn subset_dp_min(cost: &DMatrix<i64>) -> i64 {
        let n = cost.nrows();
        let full = 1usize << n;
        let inf = i64::MAX / 4;
        let mut f = vec![inf; full];
        f[0] = 0;
        for mask in 0..full {
            let row = (mask as u32).count_ones() as usize;
            if row >= n || f[mask] == inf {
                continue;
            }
            for col in 0..n {
                if mask & (1 << col) == 0 {
                    let next = mask | (1 << col);
                    f[next] = f[next].min(f[mask] + cost[(row, col)]);
                }
            }
        }
        f[full - 1]
    }

    #[test]
    fn assignment_solver_matches_subset_dp() {
        let mut rng = stream(11, &[13]);
        for trial in 0..4000 {
            let n = 2 + rng.random_range(0..8);
            let cost = DMatrix::from_fn(n, n, |_, _| rng.random_range(-20i64..20));
            let assign = min_cost_assignment(&cost);
            let mut seen = vec![false; n];
            for &c in &assign {
                assert!(!seen[c], "trial {trial}: not a permutation");
                seen[c] = true;
            }
            let total: i64 = assign.iter().enumerate().map(|(r, &c)| cost[(r, c)]).sum();
            assert_eq!(total, subset_dp_min(&cost), "trial {trial}\n{cost}");
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = random_labeling(10, 2, 902);
        let b = random_labeling(12, 2, 903);
        assert!(error_rate(&a, &b).is_err());
    }
}

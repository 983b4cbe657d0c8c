//! Majorization between real vectors, possibly of different lengths.
//!
//! `x ≺_w y` compares partial sums of the decreasing rearrangements up to
//! `min(len x, len y)`; `x ≺ y` additionally requires equal totals over the
//! full lengths. Every comparison carries an absolute slack of
//! [`MAJORIZATION_TOL`] per partial sum.

/// Absolute slack on each partial-sum comparison.
pub const MAJORIZATION_TOL: f64 = 1e-9;

/// Entries of `x` rearranged in non-increasing order.
pub fn sort_down(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Permutation that sorts `x` non-increasingly: `sorted[i] = x[perm[i]]`.
/// Stable, so equal entries keep their input order.
pub fn sort_down_permutation(x: &[f64]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..x.len()).collect();
    perm.sort_by(|&i, &j| x[j].total_cmp(&x[i]));
    perm
}

pub fn is_non_increasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] >= w[1])
}

/// First partial sum where `x ≺_w y` breaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialSumViolation {
    /// Number of leading entries summed (1-based length of the prefix).
    pub len: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Returns the first prefix length at which `sum x↓ > sum y↓ + tol`.
pub fn first_weak_violation(x: &[f64], y: &[f64], tol: f64) -> Option<PartialSumViolation> {
    let xs = sort_down(x);
    let ys = sort_down(y);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (len, (a, b)) in xs.iter().zip(&ys).enumerate() {
        lhs += a;
        rhs += b;
        if lhs > rhs + tol {
            return Some(PartialSumViolation {
                len: len + 1,
                lhs,
                rhs,
            });
        }
    }
    None
}

/// `x ≺_w y` with the default slack.
pub fn submajorizes_weak(x: &[f64], y: &[f64]) -> bool {
    submajorizes_weak_tol(x, y, MAJORIZATION_TOL)
}

pub fn submajorizes_weak_tol(x: &[f64], y: &[f64], tol: f64) -> bool {
    first_weak_violation(x, y, tol).is_none()
}

/// `x ≺ y` with the default slack.
pub fn majorizes(x: &[f64], y: &[f64]) -> bool {
    majorizes_tol(x, y, MAJORIZATION_TOL)
}

pub fn majorizes_tol(x: &[f64], y: &[f64], tol: f64) -> bool {
    let total_gap = x.iter().sum::<f64>() - y.iter().sum::<f64>();
    total_gap.abs() <= tol && submajorizes_weak_tol(x, y, tol)
}

/// Largest slack-free partial-sum gap `max_j (sum_{i<=j} y↓ - sum_{i<=j} x↓)`
/// over the common prefix; positive means some prefix of `x` is strictly
/// below the matching prefix of `y`.
pub fn max_partial_sum_gap(x: &[f64], y: &[f64]) -> f64 {
    let xs = sort_down(x);
    let ys = sort_down(y);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut best = f64::NEG_INFINITY;
    for (a, b) in xs.iter().zip(&ys) {
        lhs += a;
        rhs += b;
        best = best.max(rhs - lhs);
    }
    best
}

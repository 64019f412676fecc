//! Deterministic reductions and small order-statistic helpers.
//!
//! Every reduction in the crate goes through [`pairwise_sum_by`], which
//! splits the index range in halves recursively. The split points depend only
//! on the length, so a sum is bit-identical however the caller schedules the
//! surrounding work.

const LEAF: usize = 8;

/// Sum `term(0) + ... + term(len - 1)` by recursive halving.
#[inline]
pub fn pairwise_sum_by<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64,
{
    sum_range(0, len, &term)
}

fn sum_range<F>(lo: usize, hi: usize, term: &F) -> f64
where
    F: Fn(usize) -> f64,
{
    if hi - lo <= LEAF {
        let mut acc = 0.0;
        for k in lo..hi {
            acc += term(k);
        }
        acc
    } else {
        let mid = lo + (hi - lo) / 2;
        sum_range(lo, mid, term) + sum_range(mid, hi, term)
    }
}

pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_sum_by(values.len(), |k| values[k])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    pairwise_sum_by(a.len(), |k| a[k] * b[k])
}

/// Squared Euclidean distance from coordinate differences (no norm expansion).
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    pairwise_sum_by(a.len(), |k| {
        let d = a[k] - b[k];
        d * d
    })
}

/// Median of an already sorted slice; midpoint of the two central values for
/// even lengths.
pub fn sorted_median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "median of empty slice");
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Quantile by linear interpolation between order statistics at the 1-based
/// rank `(n - 1) * p + 1`.
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty slice");
    let pos = (n - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = pairwise_sum(x) / n;
    let my = pairwise_sum(y) / n;
    let sxy = pairwise_sum_by(x.len(), |k| (x[k] - mx) * (y[k] - my));
    let sxx = pairwise_sum_by(x.len(), |k| (x[k] - mx) * (x[k] - mx));
    sxy / sxx
}

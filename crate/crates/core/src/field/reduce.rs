//! Reductions whose result depends only on the input, never on how many
//! rayon workers happen to run them.
//!
//! Sums split at fixed midpoints (pairwise summation), so the tree of
//! additions is a function of the length alone. Min/max are exact and
//! order-independent for non-NaN input.

const LEAF: usize = 256;
const PAR_THRESHOLD: usize = 1 << 15;

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    let (lo, hi) = xs.split_at(mid);
    if xs.len() >= PAR_THRESHOLD {
        let (a, b) = rayon::join(|| pairwise_sum(lo), || pairwise_sum(hi));
        a + b
    } else {
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

/// Pairwise sum of `f(i)` for `i in 0..len` without materializing the terms
/// for short inputs.
pub fn pairwise_sum_by<F>(len: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    fn rec<F: Fn(usize) -> f64 + Sync>(lo: usize, hi: usize, f: &F) -> f64 {
        let len = hi - lo;
        if len <= LEAF {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            return acc;
        }
        let mid = lo + len / 2;
        if len >= PAR_THRESHOLD {
            let (a, b) = rayon::join(|| rec(lo, mid, f), || rec(mid, hi, f));
            a + b
        } else {
            rec(lo, mid, f) + rec(mid, hi, f)
        }
    }
    rec(0, len, f)
}

pub fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum_on_integers() {
        let xs: Vec<f64> = (0..100_000).map(|i| (i % 17) as f64).collect();
        let naive: f64 = xs.iter().sum();
        assert_eq!(pairwise_sum(&xs), naive);
        assert_eq!(pairwise_sum_by(xs.len(), &|i| xs[i]), naive);
    }

    #[test]
    fn independent_of_thread_count() {
        let xs: Vec<f64> = (0..200_003).map(|i| ((i as f64) * 0.37).sin()).collect();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| pairwise_sum(&xs));
        let eight = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| pairwise_sum(&xs));
        assert_eq!(one.to_bits(), eight.to_bits());
    }
}

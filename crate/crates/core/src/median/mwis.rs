//! Maximum-weight independent set on interval graphs.
//!
//! Two closed integer intervals are adjacent when they share a point, so an
//! independent set is a family of pairwise disjoint intervals. Sorting by
//! right end gives the usual weighted-interval-scheduling recursion.

/// A closed interval `[lo, hi]` with an integer weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightedInterval {
    pub lo: usize,
    pub hi: usize,
    pub weight: i64,
}

impl WeightedInterval {
    pub fn new(lo: usize, hi: usize, weight: i64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi, weight }
    }

    pub fn overlaps(&self, other: &WeightedInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Returns `α`, the maximum total weight of pairwise disjoint intervals, and
/// one set achieving it, sorted left to right.
///
/// An interval is only taken when it strictly improves the best value, so
/// intervals of weight `<= 0` are never chosen and ties resolve towards the
/// set found first in right-end order.
pub fn mwis_intervals(items: &[WeightedInterval]) -> (i64, Vec<WeightedInterval>) {
    let mut sorted: Vec<WeightedInterval> = items.to_vec();
    sorted.sort_by_key(|w| (w.hi, w.lo, w.weight));
    let n = sorted.len();
    // best[t]: optimum over the first t intervals in right-end order.
    let mut best = vec![0i64; n + 1];
    let mut take = vec![false; n + 1];
    let mut pred = vec![0usize; n + 1];
    for t in 0..n {
        let item = sorted[t];
        // Intervals ending strictly before `item.lo`.
        let p = sorted[..t].partition_point(|w| w.hi < item.lo);
        pred[t + 1] = p;
        let with = item.weight + best[p];
        if with > best[t] {
            best[t + 1] = with;
            take[t + 1] = true;
        } else {
            best[t + 1] = best[t];
        }
    }
    let mut chosen = Vec::new();
    let mut t = n;
    while t > 0 {
        if take[t] {
            chosen.push(sorted[t - 1]);
            t = pred[t];
        } else {
            t -= 1;
        }
    }
    chosen.reverse();
    (best[n], chosen)
}
